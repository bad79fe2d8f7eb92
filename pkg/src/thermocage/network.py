"""Assembly of the RC thermal network ``C dθ/dt + G θ = P``.

Temperatures are carried as rise over ambient, θ = T - t_ambient, so the
sink enters only through the diagonal of G and superposition is exact.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DomainError
from .geometry import Link, StackGeometry, edges


@dataclass(frozen=True)
class MaterialParams:
    r_lat: float = 2.0        # K/W between in-plane neighbours
    r_vert: float = 20.0      # K/W between stacked neighbours
    c_bank: float = 5e-3      # J/K per bank
    r_sink: float = 10.0      # K/W from each sink-side bank to ambient
    t_ambient: float = 318.15  # K

    def __post_init__(self):
        for name in ("r_lat", "r_vert", "c_bank", "r_sink", "t_ambient"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be a finite positive number, got {value!r}")


@dataclass(frozen=True, eq=False)
class ThermalNetwork:
    geometry: StackGeometry
    conductance: sp.csr_matrix
    capacitance: np.ndarray
    sink_conductance: np.ndarray
    t_ambient: float
    params: MaterialParams = field(default_factory=MaterialParams)

    @property
    def n(self):
        return self.conductance.shape[0]

    @property
    def has_sink(self):
        return bool(np.any(self.sink_conductance > 0))

    def dense(self):
        return self.conductance.toarray()

    def heat_flow(self, theta):
        """Net heat leaving each node, ``G θ`` (W)."""
        return self.conductance @ np.asarray(theta, dtype=float)


def pairwise_flux(t_i: float, t_j: float, r: float) -> float:
    """Heat flow from node i to node j through resistance ``r`` (W)."""
    if not r > 0:
        raise DomainError(f"thermal resistance must be positive, got {r!r}")
    return (t_i - t_j) / r


def build_network(geom: StackGeometry, params: MaterialParams = MaterialParams(),
                  sink_layers=(0,)) -> ThermalNetwork:
    """Assemble G and C for ``geom``.

    ``sink_layers`` lists the layers whose banks couple to ambient through
    ``r_sink``; the default is the logic-die side only. Pass ``()`` to
    detach the sink entirely or ``(0, geom.layers - 1)`` for two-sided
    cooling.
    """
    if not isinstance(params, MaterialParams):
        raise DomainError("params must be a MaterialParams")
    for layer in sink_layers:
        if not 0 <= layer < geom.layers:
            raise DomainError(f"sink layer {layer} outside [0, {geom.layers})")

    n = geom.total_banks
    rows, cols, vals = [], [], []
    diag = np.zeros(n)
    g_lat, g_vert = 1.0 / params.r_lat, 1.0 / params.r_vert
    for i, j, kind in edges(geom):
        g = g_lat if kind is Link.LATERAL else g_vert
        rows += [i, j]
        cols += [j, i]
        vals += [-g, -g]
        diag[i] += g
        diag[j] += g

    sink = np.zeros(n)
    per_layer = geom.banks_per_layer
    for layer in sorted(set(sink_layers)):
        sink[layer * per_layer:(layer + 1) * per_layer] = 1.0 / params.r_sink
    diag += sink

    rows += list(range(n))
    cols += list(range(n))
    vals += list(diag)
    G = sp.csr_matrix((vals, (rows, cols)), shape=(n, n))
    G.sort_indices()
    return ThermalNetwork(
        geometry=geom,
        conductance=G,
        capacitance=np.full(n, float(params.c_bank)),
        sink_conductance=sink,
        t_ambient=float(params.t_ambient),
        params=params,
    )
