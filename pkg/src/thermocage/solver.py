"""Steady-state and transient integration of ``C dθ/dt + G θ = P``.

Transients use backward Euler, ``(C/dt + G) θ' = (C/dt) θ + p``. The
operator is constant for a run, so it is factored once and every step is
a pair of triangular solves. ``reference_simulate`` is an independent
dense explicit-Euler integrator used as a ground truth in tests.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DomainError, ModelError, NumericalError, OracleError
from .network import ThermalNetwork
from .power import PowerTrace

RESIDUAL_FLOOR = 1e-300


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-4
    linear_tolerance: float = 1e-10
    max_iterations: int = 10_000
    method: str = "direct"  # "direct" (sparse LU) or "cg" (Jacobi PCG)

    def __post_init__(self):
        if not self.dt > 0:
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        if not 0 < self.linear_tolerance < 1:
            raise DomainError("linear_tolerance must lie in (0, 1)")
        if self.max_iterations < 1:
            raise DomainError("max_iterations must be at least 1")
        if self.method not in ("direct", "cg"):
            raise DomainError(f"unknown linear solver method {self.method!r}")


@dataclass(frozen=True, eq=False)
class TemperatureTrace:
    """θ records; row ``k`` is the state at ``start_time + k*dt``.

    Row 0 is the initial state, so a run of ``steps`` power cells yields
    ``steps + 1`` rows.
    """

    dt: float
    values: np.ndarray
    t_ambient: float
    start_time: float = 0.0
    max_residual: float = 0.0

    @property
    def steps(self):
        return self.values.shape[0] - 1

    @property
    def n(self):
        return self.values.shape[1]

    @property
    def times(self):
        return self.start_time + self.dt * np.arange(self.values.shape[0])

    def absolute(self):
        return self.values + self.t_ambient


def pcg(A, b, x0=None, tol=1e-10, maxiter=10_000):
    """Jacobi-preconditioned conjugate gradients for SPD ``A``.

    Stops when ``||b - A x|| <= tol * ||b||``. Returns ``(x, relres, iters)``
    and raises NumericalError if the bound is not met within ``maxiter``.
    """
    b = np.asarray(b, dtype=float)
    x = np.zeros_like(b) if x0 is None else np.array(x0, dtype=float)
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return np.zeros_like(b), 0.0, 0
    inv_diag = 1.0 / A.diagonal()
    r = b - A @ x
    z = inv_diag * r
    d = z.copy()
    rz = r @ z
    relres = np.linalg.norm(r) / bnorm
    k = 0
    while relres > tol:
        if k >= maxiter:
            raise NumericalError(
                f"CG stopped after {k} iterations at relative residual {relres:.3e}", relres)
        Ad = A @ d
        dAd = d @ Ad
        if dAd <= 0:
            raise NumericalError("operator is not positive definite", relres)
        alpha = rz / dAd
        x += alpha * d
        r -= alpha * Ad
        z = inv_diag * r
        rz_new = r @ z
        d = z + (rz_new / rz) * d
        rz = rz_new
        k += 1
        relres = np.linalg.norm(r) / bnorm
    # recompute the true residual; the recursive one drifts
    relres = np.linalg.norm(b - A @ x) / bnorm
    if relres > tol:
        raise NumericalError(f"CG residual drifted to {relres:.3e}", relres)
    return x, relres, k


def steady_state(net: ThermalNetwork, p, cfg: SolverConfig = SolverConfig()):
    """Solve ``G θ = p``; requires a path to the sink."""
    p = np.asarray(p, dtype=float)
    if p.shape != (net.n,):
        raise DomainError(f"power vector has shape {p.shape}, expected ({net.n},)")
    if not net.has_sink:
        raise ModelError("network has no sink coupling; steady state is undefined")
    if cfg.method == "direct":
        theta = spla.spsolve(net.conductance.tocsc(), p)
        relres = _relres(net.conductance, theta, p)
        if relres > cfg.linear_tolerance:
            raise NumericalError(f"direct solve residual {relres:.3e}", relres)
        return theta
    theta, _, _ = pcg(net.conductance, p, tol=cfg.linear_tolerance, maxiter=cfg.max_iterations)
    return theta


def _relres(A, x, b):
    bnorm = np.linalg.norm(b)
    r = np.linalg.norm(A @ x - b)
    return r / bnorm if bnorm > 0 else r


class ImplicitStepper:
    """Backward-Euler stepper with the system operator prepared once."""

    def __init__(self, net: ThermalNetwork, dt: float, cfg: SolverConfig = SolverConfig()):
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt!r}")
        self.net = net
        self.dt = dt
        self.cfg = cfg
        self.c_over_dt = net.capacitance / dt
        self.A = (sp.diags(self.c_over_dt) + net.conductance).tocsr()
        self._lu = spla.splu(self.A.tocsc()) if cfg.method == "direct" else None
        self.max_residual = 0.0

    def step(self, theta, p):
        b = self.c_over_dt * theta + p
        if self._lu is not None:
            new = self._lu.solve(b)
            relres = _relres(self.A, new, b)
            if relres > self.cfg.linear_tolerance:
                raise NumericalError(f"implicit step residual {relres:.3e}", relres)
        else:
            new, relres, _ = pcg(self.A, b, x0=theta, tol=self.cfg.linear_tolerance,
                                 maxiter=self.cfg.max_iterations)
        self.max_residual = max(self.max_residual, relres)
        return new

    def run(self, power_values, theta0):
        steps = power_values.shape[0]
        out = np.empty((steps + 1, self.net.n))
        out[0] = theta0
        theta = out[0]
        for k in range(steps):
            theta = self.step(theta, power_values[k])
            out[k + 1] = theta
        return out


def step(net: ThermalNetwork, theta, p, dt, cfg: SolverConfig = SolverConfig()):
    """One backward-Euler step from ``theta`` under constant power ``p``."""
    theta = np.asarray(theta, dtype=float)
    p = np.asarray(p, dtype=float)
    if theta.shape != (net.n,) or p.shape != (net.n,):
        raise DomainError("state and power vectors must both have length n")
    return ImplicitStepper(net, dt, cfg).step(theta, p)


def _initial(net, theta0):
    if theta0 is None:
        return np.zeros(net.n)
    theta0 = np.asarray(theta0, dtype=float)
    if theta0.shape != (net.n,):
        raise DomainError(f"initial state has shape {theta0.shape}, expected ({net.n},)")
    return theta0


def _check_power(net, power, dt):
    if power.n_banks != net.n:
        raise DomainError(f"power trace covers {power.n_banks} banks, network has {net.n}")
    if dt is not None and not np.isclose(power.dt, dt, rtol=1e-12, atol=0):
        raise DomainError(f"power trace dt {power.dt} differs from solver dt {dt}")


def simulate(net: ThermalNetwork, power: PowerTrace, theta0=None,
             cfg: SolverConfig = SolverConfig(), stepper: ImplicitStepper = None) -> TemperatureTrace:
    """Integrate ``power`` from ``theta0`` (ambient when None).

    A prepared ``stepper`` for the same network and dt may be passed to
    reuse its factorization across many runs.
    """
    _check_power(net, power, cfg.dt)
    theta0 = _initial(net, theta0)
    if stepper is None:
        stepper = ImplicitStepper(net, cfg.dt, cfg)
    stepper.max_residual = 0.0
    values = stepper.run(power.values, theta0)
    return TemperatureTrace(cfg.dt, values, net.t_ambient, max_residual=stepper.max_residual)


def _explicit_block(phi, m):
    """``(phi**m, sum_{j<m} phi**j)`` by binary doubling; exact same sums as
    stepping explicit Euler ``m`` times under constant input."""
    n = phi.shape[0]
    eye = np.eye(n)
    acc_p, acc_s = eye.copy(), np.zeros((n, n))
    base_p, base_s = phi.copy(), eye.copy()
    while m:
        if m & 1:
            acc_s = acc_s + acc_p @ base_s
            acc_p = acc_p @ base_p
        m >>= 1
        if m:
            base_s = base_s + base_p @ base_s
            base_p = base_p @ base_p
    return acc_p, acc_s


def reference_simulate(net: ThermalNetwork, power: PowerTrace, theta0=None,
                       refinement: int = 10_000, literal: bool = False) -> TemperatureTrace:
    """Dense explicit Euler at ``power.dt / refinement``, sampled every ``power.dt``.

    With ``literal=True`` the fine steps are taken one by one; otherwise the
    ``refinement`` sub-steps of each coarse interval are applied as a single
    precomputed dense block, which is algebraically the same recurrence.
    """
    if net.n > 64:
        raise DomainError("reference_simulate is limited to 64 banks")
    if refinement < 1:
        raise DomainError("refinement must be positive")
    _check_power(net, power, None)
    theta = _initial(net, theta0).copy()
    G = net.dense()
    h = power.dt / refinement
    lam_max = np.linalg.eigvalsh(G)[-1]
    limit = 2.0 * net.capacitance.min() / lam_max if lam_max > 0 else np.inf
    if h > limit:
        need = int(np.ceil(power.dt / limit)) + 1
        raise OracleError(f"explicit step {h:.3e} s exceeds stability limit {limit:.3e} s; "
                          f"use refinement >= {need}")
    inv_c = 1.0 / net.capacitance
    phi = np.eye(net.n) - h * inv_c[:, None] * G
    out = np.empty((power.steps + 1, net.n))
    out[0] = theta
    if literal:
        for k in range(power.steps):
            drive = h * inv_c * power.values[k]
            for _ in range(refinement):
                theta = phi @ theta + drive
            out[k + 1] = theta
    else:
        block_p, block_s = _explicit_block(phi, refinement)
        gain = block_s * (h * inv_c)[None, :]
        for k in range(power.steps):
            theta = block_p @ theta + gain @ power.values[k]
            out[k + 1] = theta
    return TemperatureTrace(power.dt, out, net.t_ambient)


def energy_residual(net: ThermalNetwork, trace: TemperatureTrace, power: PowerTrace):
    """Per-step ``||(C/dt)(θ' - θ) + G θ' - p||_2``."""
    th = trace.values
    lhs = (net.capacitance / trace.dt) * (th[1:] - th[:-1]) + (net.conductance @ th[1:].T).T
    return np.linalg.norm(lhs - power.values, axis=1)
