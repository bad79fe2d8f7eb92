"""Per-bank power stimuli and their compilation onto the time grid."""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

log = logging.getLogger(__name__)

_SNAP = 1e-9  # grid-unit tolerance for treating a boundary as on-grid


@dataclass(frozen=True)
class PulseSpec:
    bank: int
    t_start: float
    duration: float
    amplitude: float = 1.0  # watts; the "1 power unit" of the attack

    def __post_init__(self):
        if self.t_start < 0 or self.duration < 0 or self.amplitude < 0:
            raise DomainError(f"pulse fields must be nonnegative: {self}")
        if isinstance(self.bank, bool) or int(self.bank) != self.bank or self.bank < 0:
            raise DomainError(f"pulse bank must be a nonnegative integer, got {self.bank!r}")

    @property
    def t_end(self):
        return self.t_start + self.duration

    @property
    def energy(self):
        return self.amplitude * self.duration


@dataclass(frozen=True)
class WorkloadSpec:
    banks: tuple
    seed: int = 0
    burst_duration: float = 5e-3
    cooldown_duration: float = 5e-3
    amplitude: float = 0.2
    duty_jitter: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "banks", tuple(int(b) for b in self.banks))
        if self.burst_duration <= 0 or self.cooldown_duration <= 0:
            raise DomainError("burst and cooldown durations must be positive")
        if self.amplitude < 0:
            raise DomainError("amplitude must be nonnegative")
        if not 0 <= self.duty_jitter < 1:
            raise DomainError("duty_jitter must lie in [0, 1)")


@dataclass(frozen=True, eq=False)
class PowerTrace:
    """Piecewise-constant power: ``values[k]`` applies on ``[k dt, (k+1) dt)``."""

    dt: float
    values: np.ndarray
    truncated_energy: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 2:
            raise DomainError("power values must be a steps x banks array")
        if not np.all(np.isfinite(v)) or np.any(v < 0):
            raise DomainError("power values must be finite and nonnegative")
        object.__setattr__(self, "values", v)

    @property
    def steps(self):
        return self.values.shape[0]

    @property
    def n_banks(self):
        return self.values.shape[1]

    @property
    def horizon(self):
        return self.steps * self.dt

    @classmethod
    def zeros(cls, dt, steps, n_banks):
        return cls(dt, np.zeros((steps, n_banks)))


def grid_steps(horizon, dt):
    """Number of whole steps covering ``horizon``, tolerant of float noise."""
    if dt <= 0:
        raise DomainError(f"dt must be positive, got {dt!r}")
    if horizon < 0:
        raise DomainError(f"horizon must be nonnegative, got {horizon!r}")
    units = horizon / dt
    nearest = round(units)
    if abs(units - nearest) <= _SNAP * max(1.0, nearest):
        return int(nearest)
    return int(math.ceil(units))


def _to_grid(t, dt):
    u = t / dt
    nearest = round(u)
    if abs(u - nearest) <= _SNAP * max(1.0, abs(nearest)):
        return float(nearest)
    return u


def compile_pulses(pulses, dt, horizon, n_banks) -> PowerTrace:
    """Deposit rectangular pulses on a ``dt`` grid covering ``horizon``.

    Boundary cells receive the covered fraction of the amplitude, so each
    pulse's energy survives any misalignment with the grid. Energy past the
    horizon is dropped and accumulated in ``truncated_energy``.
    """
    steps = grid_steps(horizon, dt)
    values = np.zeros((steps, n_banks))
    dropped = 0.0
    for p in pulses:
        if not 0 <= p.bank < n_banks:
            raise DomainError(f"pulse bank {p.bank} outside [0, {n_banks})")
        if p.duration == 0 or p.amplitude == 0:
            continue
        u0, u1 = _to_grid(p.t_start, dt), _to_grid(p.t_end, dt)
        if u1 > steps:
            dropped += p.amplitude * (u1 - max(u0, steps)) * dt
            u1 = float(steps)
        if u1 <= u0:
            continue
        k0, k1 = int(math.floor(u0)), int(math.ceil(u1))
        cells = np.arange(k0, k1)
        cover = np.minimum(u1, cells + 1.0) - np.maximum(u0, cells.astype(float))
        values[k0:k1, p.bank] += p.amplitude * cover
    if dropped > 0:
        log.warning("%.3g J of pulse energy beyond the %.4g s horizon was dropped",
                    dropped, horizon)
    return PowerTrace(dt, values, dropped)


def _bank_rng(seed, bank):
    # PCG64 seeded through SeedSequence([seed mod 2**64, bank]).
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed) % 2**64, bank])))


def benign_workload(spec: WorkloadSpec, horizon: float) -> list[PulseSpec]:
    """Square-wave bursts on every bank of ``spec``.

    Each cycle draws two uniforms in [-1, 1) that scale the burst and the
    cooldown by ``1 + duty_jitter * u``. The final burst is clipped at the
    horizon.
    """
    out = []
    for bank in spec.banks:
        rng = _bank_rng(spec.seed, bank)
        t = 0.0
        while t < horizon and not math.isclose(t, horizon, rel_tol=0, abs_tol=1e-15):
            u, v = rng.uniform(-1.0, 1.0, size=2)
            burst = spec.burst_duration * (1.0 + spec.duty_jitter * u)
            cool = spec.cooldown_duration * (1.0 + spec.duty_jitter * v)
            out.append(PulseSpec(bank, t, min(burst, horizon - t), spec.amplitude))
            t += burst + cool
    return out


def superpose(a: PowerTrace, b: PowerTrace) -> PowerTrace:
    if a.dt != b.dt or a.values.shape != b.values.shape:
        raise DomainError(
            f"cannot superpose traces of shape {a.values.shape}@{a.dt} and {b.values.shape}@{b.dt}")
    return PowerTrace(a.dt, a.values + b.values, a.truncated_energy + b.truncated_energy)


def total_energy(trace: PowerTrace) -> float:
    return float(trace.values.sum() * trace.dt)
