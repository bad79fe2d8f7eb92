"""Coarse thermal sensors, a z-score stealth metric and victim throttling."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import DomainError
from .geometry import StackGeometry, coord_of
from .solver import TemperatureTrace

DEFAULT_FLOOR_SIGMA = 0.05  # K


class Grouping(str, Enum):
    PER_BANK = "per_bank"
    PER_LAYER = "per_layer"
    PER_QUADRANT = "per_quadrant"


@dataclass(frozen=True)
class SensorModel:
    grouping: Grouping = Grouping.PER_LAYER
    sample_period: float = 1e-3
    noise_sigma: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "grouping", Grouping(self.grouping))
        if not self.sample_period > 0:
            raise DomainError("sample_period must be positive")
        if self.noise_sigma < 0:
            raise DomainError("noise_sigma must be nonnegative")


@dataclass(frozen=True, eq=False)
class SensorTrace:
    sample_period: float
    readings: np.ndarray           # samples x sensors, K above ambient
    sensor_map: tuple              # sensor -> tuple of banks

    @property
    def n_sensors(self):
        return len(self.sensor_map)


@dataclass(frozen=True)
class ThrottlePolicy:
    threshold: float = 10.0
    hysteresis: float = 2.0
    stall_penalty: float = 1.0

    def __post_init__(self):
        if not self.threshold > self.hysteresis >= 0:
            raise DomainError("need threshold > hysteresis >= 0")
        if self.stall_penalty < 0:
            raise DomainError("stall_penalty must be nonnegative")


@dataclass(frozen=True)
class ImpactReport:
    victim: int
    peak_theta: float
    time_above_threshold: float
    throttle_events: int
    estimated_stall: float
    stealth_score: float = 0.0


def sensor_groups(geom: StackGeometry, grouping) -> tuple:
    grouping = Grouping(grouping)
    n = geom.total_banks
    if grouping is Grouping.PER_BANK:
        return tuple((b,) for b in range(n))
    groups = {}
    for b in range(n):
        c = coord_of(b, geom)
        if grouping is Grouping.PER_LAYER:
            key = (c.layer,)
        else:
            key = (c.layer, 2 * c.row // geom.depth, 2 * c.col // geom.width)
        groups.setdefault(key, []).append(b)
    return tuple(tuple(groups[k]) for k in sorted(groups))


def read_sensors(trace: TemperatureTrace, model: SensorModel, seed: int = 0,
                 geom: StackGeometry = None) -> SensorTrace:
    """Point-sample group means every ``sample_period``, plus seeded Gaussian noise.

    ``geom`` is needed for layer and quadrant grouping; without it the trace
    is treated as a single column of banks.
    """
    if geom is None:
        geom = StackGeometry(1, 1, trace.n)
    if geom.total_banks != trace.n:
        raise DomainError("geometry does not match the trace")
    ratio = model.sample_period / trace.dt
    stride = int(round(ratio))
    if stride < 1 or abs(ratio - stride) > 1e-9 * ratio:
        raise DomainError(
            f"sample period {model.sample_period} is not a multiple of trace dt {trace.dt}")
    groups = sensor_groups(geom, model.grouping)
    rows = trace.values[::stride]
    readings = np.stack([rows[:, list(g)].mean(axis=1) for g in groups], axis=1)
    if model.noise_sigma > 0:
        rng = np.random.Generator(np.random.PCG64(int(seed) % 2**64))
        readings = readings + rng.normal(0.0, model.noise_sigma, size=readings.shape)
    return SensorTrace(model.sample_period, readings, groups)


def baseline_stats(trace: SensorTrace):
    """Per-sensor ``(mean, std)`` arrays; std uses the n-1 denominator."""
    if trace.readings.shape[0] < 2:
        raise DomainError("baseline needs at least two samples")
    return trace.readings.mean(axis=0), trace.readings.std(axis=0, ddof=1)


def stealth_score(attack: SensorTrace, baseline, floor_sigma: float = DEFAULT_FLOOR_SIGMA) -> float:
    """Largest z-score of any attack reading against the baseline (lower is stealthier)."""
    mean, std = (np.asarray(x, dtype=float) for x in baseline)
    if mean.shape != (attack.n_sensors,) or std.shape != mean.shape:
        raise DomainError(
            f"baseline covers {mean.shape[0]} sensors, attack trace has {attack.n_sensors}")
    if not floor_sigma > 0:
        raise DomainError("floor_sigma must be positive")
    z = (attack.readings - mean) / np.maximum(std, floor_sigma)
    return float(z.max())


def throttle_states(theta, policy: ThrottlePolicy):
    """Engaged flag per sample of the hysteresis automaton."""
    engaged = False
    out = np.zeros(len(theta), dtype=bool)
    release = policy.threshold - policy.hysteresis
    for k, v in enumerate(theta):
        if not engaged and v >= policy.threshold:
            engaged = True
        elif engaged and v < release:
            engaged = False
        out[k] = engaged
    return out


def victim_impact(trace: TemperatureTrace, victim: int, policy: ThrottlePolicy = ThrottlePolicy(),
                  stealth: float = 0.0) -> ImpactReport:
    """Peak, throttling and stall for ``victim``.

    The throttle state seen at sample ``k`` is held until sample ``k+1``,
    so the final sample contributes no time.
    """
    if not 0 <= victim < trace.n:
        raise DomainError(f"victim {victim} outside [0, {trace.n})")
    theta = trace.values[:, victim]
    states = throttle_states(theta, policy)
    events = int(states[0]) + int(np.count_nonzero(states[1:] & ~states[:-1]))
    engaged = float(np.count_nonzero(states[:-1]) * trace.dt)
    return ImpactReport(
        victim=int(victim),
        peak_theta=float(max(theta.max(), 0.0)),
        time_above_threshold=engaged,
        throttle_events=events,
        estimated_stall=engaged * policy.stall_penalty,
        stealth_score=float(stealth),
    )
