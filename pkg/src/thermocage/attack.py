"""Thermal-cage planning: delay measurement, pulse staggering, offset search."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .errors import DomainError, MeasurementError, PlanningError
from .geometry import Link, StackGeometry, neighbors
from .network import ThermalNetwork
from .power import PulseSpec, compile_pulses, grid_steps
from .solver import ImplicitStepper, SolverConfig, simulate

_EPS = 1e-12


class LateralSet(str, Enum):
    ALL4 = "all4"
    ROW_PAIR = "row_pair"  # the row neighbours id-1 and id+1


@dataclass(frozen=True)
class CageParams:
    vertical_duration: float = 0.020
    lateral_duration: float = 0.005
    vertical_amplitude: float = 1.0
    lateral_amplitude: float = 1.0
    cooldown: float = 0.005
    n_cycles: int = 1
    lateral_set: LateralSet = LateralSet.ALL4

    def __post_init__(self):
        object.__setattr__(self, "lateral_set", LateralSet(self.lateral_set))
        if self.vertical_duration <= 0 or self.lateral_duration <= 0:
            raise DomainError("pulse durations must be positive")
        if self.vertical_amplitude < 0 or self.lateral_amplitude < 0:
            raise DomainError("amplitudes must be nonnegative")
        if self.cooldown < 0:
            raise DomainError("cooldown must be nonnegative")
        if self.n_cycles < 1:
            raise DomainError("n_cycles must be at least 1")


@dataclass(frozen=True)
class AttackEntry:
    attacker: int
    offset: float
    duration: float
    amplitude: float


@dataclass(frozen=True)
class AttackPlan:
    victim: int
    entries: tuple
    cycle_period: float
    n_cycles: int = 1

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if self.n_cycles < 1:
            raise DomainError("n_cycles must be at least 1")
        for e in self.entries:
            if e.attacker == self.victim:
                raise DomainError(f"victim {self.victim} cannot attack itself")
            if e.offset < 0 or e.duration < 0 or e.amplitude < 0:
                raise DomainError(f"negative timing or amplitude in {e}")
            if e.offset + e.duration > self.cycle_period * (1 + 1e-12) + _EPS:
                raise DomainError(f"{e} does not fit in cycle period {self.cycle_period}")

    @property
    def attackers(self):
        return tuple(e.attacker for e in self.entries)

    @property
    def cycle_energy(self):
        return sum(e.amplitude * e.duration for e in self.entries)

    @property
    def total_energy(self):
        return self.cycle_energy * self.n_cycles


def plan_to_pulses(plan: AttackPlan) -> list[PulseSpec]:
    return [PulseSpec(e.attacker, c * plan.cycle_period + e.offset, e.duration, e.amplitude)
            for e in plan.entries for c in range(plan.n_cycles)]


def propagation_delay(net: ThermalNetwork, src: int, dst: int, probe: PulseSpec = None,
                      cfg: SolverConfig = SolverConfig(), horizon: float = 0.05,
                      max_horizon: float = 2.0, stepper=None) -> float:
    """Time from probe onset at ``src`` to the steepest rise of θ at ``dst``.

    The default probe is a 1 W step held for the whole horizon, for which
    the steepest rise sits at the peak of the path's impulse response. If
    the rise is still accelerating at the end of the window the horizon is
    doubled, up to ``max_horizon``.
    """
    n = net.n
    for b in (src, dst):
        if not 0 <= b < n:
            raise DomainError(f"bank {b} outside [0, {n})")
    if src == dst:
        return 0.0
    if stepper is None:
        stepper = ImplicitStepper(net, cfg.dt, cfg)
    while True:
        pulse = probe if probe is not None else PulseSpec(src, 0.0, horizon, 1.0)
        if pulse.bank != src:
            pulse = replace(pulse, bank=src)
        power = compile_pulses([replace(pulse, t_start=0.0)], cfg.dt, horizon, n)
        theta = stepper.run(power.values, np.zeros(n))[:, dst]
        floor = 1e-12 * max(pulse.amplitude, _EPS)
        rate = np.diff(theta)
        top = rate.max()
        # earliest sample at the maximum; rounding noise must not pick a later one
        k = int(np.argmax(rate >= top - 1e-9 * abs(top)))
        if theta.max() > floor and k < len(rate) - 1:
            return (k + 1) * cfg.dt
        if horizon * 2 > max_horizon * (1 + 1e-12):
            if theta.max() <= floor:
                raise MeasurementError(
                    f"bank {dst} never warmed above {floor:.1e} K within {horizon:.4g} s; "
                    "try a longer horizon or a stronger probe")
            raise MeasurementError(
                f"rise at bank {dst} still accelerating at {horizon:.4g} s; use a longer horizon")
        horizon *= 2


def cage_attackers(victim: int, geom: StackGeometry, lateral_set=LateralSet.ALL4):
    """``[(bank, Link)]`` forming the cage, verticals first."""
    near = neighbors(victim, geom)
    vertical = [(b, k) for b, k in near if k is Link.VERTICAL]
    lateral = [(b, k) for b, k in near if k is Link.LATERAL]
    if LateralSet(lateral_set) is LateralSet.ROW_PAIR:
        lateral = [(b, k) for b, k in lateral if abs(b - victim) == 1]
    return vertical + lateral


def plan_cage(victim: int, geom: StackGeometry, net: ThermalNetwork,
              params: CageParams = CageParams(), cfg: SolverConfig = SolverConfig()) -> AttackPlan:
    """Stagger pulses on the victim's neighbours so their heat arrives together.

    Each attacker starts ``max_delay - own_delay`` into the cycle. Lateral
    pulses are shorter, so they are pushed a further half of the
    duration difference to sit in the middle of the vertical heating phase.
    """
    if geom != net.geometry:
        raise DomainError("geometry does not match the network")
    cage = cage_attackers(victim, geom, params.lateral_set)
    if not cage:
        raise PlanningError(f"bank {victim} has no neighbours to attack from")

    stepper = ImplicitStepper(net, cfg.dt, cfg)
    delays = [propagation_delay(net, b, victim, cfg=cfg, stepper=stepper) for b, _ in cage]
    latest = max(delays)
    has_vertical = any(k is Link.VERTICAL for _, k in cage)
    centre = max(params.vertical_duration - params.lateral_duration, 0.0) / 2 if has_vertical else 0.0

    entries = []
    for (bank, kind), d in zip(cage, delays):
        if kind is Link.VERTICAL:
            entries.append(AttackEntry(bank, latest - d, params.vertical_duration,
                                       params.vertical_amplitude))
        else:
            entries.append(AttackEntry(bank, latest - d + centre, params.lateral_duration,
                                       params.lateral_amplitude))
    return _with_cycle(victim, entries, params.cooldown, params.n_cycles)


def _with_cycle(victim, entries, cooldown, n_cycles):
    end = max(e.offset + e.duration for e in entries) if entries else 0.0
    return AttackPlan(victim, tuple(entries), end + cooldown, n_cycles)


def _cooldown(plan):
    end = max((e.offset + e.duration for e in plan.entries), default=0.0)
    return max(plan.cycle_period - end, 0.0)


def _rescaled(entries, budget):
    energy = sum(e.amplitude * e.duration for e in entries)
    if budget is None or energy == 0:
        return entries
    scale = budget / energy
    return [replace(e, amplitude=e.amplitude * scale) for e in entries]


def victim_peak(net: ThermalNetwork, victim: int, entries, horizon: float,
                cfg: SolverConfig = SolverConfig(), stepper=None) -> float:
    """Peak victim θ over ``[0, horizon]`` for a single cycle of ``entries``."""
    pulses = [PulseSpec(e.attacker, e.offset, e.duration, e.amplitude) for e in entries]
    power = compile_pulses(pulses, cfg.dt, horizon, net.n)
    trace = simulate(net, power, cfg=cfg, stepper=stepper)
    return float(trace.values[:, victim].max())


def _candidates(offset, window, grid):
    k = int(np.floor(window / grid + 1e-9))
    values = [offset + j * grid for j in range(-k, k + 1)]
    values = [v for v in values if v >= -_EPS]
    if offset - window <= _EPS:
        values.append(0.0)
    return sorted({round(max(v, 0.0), 15) for v in values})


def refine_offsets(net: ThermalNetwork, plan: AttackPlan, window: float, grid: float,
                   budget: float = None, cfg: SolverConfig = SolverConfig(),
                   max_sweeps: int = 25, workers: int = None) -> AttackPlan:
    """Coordinate-descent grid search on the entry offsets.

    Entries are visited in ascending attacker id. Each one scans the grid
    ``offset + j*grid`` inside ``[max(0, offset - window), offset + window]``
    (its starting offset is the centre) with the others held fixed, and
    moves only on a strict improvement of the victim peak. Sweeps repeat
    until nothing moves. With ``budget`` set, amplitudes are rescaled so
    one cycle delivers exactly ``budget`` joules.
    """
    if grid < cfg.dt * (1 - 1e-9) or window < grid * (1 - 1e-9):
        raise DomainError("need grid >= dt and window >= grid")
    cooldown = _cooldown(plan)
    horizon = plan.cycle_period + window
    horizon = grid_steps(horizon, cfg.dt) * cfg.dt

    entries = _rescaled(list(plan.entries), budget)
    if not entries:
        return plan
    stepper = ImplicitStepper(net, cfg.dt, cfg)
    pool = ThreadPoolExecutor(workers) if workers and workers > 1 else None

    def evaluate(batch):
        if pool is None:
            return [victim_peak(net, plan.victim, es, horizon, cfg, stepper) for es in batch]
        # independent steppers: the shared one keeps per-run residual state
        return list(pool.map(lambda es: victim_peak(net, plan.victim, es, horizon, cfg), batch))

    order = sorted(range(len(entries)), key=lambda i: (entries[i].attacker, i))
    grids = {i: _candidates(entries[i].offset, window, grid) for i in order}
    best = evaluate([entries])[0]
    try:
        for _ in range(max_sweeps):
            moved = False
            for i in order:
                trial = [entries[:i] + [replace(entries[i], offset=o)] + entries[i + 1:]
                         for o in grids[i]]
                scores = evaluate(trial)
                j = int(np.argmax(scores))
                if scores[j] > best:
                    best = scores[j]
                    entries = trial[j]
                    moved = True
            if not moved:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return _with_cycle(plan.victim, entries, cooldown, plan.n_cycles)


def plan_objective(net: ThermalNetwork, plan: AttackPlan, window: float = 0.0,
                   budget: float = None, cfg: SolverConfig = SolverConfig()) -> float:
    """The objective ``refine_offsets`` maximizes, for the same ``window``."""
    horizon = grid_steps(plan.cycle_period + window, cfg.dt) * cfg.dt
    return victim_peak(net, plan.victim, _rescaled(list(plan.entries), budget), horizon, cfg)
