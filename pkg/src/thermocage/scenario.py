"""Scenario documents and end-to-end runs.

A scenario is a JSON object; times are seconds, temperatures kelvin and
power watts. Unknown keys are rejected so a misspelt field never silently
falls back to its default.
"""

import hashlib
import json
import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .attack import (AttackEntry, AttackPlan, CageParams, LateralSet, plan_cage,
                     plan_to_pulses, refine_offsets)
from .errors import DomainError, ValidationError
from .geometry import StackGeometry
from .network import MaterialParams, build_network
from .power import PulseSpec, WorkloadSpec, benign_workload, compile_pulses, grid_steps, superpose
from .solver import SolverConfig, energy_residual, simulate
from .telemetry import (DEFAULT_FLOOR_SIGMA, Grouping, SensorModel, ThrottlePolicy, baseline_stats,
                        read_sensors, stealth_score, victim_impact)

TEMPERATURE_CSV = "temperature.csv"
SENSOR_CSV = "sensors.csv"
SUMMARY_JSON = "summary.json"
PLAN_JSON = "plan.json"


@dataclass(frozen=True)
class RefineSpec:
    window: float = 2e-3
    grid: float = 1e-4
    budget: float = None


@dataclass(frozen=True)
class AttackSpec:
    victim: int
    mode: str = "cage"  # "cage" or "manual"
    cage_params: CageParams = CageParams()
    manual_plan: AttackPlan = None
    refine: RefineSpec = None


@dataclass(frozen=True)
class Outputs:
    trace_subsample: int = 1
    emit_sensor_trace: bool = False


@dataclass(frozen=True)
class Scenario:
    geometry: StackGeometry = StackGeometry()
    material: MaterialParams = MaterialParams()
    solver: SolverConfig = SolverConfig()
    horizon: float = 0.1
    initial: tuple = None  # None: everything at ambient
    pulses: tuple = ()
    workloads: tuple = ()
    attack: AttackSpec = None
    sensors: SensorModel = SensorModel()
    floor_sigma: float = DEFAULT_FLOOR_SIGMA
    throttle: ThrottlePolicy = ThrottlePolicy()
    seed: int = 0
    sink_layers: tuple = (0,)
    outputs: Outputs = Outputs()


@dataclass(frozen=True)
class RunArtifacts:
    temperature_csv: Path = None
    sensor_csv: Path = None
    summary_json: Path = None
    plan_json: Path = None


# -- parsing -----------------------------------------------------------------

def _join(path, key):
    return f"{path}.{key}" if path else str(key)


def _obj(doc, path, allowed):
    if not isinstance(doc, dict):
        raise ValidationError(path, "expected an object")
    extra = sorted(set(doc) - set(allowed))
    if extra:
        raise ValidationError(_join(path, extra[0]), "unknown field")
    return doc


def _num(doc, key, path, default, integer=False, positive=False, nonneg=False):
    if key not in doc:
        if default is _REQUIRED:
            raise ValidationError(_join(path, key), "missing required field")
        return default
    v = doc[key]
    where = _join(path, key)
    if v is None and default is None:
        return None
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(where, f"expected a number, got {v!r}")
    if integer and not isinstance(v, int):
        raise ValidationError(where, f"expected an integer, got {v!r}")
    if not np.isfinite(v):
        raise ValidationError(where, "must be finite")
    if positive and not v > 0:
        raise ValidationError(where, "must be positive")
    if nonneg and v < 0:
        raise ValidationError(where, "must be nonnegative")
    return v if integer else float(v)


_REQUIRED = object()


def _build(cls, path, **kwargs):
    try:
        return cls(**kwargs)
    except (DomainError, ValueError, TypeError) as exc:
        raise ValidationError(path, str(exc)) from None


def _section(doc, key, path, cls, parse):
    if key not in doc or doc[key] is None:
        return cls() if parse is not None else None
    return parse(doc[key], _join(path, key))


def _simple(cls, spec):
    """Parser for a flat dataclass; ``spec`` maps field -> _num keyword flags."""
    def parse(doc, path):
        defaults = cls()
        _obj(doc, path, [f.name for f in fields(cls)])
        kw = {}
        for f in fields(cls):
            flags = spec.get(f.name)
            if flags == "str":
                v = doc.get(f.name, getattr(defaults, f.name))
                if not isinstance(v, str):
                    raise ValidationError(_join(path, f.name), "expected a string")
                kw[f.name] = v
            elif flags == "bool":
                v = doc.get(f.name, getattr(defaults, f.name))
                if not isinstance(v, bool):
                    raise ValidationError(_join(path, f.name), "expected true or false")
                kw[f.name] = v
            else:
                kw[f.name] = _num(doc, f.name, path, getattr(defaults, f.name), **(flags or {}))
        return _build(cls, path, **kw)
    return parse


_parse_geometry = _simple(StackGeometry, {k: {"integer": True} for k in ("width", "depth", "layers")})
_parse_material = _simple(MaterialParams, {})
_parse_solver = _simple(SolverConfig, {"max_iterations": {"integer": True}, "method": "str"})
_parse_sensors = _simple(SensorModel, {"grouping": "str"})
_parse_throttle = _simple(ThrottlePolicy, {})
_parse_outputs = _simple(Outputs, {"trace_subsample": {"integer": True, "positive": True},
                                   "emit_sensor_trace": "bool"})
_parse_refine = _simple(RefineSpec, {})
_parse_cage = _simple(CageParams, {"n_cycles": {"integer": True}, "lateral_set": "str"})


def _parse_pulse(doc, path):
    _obj(doc, path, ["bank", "t_start", "duration", "amplitude"])
    return _build(PulseSpec, path,
                  bank=_num(doc, "bank", path, _REQUIRED, integer=True, nonneg=True),
                  t_start=_num(doc, "t_start", path, _REQUIRED),
                  duration=_num(doc, "duration", path, _REQUIRED),
                  amplitude=_num(doc, "amplitude", path, 1.0))


def _int_list(doc, key, path):
    v = doc.get(key)
    if not isinstance(v, list):
        raise ValidationError(_join(path, key), "expected a list of integers")
    for i, b in enumerate(v):
        if isinstance(b, bool) or not isinstance(b, int):
            raise ValidationError(_join(_join(path, key), i), "expected an integer")
    return tuple(v)


def _parse_workload(doc, path):
    _obj(doc, path, [f.name for f in fields(WorkloadSpec)])
    d = WorkloadSpec(banks=())
    return _build(WorkloadSpec, path,
                  banks=_int_list(doc, "banks", path),
                  seed=_num(doc, "seed", path, d.seed, integer=True),
                  burst_duration=_num(doc, "burst_duration", path, d.burst_duration),
                  cooldown_duration=_num(doc, "cooldown_duration", path, d.cooldown_duration),
                  amplitude=_num(doc, "amplitude", path, d.amplitude),
                  duty_jitter=_num(doc, "duty_jitter", path, d.duty_jitter))


def _list(doc, key, path, parse):
    v = doc.get(key, [])
    if not isinstance(v, list):
        raise ValidationError(_join(path, key), "expected a list")
    return tuple(parse(item, _join(_join(path, key), i)) for i, item in enumerate(v))


def parse_plan(doc, path=""):
    _obj(doc, path, ["victim", "entries", "cycle_period", "n_cycles"])

    def entry(d, p):
        _obj(d, p, ["attacker", "offset", "duration", "amplitude"])
        return AttackEntry(attacker=_num(d, "attacker", p, _REQUIRED, integer=True, nonneg=True),
                           offset=_num(d, "offset", p, _REQUIRED),
                           duration=_num(d, "duration", p, _REQUIRED),
                           amplitude=_num(d, "amplitude", p, 1.0))

    return _build(AttackPlan, path,
                  victim=_num(doc, "victim", path, _REQUIRED, integer=True, nonneg=True),
                  entries=_list(doc, "entries", path, entry),
                  cycle_period=_num(doc, "cycle_period", path, _REQUIRED, nonneg=True),
                  n_cycles=_num(doc, "n_cycles", path, 1, integer=True, positive=True))


def _parse_attack(doc, path):
    _obj(doc, path, ["victim", "mode", "cage_params", "manual_plan", "refine"])
    victim = _num(doc, "victim", path, _REQUIRED, integer=True, nonneg=True)
    mode = doc.get("mode", "cage")
    if mode not in ("cage", "manual"):
        raise ValidationError(_join(path, "mode"), f"expected 'cage' or 'manual', got {mode!r}")
    cage = _section(doc, "cage_params", path, CageParams, _parse_cage)
    manual = None
    if doc.get("manual_plan") is not None:
        manual = parse_plan(doc["manual_plan"], _join(path, "manual_plan"))
        if manual.victim != victim:
            raise ValidationError(_join(path, "manual_plan.victim"), "must equal attack.victim")
    if mode == "manual" and manual is None:
        raise ValidationError(_join(path, "manual_plan"), "required when mode is 'manual'")
    refine = None
    if doc.get("refine") is not None:
        refine = _parse_refine(doc["refine"], _join(path, "refine"))
    return AttackSpec(victim, mode, cage, manual, refine)


_TOP = ["geometry", "material", "solver", "horizon", "initial", "sources", "attack", "sensors",
        "throttle", "seed", "sink_layers", "outputs"]


def parse_scenario(doc) -> Scenario:
    _obj(doc, "", _TOP)
    geom = _section(doc, "geometry", "", StackGeometry, _parse_geometry)
    sensors_doc = doc.get("sensors") or {}
    _obj(sensors_doc, "sensors", ["grouping", "sample_period", "noise_sigma", "floor_sigma"])
    floor = _num(sensors_doc, "floor_sigma", "sensors", DEFAULT_FLOOR_SIGMA, positive=True)
    sensors = _parse_sensors({k: v for k, v in sensors_doc.items() if k != "floor_sigma"}, "sensors")

    initial = doc.get("initial", "ambient")
    if initial == "ambient" or initial is None:
        initial = None
    elif isinstance(initial, list):
        if len(initial) != geom.total_banks:
            raise ValidationError("initial", f"expected {geom.total_banks} values")
        initial = tuple(_num({"v": v}, "v", f"initial.{i}", _REQUIRED) for i, v in enumerate(initial))
    else:
        raise ValidationError("initial", "expected 'ambient' or a list of rises in K")

    sources = doc.get("sources") or {}
    _obj(sources, "sources", ["pulses", "workloads"])
    pulses = _list(sources, "pulses", "sources", _parse_pulse)
    workloads = _list(sources, "workloads", "sources", _parse_workload)
    for i, p in enumerate(pulses):
        if p.bank >= geom.total_banks:
            raise ValidationError(f"sources.pulses.{i}.bank", "outside the stack")
    for i, w in enumerate(workloads):
        if any(b >= geom.total_banks for b in w.banks):
            raise ValidationError(f"sources.workloads.{i}.banks", "bank outside the stack")

    attack = None
    if doc.get("attack") is not None:
        attack = _parse_attack(doc["attack"], "attack")
        banks = [attack.victim] + (list(attack.manual_plan.attackers) if attack.manual_plan else [])
        if any(b >= geom.total_banks for b in banks):
            raise ValidationError("attack", "bank outside the stack")

    sink_layers = doc.get("sink_layers", [0])
    if not isinstance(sink_layers, list):
        raise ValidationError("sink_layers", "expected a list of layer indices")
    sink_layers = _int_list({"sink_layers": sink_layers}, "sink_layers", "")
    if any(not 0 <= s < geom.layers for s in sink_layers):
        raise ValidationError("sink_layers", "layer outside the stack")

    return Scenario(
        geometry=geom,
        material=_section(doc, "material", "", MaterialParams, _parse_material),
        solver=_section(doc, "solver", "", SolverConfig, _parse_solver),
        horizon=_num(doc, "horizon", "", 0.1, positive=True),
        initial=initial,
        pulses=pulses,
        workloads=workloads,
        attack=attack,
        sensors=sensors,
        floor_sigma=floor,
        throttle=_section(doc, "throttle", "", ThrottlePolicy, _parse_throttle),
        seed=_num(doc, "seed", "", 0, integer=True),
        sink_layers=sink_layers,
        outputs=_section(doc, "outputs", "", Outputs, _parse_outputs),
    )


def load_scenario(path) -> Scenario:
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError("", f"invalid JSON: {exc}") from None
    return parse_scenario(doc)


# -- serialization -----------------------------------------------------------

def _flat(obj):
    out = {}
    for f in fields(obj):
        v = getattr(obj, f.name)
        out[f.name] = v.value if hasattr(v, "value") else v
    return out


def plan_to_dict(plan: AttackPlan):
    return {"victim": plan.victim,
            "entries": [_flat(e) for e in plan.entries],
            "cycle_period": plan.cycle_period,
            "n_cycles": plan.n_cycles}


def scenario_to_dict(s: Scenario):
    doc = {
        "geometry": _flat(s.geometry),
        "material": _flat(s.material),
        "solver": _flat(s.solver),
        "horizon": s.horizon,
        "initial": "ambient" if s.initial is None else list(s.initial),
        "sources": {"pulses": [_flat(p) for p in s.pulses],
                    "workloads": [dict(_flat(w), banks=list(w.banks)) for w in s.workloads]},
        "attack": None,
        "sensors": dict(_flat(s.sensors), floor_sigma=s.floor_sigma),
        "throttle": _flat(s.throttle),
        "seed": s.seed,
        "sink_layers": list(s.sink_layers),
        "outputs": _flat(s.outputs),
    }
    if s.attack is not None:
        a = s.attack
        doc["attack"] = {
            "victim": a.victim,
            "mode": a.mode,
            "cage_params": _flat(a.cage_params),
            "manual_plan": plan_to_dict(a.manual_plan) if a.manual_plan else None,
            "refine": _flat(a.refine) if a.refine else None,
        }
    return doc


def _dumps(doc):
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def scenario_hash(s: Scenario) -> str:
    canon = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- execution ---------------------------------------------------------------

def make_network(s: Scenario):
    return build_network(s.geometry, s.material, sink_layers=s.sink_layers)


def benign_pulses(s: Scenario):
    pulses = list(s.pulses)
    for w in s.workloads:
        pulses += benign_workload(replace(w, seed=w.seed ^ s.seed), s.horizon)
    return pulses


def build_plan(s: Scenario, net=None):
    """The attack plan a scenario describes, or None without an attack."""
    a = s.attack
    if a is None:
        return None
    net = net if net is not None else make_network(s)
    if a.mode == "manual":
        plan = a.manual_plan
    else:
        plan = plan_cage(a.victim, s.geometry, net, a.cage_params, s.solver)
    if a.refine is not None:
        plan = refine_offsets(net, plan, a.refine.window, a.refine.grid, a.refine.budget, s.solver)
    return plan


def _write_csv(path, times, rows, prefix):
    n = len(rows[0]) if rows else 0
    with open(path, "w", newline="") as fh:
        fh.write(",".join(["t"] + [f"{prefix}_{i}" for i in range(n)]) + "\n")
        for t, row in zip(times, rows):
            fh.write(",".join([repr(t)] + [repr(v) for v in row]) + "\n")


def execute_scenario(s: Scenario, out_dir) -> RunArtifacts:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cfg = s.solver
    net = make_network(s)
    n = net.n
    steps = grid_steps(s.horizon, cfg.dt)
    horizon = steps * cfg.dt

    base = compile_pulses(benign_pulses(s), cfg.dt, horizon, n)
    plan = build_plan(s, net)
    if plan is not None:
        attack_power = compile_pulses(plan_to_pulses(plan), cfg.dt, horizon, n)
    else:
        attack_power = compile_pulses([], cfg.dt, horizon, n)
    power = superpose(base, attack_power)
    theta0 = None if s.initial is None else np.array(s.initial)
    trace = simulate(net, power, theta0, cfg)

    artifacts = RunArtifacts(temperature_csv=out_dir / TEMPERATURE_CSV,
                             summary_json=out_dir / SUMMARY_JSON)
    sub = s.outputs.trace_subsample
    idx = range(0, trace.values.shape[0], sub)
    times = [k * cfg.dt for k in idx]
    _write_csv(artifacts.temperature_csv, times, trace.absolute()[::sub].tolist(), "bank")

    sensors = read_sensors(trace, s.sensors, s.seed, s.geometry)
    if s.outputs.emit_sensor_trace:
        artifacts = replace(artifacts, sensor_csv=out_dir / SENSOR_CSV)
        stimes = [k * s.sensors.sample_period for k in range(sensors.readings.shape[0])]
        _write_csv(artifacts.sensor_csv, stimes, sensors.readings.tolist(), "sensor")

    summary = {
        "scenario_hash": scenario_hash(s),
        "n_banks": n,
        "steps": steps,
        "dt": cfg.dt,
        "horizon": horizon,
        "t_ambient": net.t_ambient,
        "peak_theta": float(trace.values.max()),
        "peak_bank": int(np.unravel_index(np.argmax(trace.values), trace.values.shape)[1]),
        "benign_energy": float(base.values.sum() * cfg.dt),
        "total_attack_energy": float(attack_power.values.sum() * cfg.dt),
        "truncated_energy": float(power.truncated_energy),
        "solver": {
            "max_linear_residual": float(trace.max_residual),
            "max_energy_residual": float(energy_residual(net, trace, power).max()) if steps else 0.0,
        },
        "attack": None,
        "impact": None,
        "stealth_score": None,
    }
    if plan is not None:
        baseline = simulate(net, base, theta0, cfg)
        stats = baseline_stats(read_sensors(baseline, s.sensors, s.seed, s.geometry))
        stealth = stealth_score(sensors, stats, s.floor_sigma)
        impact = victim_impact(trace, plan.victim, s.throttle, max(stealth, 0.0))
        summary["attack"] = {"victim": plan.victim, "attackers": list(plan.attackers),
                             "cycle_period": plan.cycle_period, "n_cycles": plan.n_cycles}
        summary["impact"] = _flat(impact)
        summary["stealth_score"] = stealth
        artifacts = replace(artifacts, plan_json=out_dir / PLAN_JSON)
        artifacts.plan_json.write_text(_dumps(plan_to_dict(plan)))
    artifacts.summary_json.write_text(_dumps(summary))
    return artifacts


def write_plan(s: Scenario, out_dir) -> Path:
    if s.attack is None:
        raise ValidationError("attack", "scenario has no attack to plan")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / PLAN_JSON
    path.write_text(_dumps(plan_to_dict(build_plan(s))))
    return path


def default_out_dir():
    return Path(os.environ.get("THERMOCAGE_OUT", "thermocage-out"))
