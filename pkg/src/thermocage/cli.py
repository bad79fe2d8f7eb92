"""Command-line front end: ``thermocage run|plan|delays|sweep``."""

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .attack import propagation_delay
from .errors import (DomainError, MeasurementError, ModelError, NumericalError, OracleError,
                     PlanningError, ValidationError)
from .scenario import (default_out_dir, execute_scenario, load_scenario, make_network,
                       parse_scenario, scenario_to_dict, write_plan)

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

log = logging.getLogger("thermocage")


def _set_path(doc, dotted, value):
    keys = dotted.split(".")
    node = doc
    for k in keys[:-1]:
        if isinstance(node, list):
            node = node[int(k)]
        else:
            if node.get(k) is None:
                node[k] = {}
            node = node[k]
    last = keys[-1]
    if isinstance(node, list):
        node[int(last)] = value
    else:
        node[last] = value


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def sweep_documents(scenario, param, values):
    """One scenario document per value; the seed of point i is ``seed ^ i``."""
    docs = []
    for i, v in enumerate(values):
        doc = scenario_to_dict(scenario)
        try:
            _set_path(doc, param, v)
        except (KeyError, IndexError, ValueError, TypeError):
            raise ValidationError(param, "no such parameter path") from None
        doc["seed"] = scenario.seed ^ i
        docs.append(doc)
    return docs


def _run_doc(args):
    doc, out = args
    execute_scenario(parse_scenario(doc), out)
    return str(out)


def run_sweep(scenario, param, values, out_dir, jobs=1):
    out_dir = Path(out_dir)
    docs = sweep_documents(scenario, param, values)
    for d in docs:  # validate every point before running any
        parse_scenario(d)
    work = [(d, out_dir / f"{i:03d}") for i, d in enumerate(docs)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            list(pool.map(_run_doc, work))
    else:
        for item in work:
            _run_doc(item)
    index = [{"index": i, "value": v, "dir": f"{i:03d}"} for i, v in enumerate(values)]
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.json").write_text(
        json.dumps({"param": param, "points": index}, sort_keys=True, indent=2) + "\n")
    return out_dir


def build_parser():
    parser = argparse.ArgumentParser(prog="thermocage",
                                     description="Thermal-cage simulation for stacked memory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a scenario and write CSV/JSON artifacts")
    p.add_argument("scenario")
    p.add_argument("-o", "--out", type=Path, default=None)

    p = sub.add_parser("plan", help="write the attack plan only")
    p.add_argument("scenario")
    p.add_argument("-o", "--out", type=Path, default=None)

    p = sub.add_parser("delays", help="print the propagation delay between two banks")
    p.add_argument("scenario")
    p.add_argument("--src", type=int, required=True)
    p.add_argument("--dst", type=int, required=True)

    p = sub.add_parser("sweep", help="run one scenario per parameter value")
    p.add_argument("scenario")
    p.add_argument("--param", required=True, help="dotted path, e.g. material.r_vert")
    p.add_argument("--values", required=True, help="comma-separated JSON values")
    p.add_argument("-o", "--out", type=Path, default=None)
    p.add_argument("-j", "--jobs", type=int, default=1)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        scenario = load_scenario(args.scenario)
        out = getattr(args, "out", None) or default_out_dir()
        if args.command == "run":
            arts = execute_scenario(scenario, out)
            print(arts.summary_json)
        elif args.command == "plan":
            print(write_plan(scenario, out))
        elif args.command == "delays":
            net = make_network(scenario)
            print(repr(propagation_delay(net, args.src, args.dst, cfg=scenario.solver)))
        elif args.command == "sweep":
            values = [_parse_value(v) for v in args.values.split(",")]
            print(run_sweep(scenario, args.param, values, out, args.jobs))
    except (ValidationError, DomainError, PlanningError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ModelError, MeasurementError, OracleError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
