"""Command-line entry point: ``hetnet-pcp {analyze,simulate,sweep}``.

Results are tables with a fixed header (``COLUMNS``); one row per
(sweep point, method, tier), with tier ``total`` for the overall coverage.
CSV output starts with ``#`` provenance lines; JSON carries the same
provenance and rows.  Nothing time-dependent is written, so equal inputs
give byte-identical files.

Exit codes: 0 success, 2 bad scenario or arguments, 3 results written but
some quadrature missed its tolerance.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import subprocess
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import __version__
from .coverage import CoverageEstimate, ThresholdError, total_coverage
from .geometry import ConfigurationError
from .montecarlo import THREADS_ENV, SimulationConfig, simulate_coverage
from .quadrature import OUTER, QuadratureSpec
from .scenario import (
    Scenario, ScenarioError, Sweep, apply_parameter, load_scenario, scenario_dict, sweep_paths,
)

SCHEMA = "hetnet-pcp-results/1"
COLUMNS = ("point", "parameter", "value", "method", "tier", "coverage", "half_width", "degraded")

EXIT_OK, EXIT_USAGE, EXIT_DEGRADED = 0, 2, 3


def git_describe() -> str:
    here = Path(__file__).resolve().parent
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], cwd=here,
                             capture_output=True, text=True, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def _rows(point, parameter, value, est: CoverageEstimate):
    method = est.method.value
    hw = None if est.half_width is None else float(est.half_width)
    deg = int(est.degraded)
    rows = [(point, parameter, value, method, "total", float(est.total), hw, deg)]
    for tier in sorted(est.per_tier):
        rows.append((point, parameter, value, method, str(tier),
                     float(est.per_tier[tier]), None, deg))
    return rows


def _cell(x) -> str:
    if x is None:
        return ""
    return repr(x) if isinstance(x, float) else str(x)


def _provenance(sc: Scenario, args, source: str) -> dict:
    prov = {
        "schema": SCHEMA,
        "version": __version__,
        "build": git_describe(),
        "scenario_source": source,
        "command": args.command,
        "rel_tol": args.tolerance,
        "scenario": json.dumps(scenario_dict(sc), sort_keys=True),
    }
    if getattr(args, "trials", None) is not None and _wants_mc(args):
        prov.update(trials=args.trials, seed=args.seed, confidence_level=args.confidence)
    return prov


def _wants_mc(args) -> bool:
    return args.command == "simulate" or getattr(args, "mc", False)


def render(rows, provenance: dict, fmt: str) -> str:
    if fmt == "json":
        records = [dict(zip(COLUMNS, r)) for r in rows]
        return json.dumps({"provenance": provenance, "columns": list(COLUMNS), "rows": records},
                          indent=2, sort_keys=False) + "\n"
    buf = io.StringIO()
    for k, v in provenance.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    w.writerows([_cell(x) for x in r] for r in rows)
    return buf.getvalue()


def parse_table(text: str):
    """Read CSV results back: (provenance dict, list of row dicts)."""
    prov, body = {}, []
    for line in text.splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            prov[k] = v
        else:
            body.append(line)
    return prov, list(csv.DictReader(body))


# ---------------------------------------------------------------------------

def _quad_spec(args) -> QuadratureSpec:
    # coverage values are O(0.1): tie the absolute floor to the relative tolerance
    return QuadratureSpec(rel_tol=args.tolerance, abs_tol=args.tolerance * 1e-3, strict=False)


def _sim_config(args) -> SimulationConfig:
    return SimulationConfig(trials=args.trials, rng_seed=args.seed,
                            confidence_level=args.confidence)


def _apply_sets(sc: Scenario, sets) -> Scenario:
    model = sc.model
    for item in sets or ():
        path, sep, value = item.partition("=")
        if not sep:
            raise ValueError(f"--set expects PATH=VALUE, got {item!r}")
        model = apply_parameter(model, path.strip(), _literal(value.strip()))
    return replace(sc, model=model)


def _literal(text: str):
    try:
        return float(text)
    except ValueError:
        return text


def _evaluate(model, args, point, parameter, value):
    rows, degraded = [], False
    if args.command != "simulate":
        est = total_coverage(model, _quad_spec(args))
        degraded |= est.degraded
        rows += _rows(point, parameter, value, est)
    if _wants_mc(args):
        rows += _rows(point, parameter, value, simulate_coverage(model, _sim_config(args)))
    return rows, degraded


def _threads() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def run(args) -> int:
    try:
        if getattr(args, "trials", None) is not None and args.trials < 1:
            raise ValueError("--trials must be at least 1")
        if not args.tolerance > 0:
            raise ValueError("--tolerance must be positive")
        sc = _apply_sets(load_scenario(args.scenario), args.set)
        fmt = args.format or sc.output
        if args.command == "sweep":
            sweep = sc.sweep
            if args.param is not None:
                if not args.values:
                    raise ValueError("--param needs --values")
                sweep = Sweep(args.param, tuple(_literal(v.strip()) for v in args.values.split(",")))
            if sweep is None:
                raise ValueError("no sweep axis: give --param/--values or a 'sweep' block")
            models = [apply_parameter(sc.model, sweep.parameter, v) for v in sweep.values]
            points = list(enumerate(zip(sweep.values, models)))
        else:
            points = [(0, (None, sc.model))]
            sweep = None
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except KeyError as e:
        print(f"error: {e.args[0] if e.args else e}", file=sys.stderr)
        return EXIT_USAGE
    except (ScenarioError, ConfigurationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    parameter = sweep.parameter if sweep is not None else None

    def work(item):
        i, (value, model) = item
        return _evaluate(model, args, i, parameter, value)

    try:
        if _threads() > 1 and len(points) > 1:
            with ThreadPoolExecutor(_threads()) as pool:
                results = list(pool.map(work, points))
        else:
            results = [work(p) for p in points]
    except ThresholdError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    rows = [r for res in results for r in res[0]]
    degraded = any(res[1] for res in results)
    text = render(rows, _provenance(sc, args, args.scenario), fmt)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8", newline="\n")
    else:
        sys.stdout.write(text)
    if degraded:
        print("warning: quadrature tolerance not met; rows are flagged degraded", file=sys.stderr)
        return EXIT_DEGRADED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="hetnet-pcp",
        description="Max-SIR coverage of PPP/PCP heterogeneous networks.",
        epilog=f"Scenario: a YAML file or preset:<name>.  {THREADS_ENV}=N runs "
               "sweep points and MC batches on N threads.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("scenario", help="scenario file or preset:model1..model4")
        sp.add_argument("--set", action="append", metavar="PATH=VALUE",
                        help="override a parameter (repeatable); see 'paths'")
        sp.add_argument("--tolerance", type=float, default=OUTER.rel_tol,
                        help="relative tolerance of the outer integrals (absolute: 1e-3 x this)")
        sp.add_argument("--format", choices=("csv", "json"), default=None)
        sp.add_argument("--output", "-o", default=None, help="output file (default stdout)")

    def mc(sp, required=False):
        sp.add_argument("--trials", type=int, default=None if not required else 100_000)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--confidence", type=float, default=0.99)

    a = sub.add_parser("analyze", help="analytic coverage")
    common(a)
    s = sub.add_parser("simulate", help="Monte Carlo coverage")
    common(s)
    mc(s, required=True)
    w = sub.add_parser("sweep", help="coverage along one parameter axis")
    common(w)
    w.add_argument("--param", default=None, help="parameter path to sweep")
    w.add_argument("--values", default=None, help="comma-separated values")
    w.add_argument("--mc", action="store_true", help="add Monte Carlo rows")
    mc(w, required=True)
    ps = sub.add_parser("paths", help="list sweepable parameter paths of a scenario")
    ps.add_argument("scenario")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "paths":
        try:
            sc = load_scenario(args.scenario)
        except (OSError, ScenarioError) as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_USAGE
        print("\n".join(sweep_paths(sc.model)))
        return EXIT_OK
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
