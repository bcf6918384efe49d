"""Command-line interface.

Subcommands:
  simulate   run a scenario and write trace.csv / summary.json
  risk-eval  evaluate one risk-assessment record from JSON
  fis-eval   map (r_y, r_x) CSV rows to authority values
  sweep      rerun a scenario over a list of values for one config key
  bench      compare the compiled and pure rollout kernels
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import authority, engine, risk
from .scenario import ScenarioError, load_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="codrive",
                                     description="shared-control degradation simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run one scenario")
    p_sim.add_argument("--scenario", required=True,
                       help="scenario file path or bundled scenario name")
    p_sim.add_argument("--out", required=True, help="output directory")
    p_sim.add_argument("--mode", choices=["shared", "automation-only"], default=None,
                       help="override the scenario's mode")
    p_sim.add_argument("--dump-geometry", action="store_true",
                       help="also write the per-step triangulation and corridor as JSON")

    p_risk = sub.add_parser("risk-eval", help="evaluate a risk record from JSON")
    p_risk.add_argument("--input", default="-", help="JSON file (default: stdin)")

    p_fis = sub.add_parser("fis-eval", help="authority values for (r_y, r_x) CSV rows")
    p_fis.add_argument("--input", required=True, help="CSV with r_y and r_x columns")
    p_fis.add_argument("--output", default="-", help="output CSV (default: stdout)")

    p_sweep = sub.add_parser("sweep", help="rerun a scenario over a parameter list")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--param", required=True,
                         help="dotted config key, e.g. fault.plateau")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated values for the key")

    p_bench = sub.add_parser("bench", help="compare compiled and pure kernels")
    p_bench.add_argument("--repeats", type=int, default=20000)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "risk-eval":
            return _cmd_risk_eval(args)
        if args.command == "fis-eval":
            return _cmd_fis_eval(args)
        if args.command == "sweep":
            return _cmd_sweep(args)
        if args.command == "bench":
            return _cmd_bench(args)
    except ScenarioError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except engine.NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        print(f"offending record: {exc.record}", file=sys.stderr)
        return EXIT_NUMERIC
    raise AssertionError("unreachable")


def _cmd_simulate(args) -> int:
    overrides = {"mode": args.mode} if args.mode else None
    cfg = load_scenario(args.scenario, overrides=overrides)
    result = engine.run(cfg, collect_geometry=args.dump_geometry)
    result.write(args.out, dump_geometry=args.dump_geometry)
    print(json.dumps(result.summary, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_risk_eval(args) -> int:
    if args.input == "-":
        record = json.load(sys.stdin)
    else:
        with open(args.input, "r", encoding="utf-8") as fh:
            record = json.load(fh)
    report = evaluate_risk_record(record)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def evaluate_risk_record(record: dict) -> dict:
    """Risk report for one JSON record (see docs/scenario_format.md)."""
    try:
        apf = risk.ApfParams(**record.get("apf", {}))
        dpf_params = risk.DpfParams(**record.get("dpf", {}))
        task = record.get("task", "lane_keep")
        weights = risk.LANE_KEEP_WEIGHTS if task == "lane_keep" else risk.LANE_CHANGE_WEIGHTS
        ego = record["ego"]
        neighbors = {
            role: (float(v["station"]), float(v["speed"]))
            for role, v in record.get("neighbors", {}).items()
        }
        if "boundary_distance" in record:
            r_b = float(record["boundary_distance"])
        else:
            import numpy as np

            from .safearea import SafeArea
            cor = record["corridor"]
            area = SafeArea(
                channel=(),
                upper=np.asarray(cor["upper"], dtype=float),
                lower=np.asarray(cor["lower"], dtype=float),
                s_end=float(cor["s_end"]),
            )
            r_b = area.distance_to_boundaries((float(ego["station"]), float(ego["lateral"])))
        report = risk.assess(r_b, (float(ego["station"]), float(ego["speed"])),
                             neighbors, apf, dpf_params, weights)
    except (KeyError, TypeError, ValueError) as exc:
        raise ScenarioError(f"invalid risk record: {exc}") from exc
    return {
        "r_y": report.r_y,
        "r_x": report.r_x,
        "boundary_distance": report.boundary_distance,
        "boundary_potential": report.boundary_potential,
        "neighbors": [
            {
                "role": t.role,
                "closing_speed": t.closing_speed,
                "gap": t.gap,
                "safe_distance": t.safe_distance,
                "potential": t.potential,
                "ratio": t.ratio,
            }
            for t in report.terms
        ],
    }


def _cmd_fis_eval(args) -> int:
    with open(args.input, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"r_y", "r_x"} <= set(reader.fieldnames):
            raise ScenarioError("fis-eval input needs r_y and r_x columns")
        rows = [(float(row["r_y"]), float(row["r_x"])) for row in reader]
    out_fh = sys.stdout if args.output == "-" else open(args.output, "w", encoding="utf-8", newline="")
    try:
        writer = csv.writer(out_fh, lineterminator="\n")
        writer.writerow(["r_y", "r_x", "alpha_a"])
        for r_y, r_x in rows:
            writer.writerow([format(r_y, ".12g"), format(r_x, ".12g"),
                             format(authority.fis_alpha(r_y, r_x), ".12g")])
    finally:
        if out_fh is not sys.stdout:
            out_fh.close()
    return EXIT_OK


def _parse_value(text: str):
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def _cmd_sweep(args) -> int:
    values = [_parse_value(v.strip()) for v in args.values.split(",") if v.strip()]
    if not values:
        raise ScenarioError("sweep requires at least one value")
    out_root = Path(args.out)
    combined = []
    for value in values:
        cfg = load_scenario(args.scenario, overrides={args.param: value})
        result = engine.run(cfg)
        label = str(value).replace("/", "_")
        result.write(out_root / f"{args.param.replace('.', '_')}={label}")
        entry = dict(result.summary)
        entry["swept_param"] = args.param
        entry["swept_value"] = value
        combined.append(entry)
    out_root.mkdir(parents=True, exist_ok=True)
    with open(out_root / "sweep.json", "w", encoding="utf-8") as fh:
        json.dump(combined, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(combined, indent=2, sort_keys=True))
    return EXIT_OK


def _cmd_bench(args) -> int:
    from .bench import run_benchmark
    run_benchmark(repeats=args.repeats)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
