"""Command-line interface: run, sweep, eval, and parse-case subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .grid.case import CaseParseError, UnsupportedFeatureError, load_case
from .pipeline import StageError, run_experiment, sweep_experiment
from .report import read_points_csv, write_predictions_csv
from .serialize import load_surrogate
from .uncertainty import SampleMatrix, Space


def _parse_n_ed(spec: str) -> list[int]:
    if ":" in spec:
        parts = [int(p) for p in spec.split(":")]
        if len(parts) == 2:
            start, stop, step = parts[0], parts[1], 5
        elif len(parts) == 3:
            start, stop, step = parts
        else:
            raise ValueError("expected START:STOP[:STEP]")
        return list(range(start, stop + 1, step))
    return [int(p) for p in spec.split(",") if p.strip()]


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    manifest = run_experiment(
        cfg,
        out_dir=args.out,
        workers=args.workers,
        methods=args.methods.split(",") if args.methods else None,
        figures=False if args.no_figures else None,
    )
    out = Path(args.out) if args.out else cfg.output_dir
    print(f"run complete: {out} ({manifest['total_seconds']:.1f}s)")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    n_list = _parse_n_ed(args.n_ed) if args.n_ed else None
    rows = sweep_experiment(
        cfg,
        n_ed_list=n_list,
        out_dir=args.out,
        workers=args.workers,
        figures=False if args.no_figures else None,
    )
    out = Path(args.out) if args.out else cfg.output_dir
    print(f"sweep complete: {len(rows)} rows -> {out}")
    return 0


def cmd_eval(args) -> int:
    tree, meta = load_surrogate(args.surrogate)
    ids, pts, space = read_points_csv(args.points)
    if pts.size == 0:
        write_predictions_csv(args.out, [], [])
        print(f"eval complete: 0 predictions -> {args.out}")
        return 0
    if space == "physical":
        sample = SampleMatrix(pts, Space.PHYSICAL)
    else:
        sample = SampleMatrix(pts, Space.UNIT)
    preds = tree.evaluate(sample)
    write_predictions_csv(args.out, ids, preds)
    print(f"eval complete: {len(ids)} predictions -> {args.out}")
    return 0


def cmd_parse_case(args) -> int:
    case = load_case(args.case)
    print(
        f"{case.name}: {case.n_bus} buses, {case.n_gen} generators, "
        f"{len(case.branches)} branches, base {case.base_mva:g} MVA"
    )
    for w in case.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="asseopf",
        description=(
            "Probabilistic AC-OPF surrogates: quasi-Monte Carlo designs, batch "
            "OPF evaluation, adaptive spectral-embedding and sparse-PCE fits, "
            "and distributional reports."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="full experiment: design, solve, fit, validate, report")
    p_run.add_argument("--config", required=True, help="YAML experiment configuration")
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.add_argument("--workers", type=int, default=None, help="parallel OPF workers")
    p_run.add_argument("--methods", help="comma list from MC,ASSE,SPCE (overrides config)")
    p_run.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="validation error versus training size")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--out")
    p_sweep.add_argument("--workers", type=int, default=None)
    p_sweep.add_argument("--n-ed", help="START:STOP[:STEP] or comma list")
    p_sweep.add_argument("--no-figures", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    p_eval = sub.add_parser("eval", help="evaluate a stored surrogate at new points")
    p_eval.add_argument("--surrogate", required=True, help="surrogate JSON document")
    p_eval.add_argument("--points", required=True, help="CSV with zeta_* or u_* columns")
    p_eval.add_argument("--out", required=True, help="predictions CSV to write")
    p_eval.set_defaults(func=cmd_eval)

    p_parse = sub.add_parser("parse-case", help="validate a case file and print a summary")
    p_parse.add_argument("case")
    p_parse.set_defaults(func=cmd_parse_case)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except (ConfigError, CaseParseError, UnsupportedFeatureError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
