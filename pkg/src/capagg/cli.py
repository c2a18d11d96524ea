"""Command-line driver: ``capagg {aggregate,check,score,gen,bench}``.

Exit status is 0 on success, 1 for usage errors and 2 for bad data.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .bench import CURVE_FIELDS, run_bench
from .check import coherence_report
from .config import DEFAULT_CAP, DEFAULT_SWEEPS, DEFAULT_TOL, RunConfig
from .engine import METHODS, aggregate, design_subsets, pool
from .errors import CapError
from .io import dump_rows, read_forecasts, write_pooled
from .scoring import evaluate_cases
from .synth import DATASET_SCALES, PanelSpec, generate_panel

EXIT_USAGE = 1
EXIT_DATA = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def _engine_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--design", choices=("singleton", "neighborhood", "global"), default="neighborhood")
    p.add_argument("--method", choices=METHODS, default="cyclic")
    p.add_argument("--sweeps", type=_positive_int, default=DEFAULT_SWEEPS)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--parallel", action="store_true")
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="capagg", description="Coherent aggregation of probability forecasts.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("aggregate", help="fuse a forecast file into coherent(ish) pooled forecasts")
    p.add_argument("input")
    _engine_flags(p)
    p.add_argument("--out", help="CSV of aggregated forecasts (default: JSON report on stdout)")
    p.add_argument("--report", help="write the JSON run report here")

    p = sub.add_parser("check", help="report local incoherence and fallacy flags")
    p.add_argument("input")
    p.add_argument("--design", choices=("singleton", "neighborhood", "global"), default="neighborhood")
    p.add_argument("--cap", type=_positive_int, default=DEFAULT_CAP)
    p.add_argument("--out")

    p = sub.add_parser("score", help="raw / individual / aggregate / linear-average accuracy")
    p.add_argument("input")
    _engine_flags(p)
    p.add_argument("--out", help="path stem; writes <stem>.csv and <stem>.json")

    p = sub.add_parser("gen", help="write a synthetic forecast panel")
    p.add_argument("--vars", type=_positive_int, default=10)
    p.add_argument("--judges", type=_positive_int, default=30)
    p.add_argument("--events", type=_positive_int, default=34)
    p.add_argument("--noise", type=float, default=0.15)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--basic-fraction", type=float, default=10 / 34)
    p.add_argument("--correlated", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("bench", help="timing and Brier-vs-sweep curves on synthetic panels")
    p.add_argument("--datasets", default=",".join(DATASET_SCALES),
                   help=f"comma list from {','.join(DATASET_SCALES)}")
    p.add_argument("--seeds", type=_positive_int, default=1, help="number of seeds, starting at --seed")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sweeps", type=_positive_int, default=10)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--noise", type=float, default=0.15)
    p.add_argument("--events", type=_positive_int, default=34, help="events per judge")
    p.add_argument("--design", choices=("singleton", "neighborhood", "global"), default="neighborhood")
    p.add_argument("--out")
    return parser


def _config(args) -> RunConfig:
    if args.tol < 0:
        raise UsageError("--tol must be non-negative")
    return RunConfig(design=args.design, method=args.method, max_sweeps=args.sweeps,
                     tol=args.tol, parallel=args.parallel, cap=args.cap)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False) + "\n"


def cmd_aggregate(args) -> int:
    cfg = _config(args)
    forecasts = read_forecasts(args.input)
    pooled = pool(forecasts)
    design = design_subsets(pooled, cfg.design, cfg.cap)
    report = aggregate(pooled, design, cfg.method, cfg.max_sweeps, cfg.tol,
                       parallel=cfg.parallel, cap=cfg.cap)
    payload = report.to_dict(pooled)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_pooled(fh, pooled, report.final)
        if args.report:
            Path(args.report).write_text(_dumps(payload), encoding="utf-8")
    else:
        if args.report:
            Path(args.report).write_text(_dumps(payload), encoding="utf-8")
        sys.stdout.write(_dumps(payload))
    return 0


def cmd_check(args) -> int:
    forecasts = read_forecasts(args.input)
    if not forecasts:
        raise CapError("no forecasts")
    _emit(_dumps(coherence_report(forecasts, args.design, args.cap)), args.out)
    return 0


def cmd_score(args) -> int:
    cfg = _config(args)
    reports = evaluate_cases(read_forecasts(args.input), cfg)
    summary = [r.to_dict() for r in reports]
    if args.out:
        stem = Path(args.out)
        with stem.with_suffix(".csv").open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(("case", "judge", "n", "brier_total", "brier_mean", "slope"))
            for r in reports:
                for judge, s in r.per_judge.items():
                    w.writerow((r.case, judge, s.n, repr(s.brier_total), repr(s.brier_mean),
                                "" if s.slope is None else repr(s.slope)))
                w.writerow((r.case, "*panel*", sum(s.n for s in r.per_judge.values()),
                            "", repr(r.panel_brier), "" if r.panel_slope is None else repr(r.panel_slope)))
        stem.with_suffix(".json").write_text(_dumps(summary), encoding="utf-8")
    else:
        sys.stdout.write(_dumps([
            {k: r[k] for k in ("case", "panel_brier", "panel_slope", "pooled_brier")} for r in summary
        ]))
    return 0


def cmd_gen(args) -> int:
    try:
        spec = PanelSpec(args.vars, args.judges, args.events, args.noise, args.seed,
                         args.basic_fraction, args.correlated)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    panel = generate_panel(spec)
    if args.out:
        path = Path(args.out)
        fmt = "jsonl" if path.suffix.lower() in (".jsonl", ".ndjson") else "csv"
        with path.open("w", encoding="utf-8", newline="") as fh:
            dump_rows(panel, fh, fmt)
    else:
        dump_rows(panel, sys.stdout)
    return 0


def cmd_bench(args) -> int:
    names = [n.strip() for n in args.datasets.split(",") if n.strip()]
    unknown = [n for n in names if n not in DATASET_SCALES]
    if unknown:
        raise UsageError(f"unknown dataset(s): {', '.join(unknown)}")
    if args.noise < 0 or args.tol < 0:
        raise UsageError("--noise and --tol must be non-negative")
    rows = run_bench(names, range(args.seed, args.seed + args.seeds), args.sweeps, args.noise, args.tol,
                     args.events, args.design)
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(CURVE_FIELDS)
        for r in rows:
            w.writerow(r.as_list())
    finally:
        if args.out:
            out.close()
    for r in rows:
        if r.case == "aggregate" and r.sweep == 0:
            print(f"{r.dataset} seed={r.seed} forecasts={r.forecasts} pooled={r.pooled_events} "
                  f"aggregate {r.elapsed_s:.3f}s converged={r.converged}", file=sys.stderr)
    return 0


COMMANDS = {
    "aggregate": cmd_aggregate,
    "check": cmd_check,
    "score": cmd_score,
    "gen": cmd_gen,
    "bench": cmd_bench,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"capagg: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (CapError, OSError) as exc:
        print(f"capagg: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
