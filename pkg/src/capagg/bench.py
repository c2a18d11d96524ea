"""Timing and Brier-versus-sweep curves on synthetic panels."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_TOL
from .engine import Forecast, aggregate, design_subsets, pool
from .events import canonical_key
from .synth import DATASET_SCALES, PanelSpec, generate_panel

__all__ = ["BenchRow", "CURVE_FIELDS", "run_case_curves", "run_bench"]

CURVE_FIELDS = (
    "dataset", "seed", "n_vars", "n_judges", "forecasts", "pooled_events",
    "case", "sweep", "avg_brier", "max_move", "converged", "elapsed_s",
)


@dataclass(frozen=True)
class BenchRow:
    dataset: str
    seed: int
    n_vars: int
    n_judges: int
    forecasts: int
    pooled_events: int
    case: str
    sweep: int
    avg_brier: float
    max_move: float
    converged: bool
    elapsed_s: float

    def as_list(self) -> list:
        return [getattr(self, f) for f in CURVE_FIELDS]


def _judge_average(forecasts: Sequence[Forecast], values: np.ndarray) -> float:
    """Mean over judges of each judge's mean squared error."""
    truths = np.array([float(f.truth) for f in forecasts])
    sq = (values - truths) ** 2
    by_judge: dict[str, list[float]] = {}
    for f, s in zip(forecasts, sq):
        by_judge.setdefault(f.judge, []).append(s)
    return float(np.mean([np.mean(v) for v in by_judge.values()]))


def _iterate_values(forecasts, sweeps: int, tol: float, design: str):
    """Per-forecast values after each sweep 0..sweeps, plus moves and timing."""
    pooled = pool(forecasts)
    start = time.perf_counter()
    report = aggregate(pooled, design_subsets(pooled, design), "cyclic", sweeps, tol,
                       record_iterates=True, check_final=False)
    elapsed = time.perf_counter() - start
    where = {e.key: i for i, e in enumerate(pooled.entries)}
    idx = np.array([where[canonical_key(f.event)] for f in forecasts])
    its = report.iterates
    # a converged run stays put, so later sweeps repeat the final iterate
    per_sweep = [its[min(t, len(its) - 1)][idx] for t in range(sweeps + 1)]
    moves = [0.0] + report.max_moves + [0.0] * (sweeps - len(report.max_moves))
    return per_sweep, moves, report.converged, elapsed, len(pooled)


def run_case_curves(
    forecasts: Sequence[Forecast],
    sweeps: int = 10,
    tol: float = DEFAULT_TOL,
    design: str = "neighborhood",
) -> dict[str, dict]:
    """Average judge Brier after each sweep, for the individual and aggregate cases."""
    forecasts = list(forecasts)
    per_sweep, moves, converged, elapsed, n_pooled = _iterate_values(forecasts, sweeps, tol, design)
    agg = {
        "brier": [_judge_average(forecasts, v) for v in per_sweep],
        "moves": moves, "converged": converged, "elapsed": elapsed, "pooled": n_pooled,
    }

    groups: dict[str, list[int]] = {}
    for i, f in enumerate(forecasts):
        groups.setdefault(f.judge, []).append(i)
    values = [np.empty(len(forecasts)) for _ in range(sweeps + 1)]
    ind_moves = np.zeros(sweeps + 1)
    all_converged = True
    ind_elapsed = 0.0
    for idx in groups.values():
        sub = [forecasts[i] for i in idx]
        ps, mv, conv, el, _ = _iterate_values(sub, sweeps, tol, design)
        for t in range(sweeps + 1):
            values[t][idx] = ps[t]
        ind_moves = np.maximum(ind_moves, mv)
        all_converged &= conv
        ind_elapsed += el
    ind = {
        "brier": [_judge_average(forecasts, v) for v in values],
        "moves": ind_moves.tolist(), "converged": all_converged, "elapsed": ind_elapsed,
        "pooled": n_pooled,
    }
    return {"individual": ind, "aggregate": agg}


def run_bench(
    datasets: Iterable[str] = tuple(DATASET_SCALES),
    seeds: Iterable[int] = (0,),
    sweeps: int = 10,
    noise: float = 0.15,
    tol: float = DEFAULT_TOL,
    events_per_judge: int = 34,
    design: str = "neighborhood",
) -> list[BenchRow]:
    rows: list[BenchRow] = []
    for name in datasets:
        n_vars, n_judges = DATASET_SCALES[name]
        for seed in seeds:
            spec = PanelSpec(n_vars, n_judges, events_per_judge, noise, seed)
            panel = generate_panel(spec)
            curves = run_case_curves(panel, sweeps, tol, design)
            for case, c in curves.items():
                for t in range(sweeps + 1):
                    rows.append(BenchRow(
                        name, seed, n_vars, n_judges, len(panel), c["pooled"], case, t,
                        c["brier"][t], c["moves"][t], c["converged"], round(c["elapsed"], 6),
                    ))
    return rows
