"""Brier score, slope and the raw / individual / aggregate / linear-average comparison."""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import RunConfig
from .engine import Forecast, aggregate, design_subsets, pool
from .events import canonical_key
from .errors import DataError, UndefinedSlopeError

__all__ = ["brier", "brier_mean", "slope", "JudgeScore", "ScoreReport", "evaluate_cases", "CASES"]

CASES = ("raw", "individual", "aggregate", "linear_avg")


def _unpack(probs, truths) -> tuple[np.ndarray, np.ndarray]:
    if truths is None:
        forecasts = list(probs)
        if any(f.truth is None for f in forecasts):
            raise DataError("every forecast needs a truth value to be scored")
        probs = [f.p_hat for f in forecasts]
        truths = [f.truth for f in forecasts]
    p = np.asarray(probs, dtype=float)
    t = np.asarray(truths, dtype=float)
    if p.shape != t.shape:
        raise ValueError("probabilities and truths differ in length")
    if np.isnan(t).any():
        raise DataError("every forecast needs a truth value to be scored")
    return p, t


def brier(probs, truths=None, weights=None) -> float:
    """Quadratic penalty: sum of (truth - p)**2, optionally weighted.

    Pass either a list of :class:`Forecast` with truths, or parallel
    sequences of probabilities and truth values.
    """
    p, t = _unpack(probs, truths)
    sq = (t - p) ** 2
    if weights is not None:
        sq = sq * np.asarray(weights, dtype=float)
    return float(sq.sum())


def brier_mean(probs, truths=None) -> float:
    p, t = _unpack(probs, truths)
    if p.size == 0:
        raise ValueError("cannot score an empty forecast set")
    return float(((t - p) ** 2).mean())


def slope(probs, truths=None) -> float:
    """Mean forecast over true events minus mean forecast over false ones."""
    p, t = _unpack(probs, truths)
    true = t == 1.0
    if true.all() or not true.any():
        raise UndefinedSlopeError("slope needs at least one true and one false event")
    return float(p[true].mean() - p[~true].mean())


@dataclass(frozen=True)
class JudgeScore:
    n: int
    brier_total: float
    brier_mean: float
    slope: float | None


@dataclass
class ScoreReport:
    """Scores for one evaluation case.

    ``panel_brier`` and ``panel_slope`` average judges with equal weight;
    ``pooled_brier`` is the mean over all forecasts, so it weights judges
    by how many forecasts they made.  Judges whose events are all true or
    all false have no slope and are skipped in ``panel_slope``.
    """

    case: str
    per_judge: dict[str, JudgeScore]
    panel_brier: float
    panel_slope: float | None
    pooled_brier: float
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "case": self.case,
            "panel_brier": self.panel_brier,
            "panel_slope": self.panel_slope,
            "pooled_brier": self.pooled_brier,
            "per_judge": {
                j: {"n": s.n, "brier_total": s.brier_total, "brier_mean": s.brier_mean, "slope": s.slope}
                for j, s in self.per_judge.items()
            },
            "metadata": self.metadata,
        }


def _by_judge(forecasts: Sequence[Forecast]) -> "OrderedDict[str, list[int]]":
    groups: OrderedDict[str, list[int]] = OrderedDict()
    for i, f in enumerate(forecasts):
        groups.setdefault(f.judge, []).append(i)
    return groups


def _report(case: str, forecasts: Sequence[Forecast], values: np.ndarray, metadata: dict) -> ScoreReport:
    truths = np.array([float(f.truth) for f in forecasts])
    per_judge = {}
    for judge, idx in _by_judge(forecasts).items():
        p, t = values[idx], truths[idx]
        try:
            s = slope(p, t)
        except UndefinedSlopeError:
            s = None
        per_judge[judge] = JudgeScore(len(idx), brier(p, t), brier_mean(p, t), s)
    slopes = [s.slope for s in per_judge.values() if s.slope is not None]
    return ScoreReport(
        case=case,
        per_judge=per_judge,
        panel_brier=math.fsum(s.brier_mean for s in per_judge.values()) / len(per_judge),
        panel_slope=math.fsum(slopes) / len(slopes) if slopes else None,
        pooled_brier=brier_mean(values, truths),
        metadata=dict(metadata),
    )


def _aggregated_values(forecasts: Sequence[Forecast], config: RunConfig) -> tuple[np.ndarray, np.ndarray, dict]:
    """Per-forecast values after CAP aggregation and after plain pooling."""
    pooled = pool(forecasts)
    design = design_subsets(pooled, config.design, config.cap)
    report = aggregate(pooled, design, config.method, config.max_sweeps, config.tol,
                       parallel=config.parallel, cap=config.cap, check_final=False)
    where = {e.key: i for i, e in enumerate(pooled.entries)}
    idx = [where[canonical_key(f.event)] for f in forecasts]
    info = {"iterations_run": report.iterations_run, "converged": report.converged}
    return report.final[idx], pooled.q_hat[idx], info


def evaluate_cases(forecasts: Sequence[Forecast], config: RunConfig | None = None) -> list[ScoreReport]:
    """Score the panel four ways: raw, individual, aggregate, linear_avg.

    ``individual`` runs the engine on each judge's forecasts alone;
    ``aggregate`` and ``linear_avg`` replace every forecast with the
    panel-level value for the same event.
    """
    config = config or RunConfig()
    forecasts = list(forecasts)
    if not forecasts:
        raise DataError("no forecasts")
    if any(f.truth is None for f in forecasts):
        raise DataError("every forecast needs a truth value to be scored")
    meta = {"judge_weighting": "equal", "alternative": "pooled_brier weights judges by forecast count",
            "design": config.design, "method": config.method}

    raw = np.array([f.p_hat for f in forecasts])

    individual = np.empty_like(raw)
    sweeps = []
    for idx in _by_judge(forecasts).values():
        values, _, info = _aggregated_values([forecasts[i] for i in idx], config)
        individual[idx] = values
        sweeps.append(info["iterations_run"])

    agg, linear, info = _aggregated_values(forecasts, config)

    return [
        _report("raw", forecasts, raw, meta),
        _report("individual", forecasts, individual, {**meta, "max_iterations": max(sweeps)}),
        _report("aggregate", forecasts, agg, {**meta, **info}),
        _report("linear_avg", forecasts, linear, meta),
    ]
