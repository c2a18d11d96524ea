"""Coherence diagnostics for a forecast file."""

from __future__ import annotations

from typing import Sequence

from .config import DEFAULT_CAP, TOL
from .engine import Forecast, PooledForecastSet, build_local_polytopes, design_subsets, pool
from .events import And, Or, canonical_key, to_text
from .polytope import incoherence

__all__ = ["fallacy_flags", "local_residuals", "coherence_report"]


def fallacy_flags(forecasts: Sequence[Forecast]) -> list[dict]:
    """Conjunctions rated above a conjunct, disjunctions rated below a disjunct.

    Only compares forecasts made by the same judge.
    """
    flags = []
    by_judge: dict[str, dict[str, Forecast]] = {}
    for f in forecasts:
        by_judge.setdefault(f.judge, {})[canonical_key(f.event)] = f
    for judge, table in by_judge.items():
        for f in table.values():
            e = f.event
            if not isinstance(e, (And, Or)):
                continue
            for part in (e.left, e.right):
                other = table.get(canonical_key(part))
                if other is None:
                    continue
                if isinstance(e, And) and f.p_hat > other.p_hat:
                    kind = "conjunction_fallacy"
                elif isinstance(e, Or) and f.p_hat < other.p_hat:
                    kind = "disjunction_fallacy"
                else:
                    continue
                flags.append({
                    "judge": judge, "kind": kind,
                    "event": to_text(e), "prob": f.p_hat,
                    "part": to_text(part), "part_prob": other.p_hat,
                })
    return flags


def local_residuals(pooled: PooledForecastSet, design: str = "neighborhood", cap: int = DEFAULT_CAP) -> list[dict]:
    """Distance of each subset's forecasts from its local coherence hull."""
    d = design_subsets(pooled, design, cap)
    q = pooled.q_hat
    out = []
    for s, poly in zip(d.subsets, build_local_polytopes(pooled, d, cap)):
        out.append({
            "events": [to_text(pooled.entries[i].event) for i in s],
            "residual": incoherence(poly, q[list(s)]),
        })
    return out


def _summary(pooled: PooledForecastSet, design: str, cap: int) -> dict:
    subsets = local_residuals(pooled, design, cap)
    worst = max((s["residual"] for s in subsets), default=0.0)
    return {
        "coherent": worst <= TOL.membership,
        "max_residual": worst,
        "subsets": subsets,
    }


def coherence_report(forecasts: Sequence[Forecast], design: str = "neighborhood", cap: int = DEFAULT_CAP) -> dict:
    forecasts = list(forecasts)
    groups: dict[str, list[Forecast]] = {}
    for f in forecasts:
        groups.setdefault(f.judge, []).append(f)
    flags = fallacy_flags(forecasts)
    judges = {}
    for judge, fs in groups.items():
        summary = _summary(pool(fs), design, cap)
        summary["flags"] = [fl for fl in flags if fl["judge"] == judge]
        judges[judge] = summary
    return {
        "design": design,
        "judges": judges,
        "pooled": _summary(pool(forecasts), design, cap),
        "flags": flags,
    }
