"""Pooling, subset design and the cyclic projection sweep."""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import DEFAULT_CAP, DEFAULT_SWEEPS, DEFAULT_TOL
from .errors import DataError, SupportTooLargeError
from .events import (
    And, EventExpr, Not, Or, canonical_key, complement, joint_support, literal,
    parse_event, to_text,
)
from .polytope import VertexPolytope, _certified, build_polytope, incoherence

__all__ = [
    "Forecast", "PooledEntry", "PooledForecastSet", "SubsetDesign",
    "AggregationReport", "pool", "linear_average", "design_subsets",
    "schedule_parallel", "aggregate", "build_local_polytopes", "STRATEGIES", "METHODS",
]

STRATEGIES = ("singleton", "neighborhood", "global", "custom")
METHODS = ("cyclic", "dykstra")


@dataclass(frozen=True)
class Forecast:
    judge: str
    event: EventExpr
    p_hat: float
    truth: bool | None = None

    def __post_init__(self):
        if isinstance(self.event, str):
            object.__setattr__(self, "event", parse_event(self.event))
        p = float(self.p_hat)
        if not (0.0 <= p <= 1.0):
            raise DataError(f"probability {self.p_hat!r} for {to_text(self.event)!r} is outside [0, 1]")
        object.__setattr__(self, "p_hat", p)


@dataclass(frozen=True)
class PooledEntry:
    event: EventExpr
    key: str
    q_hat: float
    weight: int
    contributions: tuple[tuple[str, float], ...]
    truth: bool | None = None


@dataclass(frozen=True)
class PooledForecastSet:
    entries: tuple[PooledEntry, ...]

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def events(self) -> list[EventExpr]:
        return [e.event for e in self.entries]

    @property
    def q_hat(self) -> np.ndarray:
        return np.array([e.q_hat for e in self.entries], dtype=float)

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.entries], dtype=float)

    @property
    def truths(self) -> np.ndarray | None:
        """0/1 truth vector, or None unless every entry carries a truth value."""
        if any(e.truth is None for e in self.entries):
            return None
        return np.array([float(e.truth) for e in self.entries])

    def index_of(self, event: EventExpr | str) -> int:
        if isinstance(event, str):
            event = parse_event(event)
        key = canonical_key(event)
        for i, e in enumerate(self.entries):
            if e.key == key:
                return i
        raise KeyError(to_text(event))


def pool(forecasts: Iterable[Forecast]) -> PooledForecastSet:
    """Merge forecasts of semantically equal events into weighted means."""
    groups: dict[str, list[Forecast]] = {}
    for f in forecasts:
        groups.setdefault(canonical_key(f.event), []).append(f)
    if not groups:
        raise DataError("no forecasts")
    entries = []
    for key, fs in groups.items():
        truths = {f.truth for f in fs if f.truth is not None}
        if len(truths) > 1:
            raise DataError(f"conflicting truth values for event {to_text(fs[0].event)!r}")
        entries.append(PooledEntry(
            event=fs[0].event,
            key=key,
            q_hat=math.fsum(f.p_hat for f in fs) / len(fs),
            weight=len(fs),
            contributions=tuple((f.judge, f.p_hat) for f in fs),
            truth=truths.pop() if truths else None,
        ))
    return PooledForecastSet(tuple(entries))


# the baseline aggregator is plain pooling
linear_average = pool


# -- subset designs --------------------------------------------------------


@dataclass(frozen=True)
class SubsetDesign:
    name: str
    subsets: tuple[tuple[int, ...], ...]

    def __len__(self) -> int:
        return len(self.subsets)

    def validate(self, m: int) -> None:
        covered = set()
        for s in self.subsets:
            if not s:
                raise ValueError("empty subset in design")
            if min(s) < 0 or max(s) >= m:
                raise ValueError(f"subset {s} indexes outside 0..{m - 1}")
            covered.update(s)
        missing = sorted(set(range(m)) - covered)
        if missing:
            raise ValueError(f"design leaves entries {missing[:10]} unconstrained")


def _connective_args(e: EventExpr) -> tuple[EventExpr, EventExpr] | None:
    while isinstance(e, Not) and isinstance(e.child, Not):
        e = e.child.child
    if isinstance(e, (And, Or)):
        return e.left, e.right
    if isinstance(e, Not) and isinstance(e.child, (And, Or)):
        # De Morgan: !(a & b) == !a | !b
        return complement(e.child.left), complement(e.child.right)
    return None


def design_subsets(
    pooled: PooledForecastSet,
    strategy: str = "neighborhood",
    cap: int = DEFAULT_CAP,
    custom: Sequence[Sequence[int]] | None = None,
) -> SubsetDesign:
    """Choose the local coherence constraints.

    ``neighborhood`` groups each literal with its negation and each binary
    connective with the entries equal to its arguments (or to their
    complements, which carry the same information).  Entries left over get
    a singleton subset.
    """
    m = len(pooled)
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown design strategy {strategy!r}; expected one of {STRATEGIES}")
    if strategy == "singleton":
        subsets = [(i,) for i in range(m)]
    elif strategy == "global":
        subsets = [tuple(range(m))]
    elif strategy == "custom":
        if custom is None:
            raise ValueError("custom design needs explicit subsets")
        subsets = [tuple(sorted(set(int(i) for i in s))) for s in custom]
    else:
        subsets = _neighborhood(pooled)

    events = pooled.events
    for s in subsets:
        n = len(joint_support(events[i] for i in s))
        if n > cap:
            raise SupportTooLargeError(n, cap)
    design = SubsetDesign(strategy, tuple(subsets))
    design.validate(m)
    return design


def _neighborhood(pooled: PooledForecastSet) -> list[tuple[int, ...]]:
    index = {e.key: i for i, e in enumerate(pooled.entries)}
    seen: set[tuple[int, ...]] = set()
    subsets: list[tuple[int, ...]] = []

    def add(members) -> None:
        s = tuple(sorted(members))
        if len(s) > 1 and s not in seen:
            seen.add(s)
            subsets.append(s)

    for i, entry in enumerate(pooled.entries):
        if literal(entry.event) is not None:
            j = index.get(canonical_key(complement(entry.event)))
            if j is not None:
                add((i, j))

    for i, entry in enumerate(pooled.entries):
        args = _connective_args(entry.event)
        if args is None:
            continue
        members = {i}
        for a in args:
            for candidate in (a, complement(a)):
                j = index.get(canonical_key(candidate))
                if j is not None:
                    members.add(j)
        add(members)

    covered = set().union(*subsets) if subsets else set()
    subsets.extend((i,) for i in range(len(pooled)) if i not in covered)
    return subsets


def schedule_parallel(design: SubsetDesign) -> list[list[int]]:
    """Greedy first-fit colouring of the subset-overlap graph.

    Subsets within a batch share no entry, so their projections commute.
    """
    batches: list[list[int]] = []
    used: list[set[int]] = []
    for j, s in enumerate(design.subsets):
        for batch, members in zip(batches, used):
            if members.isdisjoint(s):
                batch.append(j)
                members.update(s)
                break
        else:
            batches.append([j])
            used.append(set(s))
    return batches


# -- sweeps ----------------------------------------------------------------


@dataclass
class AggregationReport:
    """Outcome of :func:`aggregate`.

    ``brier`` and ``brier_mean`` hold the weighted pooled score of the
    input followed by one value per completed sweep; both stay empty when
    some entry lacks a truth value.
    """

    final: np.ndarray
    iterations_run: int
    converged: bool
    method: str
    design: str
    max_moves: list[float] = field(default_factory=list)
    max_residuals: list[float] = field(default_factory=list)
    brier: list[float] = field(default_factory=list)
    brier_mean: list[float] = field(default_factory=list)
    final_residual: float | None = None
    elapsed: float = 0.0
    iterates: list[np.ndarray] | None = None

    def to_dict(self, pooled: PooledForecastSet | None = None, timing: bool = False) -> dict:
        """JSON-ready summary; wall time is left out unless ``timing`` so reruns match byte for byte."""
        out = {
            "method": self.method,
            "design": self.design,
            "iterations_run": self.iterations_run,
            "converged": self.converged,
            "max_moves": self.max_moves,
            "max_residuals": self.max_residuals,
            "brier": self.brier,
            "brier_mean": self.brier_mean,
            "final_residual": self.final_residual,
        }
        if timing:
            out["elapsed_s"] = self.elapsed
        if pooled is not None:
            out["forecasts"] = [
                {"event": to_text(e.event), "prob": float(p), "input": e.q_hat, "weight": e.weight}
                for e, p in zip(pooled.entries, self.final)
            ]
        else:
            out["final"] = [float(p) for p in self.final]
        return out


def _weighted_brier(q: np.ndarray, truths: np.ndarray, w: np.ndarray) -> float:
    return float(np.dot(w, (q - truths) ** 2))


def build_local_polytopes(
    pooled: PooledForecastSet, design: SubsetDesign, cap: int = DEFAULT_CAP
) -> list[VertexPolytope]:
    events, w = pooled.events, pooled.weights
    return [build_polytope([events[i] for i in s], w[list(s)], cap) for s in design.subsets]


def aggregate(
    pooled: PooledForecastSet,
    design: SubsetDesign,
    method: str = "cyclic",
    max_sweeps: int = DEFAULT_SWEEPS,
    tol: float = DEFAULT_TOL,
    parallel: bool = False,
    cap: int = DEFAULT_CAP,
    record_iterates: bool = False,
    check_final: bool = True,
    polytopes: Sequence[VertexPolytope] | None = None,
) -> AggregationReport:
    """Cyclically project the pooled forecasts onto every local hull.

    Each sweep visits ``design.subsets`` in order and replaces the
    subset's coordinates by their weighted projection.  The run stops once
    a whole sweep moves no coordinate by more than ``tol``.  With
    ``parallel`` the sweep order becomes the concatenation of
    :func:`schedule_parallel` batches and each batch runs on a thread
    pool; results equal a sequential run in that order.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if max_sweeps < 1:
        raise ValueError("max_sweeps must be at least 1")
    design.validate(len(pooled))
    start = time.perf_counter()

    q = pooled.q_hat
    w = pooled.weights
    truths = pooled.truths
    polys = list(polytopes) if polytopes is not None else build_local_polytopes(pooled, design, cap)
    maps = [np.array(s, dtype=np.intp) for s in design.subsets]
    incr = [np.zeros(len(s)) for s in maps] if method == "dykstra" else None
    batches = schedule_parallel(design) if parallel else [[j] for j in range(len(maps))]

    def step(j: int, current: np.ndarray) -> tuple[np.ndarray, float]:
        # returns the replacement slice and the move it causes
        if incr is None:
            p, _, moved = _certified(polys[j], current)
            return p, moved
        shifted = current + incr[j]
        p, _, _ = _certified(polys[j], shifted)
        incr[j] = shifted - p
        return p, float(np.abs(p - current).max())

    report = AggregationReport(
        final=q, iterations_run=0, converged=False, method=method, design=design.name,
        iterates=[q.copy()] if record_iterates else None,
    )
    if truths is not None:
        b = _weighted_brier(q, truths, w)
        report.brier.append(b)
        report.brier_mean.append(b / w.sum())

    executor = ThreadPoolExecutor(max_workers=os.cpu_count() or 1) if parallel else None
    try:
        for sweep in range(1, max_sweeps + 1):
            before = q.copy()
            worst = 0.0
            for batch in batches:
                slices = [q[maps[j]] for j in batch]
                if executor is not None and len(batch) > 1:
                    results = list(executor.map(step, batch, slices))
                else:
                    results = [step(j, s) for j, s in zip(batch, slices)]
                for j, (p, moved) in zip(batch, results):
                    q[maps[j]] = p
                    worst = max(worst, moved)
            move = float(np.max(np.abs(q - before))) if q.size else 0.0
            report.iterations_run = sweep
            report.max_moves.append(move)
            report.max_residuals.append(worst)
            if truths is not None:
                b = _weighted_brier(q, truths, w)
                report.brier.append(b)
                report.brier_mean.append(b / w.sum())
            if record_iterates:
                report.iterates.append(q.copy())
            if move <= tol:
                report.converged = True
                break
    finally:
        if executor is not None:
            executor.shutdown()

    report.final = q
    if check_final:
        report.final_residual = max(
            (incoherence(poly, q[idx]) for poly, idx in zip(polys, maps)), default=0.0
        )
    report.elapsed = time.perf_counter() - start
    return report
