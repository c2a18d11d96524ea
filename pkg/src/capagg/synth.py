"""Synthetic forecasting panels shaped like small human-subject studies.

Ground truth is a joint distribution over ``n_vars`` Boolean variables:
independent Bernoulli marginals by default, or a two-regime mixture of
independent products when ``correlated`` is set.  One world is drawn from
it.  Each judge sees a random mix of basic events and the two-literal
forms ``p & q``, ``p & !q``, ``p | q`` and ``p | !q``, and reports the true
event probability plus Gaussian noise, clipped to [0, 1].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import Forecast
from .events import EventExpr, assignment_matrix, evaluate, evaluate_columns, parse_event, support

__all__ = ["PanelSpec", "DATASET_SCALES", "generate_panel", "event_probability"]

COMPLEX_FORMS = ("{a} & {b}", "{a} & !{b}", "{a} | {b}", "{a} | !{b}")

# (basic variables, judges) per dataset; every judge rates 34 events
DATASET_SCALES = {
    "STCK": (30, 47),
    "FIN": (10, 31),
    "NBA1": (10, 29),
    "NBA2": (10, 36),
    "HSTN": (10, 17),
}


@dataclass(frozen=True)
class PanelSpec:
    n_vars: int = 10
    n_judges: int = 30
    events_per_judge: int = 34
    noise: float = 0.15
    seed: int = 0
    basic_fraction: float = 10 / 34
    correlated: bool = False

    def __post_init__(self):
        if self.n_vars < 2:
            raise ValueError("need at least two basic variables")
        if self.n_judges < 1 or self.events_per_judge < 1:
            raise ValueError("judge and event counts must be positive")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if not 0.0 <= self.basic_fraction <= 1.0:
            raise ValueError("basic_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class _World:
    names: list[str]
    # mixture components: (regime weight, marginals)
    components: list[tuple[float, np.ndarray]]
    state: dict[str, bool]


def _variable_names(n: int) -> list[str]:
    width = len(str(n))
    return [f"x{i:0{width}d}" for i in range(1, n + 1)]


def event_probability(e: EventExpr, names: list[str], components) -> float:
    """Exact probability of ``e`` under a mixture of independent products."""
    local = sorted(support(e))
    rows = assignment_matrix(local)
    truth = evaluate_columns(e, {n: rows[:, i] for i, n in enumerate(local)})
    pos = [names.index(n) for n in local]
    total = 0.0
    for weight, marg in components:
        m = marg[pos]
        atom = np.prod(np.where(rows, m, 1.0 - m), axis=1)
        total += weight * float(atom[truth].sum())
    return total


def _sample_world(spec: PanelSpec, rng: np.random.Generator) -> _World:
    names = _variable_names(spec.n_vars)
    if spec.correlated:
        pi = float(rng.uniform(0.3, 0.7))
        components = [(pi, rng.uniform(0.05, 0.95, spec.n_vars)),
                      (1.0 - pi, rng.uniform(0.05, 0.95, spec.n_vars))]
        regime = 0 if rng.random() < pi else 1
        marg = components[regime][1]
    else:
        marg = rng.uniform(0.05, 0.95, spec.n_vars)
        components = [(1.0, marg)]
    state = dict(zip(names, (bool(v) for v in rng.random(spec.n_vars) < marg)))
    return _World(names, components, state)


def _judge_events(spec: PanelSpec, names: list[str], rng: np.random.Generator) -> list[str]:
    n_basic = int(round(spec.events_per_judge * spec.basic_fraction))
    n_complex = spec.events_per_judge - n_basic
    picks = rng.choice(len(names), size=n_basic, replace=n_basic > len(names))
    texts = [names[i] for i in picks]
    chosen: set[str] = set()
    for _ in range(n_complex):
        # redraw a few times to avoid repeats within one judge
        for _attempt in range(20):
            a, b = rng.choice(len(names), size=2, replace=False)
            form = COMPLEX_FORMS[int(rng.integers(len(COMPLEX_FORMS)))]
            text = form.format(a=names[a], b=names[b])
            if text not in chosen:
                break
        chosen.add(text)
        texts.append(text)
    return texts


def generate_panel(spec: PanelSpec) -> list[Forecast]:
    """Forecast rows with truths; identical specs give identical panels."""
    rng = np.random.default_rng(spec.seed)
    world = _sample_world(spec, rng)
    width = len(str(spec.n_judges))
    cache: dict[str, tuple[EventExpr, float, bool]] = {}
    rows = []
    for j in range(1, spec.n_judges + 1):
        judge = f"j{j:0{width}d}"
        for text in _judge_events(spec, world.names, rng):
            if text not in cache:
                e = parse_event(text)
                cache[text] = (e, event_probability(e, world.names, world.components),
                               evaluate(e, world.state))
            e, prob, truth = cache[text]
            p = prob + spec.noise * float(rng.standard_normal()) if spec.noise > 0 else prob
            rows.append(Forecast(judge, e, min(1.0, max(0.0, p)), truth))
    return rows
