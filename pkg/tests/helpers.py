"""Independent reference computations used by the tests."""

from __future__ import annotations

import itertools

import numpy as np

from capagg.events import parse_event

FORMS = ("{a}", "!{a}", "{a} & {b}", "{a} & !{b}", "{a} | {b}", "{a} | !{b}")


def grid_projection(V: np.ndarray, w: np.ndarray, x: np.ndarray, steps: int = 120) -> np.ndarray:
    """Nearest hull point over a barycentric grid with the given resolution."""
    V = np.asarray(V, dtype=float)
    nv = V.shape[0]
    best, best_d = None, np.inf
    # compositions of `steps` into nv non-negative parts
    for cuts in itertools.combinations(range(steps + nv - 1), nv - 1):
        parts = np.diff(np.concatenate(([-1], cuts, [steps + nv - 1]))) - 1
        y = (parts / steps) @ V
        d = float(np.dot(w, (y - x) ** 2))
        if d < best_d:
            best, best_d = y, d
    return best


def grid_projection_fast(V, w, x, steps: int = 200) -> np.ndarray:
    """Vectorised grid search for hulls with up to four vertices."""
    V = np.asarray(V, dtype=float)
    nv = V.shape[0]
    g = np.arange(steps + 1)
    if nv == 2:
        lam = np.stack([g, steps - g], axis=1)
    elif nv == 3:
        a, b = np.meshgrid(g, g, indexing="ij")
        ok = a + b <= steps
        lam = np.stack([a[ok], b[ok], steps - a[ok] - b[ok]], axis=1)
    elif nv == 4:
        a, b, c = np.meshgrid(g, g, g, indexing="ij")
        ok = a + b + c <= steps
        lam = np.stack([a[ok], b[ok], c[ok], steps - a[ok] - b[ok] - c[ok]], axis=1)
    else:
        return grid_projection(V, w, x, steps=min(steps, 30))
    Y = (lam / steps) @ V
    d = ((Y - x) ** 2) @ np.asarray(w, dtype=float)
    return Y[int(np.argmin(d))]


def segment_projection(x1: float, x2: float) -> tuple[float, float]:
    """Unit-weight projection onto {(t, 1 - t): 0 <= t <= 1}."""
    t = min(1.0, max(0.0, (x1 - x2 + 1.0) / 2.0))
    return t, 1.0 - t


def random_events(rng: np.random.Generator, n_vars: int, n_events: int, forms=FORMS) -> list:
    """Distinct-text events over variables v0..v{n_vars-1}; duplicates by meaning are allowed."""
    names = [f"v{i}" for i in range(n_vars)]
    out, seen = [], set()
    for _ in range(50 * n_events):
        if len(out) == n_events:
            break
        form = forms[int(rng.integers(len(forms)))]
        if "{b}" in form and n_vars < 2:
            continue
        a, b = rng.choice(n_vars, size=2, replace=False) if n_vars > 1 else (0, 0)
        text = form.format(a=names[a], b=names[b])
        if text not in seen:
            seen.add(text)
            out.append(parse_event(text))
    return out


def random_distribution(rng: np.random.Generator, n_atoms: int) -> np.ndarray:
    return rng.dirichlet(np.full(n_atoms, 0.5))
