"""Coherence polytopes and weighted least-squares projections onto them.

A list of events E_1..E_d defines the polytope conv{v_t}, where v_t is the
0/1 vector of event values under truth assignment t.  A probability vector
is coherent for those events exactly when it lies in that hull.

Projections minimise ``sum_i w_i (c_i - x_i)**2`` over the hull.  Three
solvers sit behind :func:`project_onto`:

* two-vertex hulls (single events, negation pairs) use the closed-form
  segment projection;
* hulls with at most ``FACE_ENUMERATION_MAX`` vertices enumerate every
  affinely independent face, project onto its affine span, and keep the
  nearest candidate with non-negative barycentric weights;
* anything larger runs Wolfe's minimum-norm-point algorithm.
"""

from __future__ import annotations

import itertools
from contextlib import contextmanager
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator, Sequence

import numpy as np

from .config import DEFAULT_CAP, TOL
from .errors import CertificateError, DimensionMismatchError, SolverError
from .events import EventExpr, truth_table

__all__ = [
    "VertexPolytope", "build_polytope", "project_onto", "is_coherent",
    "incoherence", "certificate_slack", "project_onto_dykstra",
    "global_cap_oracle", "project_simplex", "certification",
]

FACE_ENUMERATION_MAX = 8


@dataclass(frozen=True, eq=False)
class VertexPolytope:
    events: tuple[EventExpr, ...]
    vertices: np.ndarray  # (n_vertices, dim), entries 0.0 / 1.0
    weights: np.ndarray  # (dim,), strictly positive

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @cached_property
    def _faces(self) -> "_FaceTable":
        return _FaceTable.build(self.vertices, self.weights)

    @cached_property
    def _sqrt_w(self) -> np.ndarray:
        return np.sqrt(self.weights)

    def contains(self, x, tol: float = TOL.membership) -> bool:
        return is_coherent(self, x, tol)


def build_polytope(
    events: Sequence[EventExpr],
    weights: Sequence[float] | np.ndarray | None = None,
    cap: int = DEFAULT_CAP,
) -> VertexPolytope:
    events = tuple(events)
    if weights is None:
        w = np.ones(len(events))
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape[0] != len(events):
            raise DimensionMismatchError(f"{w.shape[0]} weights for {len(events)} events")
        if not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise ValueError("polytope weights must be finite and positive")
    _, table = truth_table(events, cap)
    # distinct rows in ascending binary order, first event most significant
    d = len(events)
    if d <= 62:
        codes = np.unique(table.astype(np.int64) @ (1 << np.arange(d - 1, -1, -1, dtype=np.int64)))
        vertices = ((codes[:, None] >> np.arange(d - 1, -1, -1)) & 1).astype(float)
    else:
        vertices = np.unique(table, axis=0).astype(float)
    vertices.setflags(write=False)
    w = w.copy()
    w.setflags(write=False)
    return VertexPolytope(events, vertices, w)


# -- certification hook ----------------------------------------------------


@dataclass
class _Monitor:
    enabled: bool = False
    calls: int = 0
    worst: float = 0.0
    failures: list = field(default_factory=list)


_monitor = _Monitor()


@contextmanager
def certification(enabled: bool = True) -> Iterator[_Monitor]:
    """Check the variational inequality on every projection made inside the block."""
    previous = _monitor.enabled
    _monitor.enabled = enabled
    try:
        yield _monitor
    finally:
        _monitor.enabled = previous


def certificate_slack(poly: VertexPolytope, x, y) -> float:
    """max over vertices v of <x - y, v - y>_W; non-positive at the exact projection."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    r = (x - y) * poly.weights
    return float((poly.vertices @ r).max() - y @ r)


# -- solvers ---------------------------------------------------------------


@dataclass(frozen=True)
class _FaceTable:
    """Every affinely independent face, with its weighted projection as one affine map.

    For face f with base vertex v0 and edge rows E, the affine projection
    has coordinates mu = M_f (x - v0) along the edges, M_f = (E W E^T)^-1 E W,
    and lands at y = v0 + E^T mu.  The barycentric weights (1 - sum mu, mu)
    and the landing point of every face are stacked into one affine map,
    so a projection costs a single matrix-vector product.
    """

    members: tuple  # vertex index tuples, one per face
    stacked: np.ndarray  # (F * (K + 1 + d), d)
    shift: np.ndarray  # (F, K + 1 + d)
    n_faces: int
    k: int

    @classmethod
    def build(cls, V: np.ndarray, w: np.ndarray) -> "_FaceTable":
        return _face_table(V.tobytes(), V.shape, w.tobytes())

    def project(self, x: np.ndarray, w: np.ndarray) -> tuple[np.ndarray, int, np.ndarray]:
        out = (self.stacked @ x).reshape(self.n_faces, -1)
        out += self.shift
        kk = self.k + 1
        lam, Y = out[:, :kk], out[:, kk:]
        D = Y - x
        dist = (D * D) @ w
        # padded slots of smaller faces are exactly zero, so they never trip this
        dist[lam.min(axis=1) < -TOL.barycentric] = np.inf
        j = int(dist.argmin())
        if dist[j] == np.inf:
            raise SolverError("no face admits a feasible projection")
        return Y[j], j, lam[j]

    def weights_of(self, j: int, lam_j: np.ndarray, nv: int) -> np.ndarray:
        lam = np.zeros(nv)
        idx = self.members[j]
        lam[list(idx)] = lam_j[: len(idx)]
        return lam


@lru_cache(maxsize=4096)
def _face_structure(vbytes: bytes, shape: tuple[int, int]) -> tuple:
    """Affinely independent faces plus their weight-free geometry, grouped by size."""
    V = np.frombuffer(vbytes).reshape(shape)
    nv, d = shape
    members = []
    for size in range(1, min(nv, d + 1) + 1):
        for idx in itertools.combinations(range(nv), size):
            E = V[list(idx[1:])] - V[idx[0]]
            if size == 1 or np.linalg.matrix_rank(E) == size - 1:
                members.append(idx)
    groups = []
    for size in range(2, max(len(m) for m in members) + 1):
        rows = np.array([f for f, m in enumerate(members) if len(m) == size], dtype=np.intp)
        if rows.size == 0:
            continue
        base = V[[members[f][0] for f in rows]]
        E = V[[list(members[f][1:]) for f in rows]] - base[:, None, :]
        groups.append((size - 1, rows, base[:, :, None], E, E.transpose(0, 2, 1).copy()))
    first = V[[m[0] for m in members]]
    return tuple(members), tuple(groups), first


@lru_cache(maxsize=4096)
def _face_table(vbytes: bytes, shape: tuple[int, int], wbytes: bytes) -> _FaceTable:
    w = np.frombuffer(wbytes)
    d = shape[1]
    members, groups, first = _face_structure(vbytes, shape)
    F = len(members)
    K = max(1, max(len(m) for m in members) - 1)
    R = K + 1 + d
    stacked = np.zeros((F, R, d))
    shift = np.zeros((F, R))
    # vertices: barycentric weight 1, landing point the vertex itself
    shift[:, 0] = 1.0
    shift[:, K + 1:] = first
    # faces with the same vertex count share one batched solve
    for k, rows, base, E, Et in groups:
        EW = E * w
        M = np.linalg.solve(EW @ Et, EW)
        P = Et @ M
        mu_shift = -(M @ base)[:, :, 0]
        stacked[rows, 1:k + 1] = M
        shift[rows, 1:k + 1] = mu_shift
        stacked[rows, 0] = -M.sum(axis=1)
        shift[rows, 0] = 1.0 - mu_shift.sum(axis=1)
        stacked[rows, K + 1:] = P
        shift[rows, K + 1:] = base[:, :, 0] - (P @ base)[:, :, 0]
    return _FaceTable(members, stacked.reshape(F * R, d), shift, F, K)


def _segment(V: np.ndarray, w: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    if V.shape[0] == 1:
        return V[0].copy(), np.ones(1)
    e = V[1] - V[0]
    t = float(np.dot(e * w, x - V[0]) / np.dot(e * w, e))
    t = min(1.0, max(0.0, t))
    return V[0] + t * e, np.array([1.0 - t, t])


def _affine_min_norm(Q: np.ndarray) -> np.ndarray:
    """Affine weights alpha (sum 1) minimising ||Q^T alpha||."""
    k = Q.shape[0]
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = Q @ Q.T
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
    return sol[:k]


def _wolfe(P: np.ndarray, max_iter: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    """Minimum-norm point of conv(rows of P); returns (point, weights over rows)."""
    nv = P.shape[0]
    scale = max(1.0, float(np.max(np.abs(P))))
    eps = 1e-14 * scale * scale
    j = int(np.argmin((P**2).sum(axis=1)))
    S = [j]
    lam = np.array([1.0])
    z = P[j].copy()
    for _ in range(max_iter):
        g = P @ z
        j = int(np.argmin(g))
        if g[j] >= z @ z - eps or j in S:
            out = np.zeros(nv)
            out[S] = lam
            return z, out
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_min_norm(P[S])
            if np.all(alpha > 1e-15):
                lam = alpha
                break
            mask = alpha <= 1e-15
            ratios = np.full(len(S), np.inf)
            ratios[mask] = lam[mask] / (lam[mask] - alpha[mask])
            drop = int(np.argmin(ratios))
            theta = min(1.0, float(ratios[drop]))
            lam = theta * alpha + (1.0 - theta) * lam
            lam[drop] = 0.0
            keep = lam > 1e-15
            keep[drop] = False
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam /= lam.sum()
        z = lam @ P[S]
    raise SolverError("minimum-norm-point iteration limit reached", float(g[j] - z @ z))


def _project(poly: VertexPolytope, x: np.ndarray, want_weights: bool) -> tuple[np.ndarray, np.ndarray | None]:
    V, w = poly.vertices, poly.weights
    nv = V.shape[0]
    lam = None
    if nv <= 2:
        y, lam = _segment(V, w, x)
    elif nv <= FACE_ENUMERATION_MAX:
        faces = poly._faces
        y, j, lam_j = faces.project(x, w)
        if want_weights:
            lam = faces.weights_of(j, lam_j, nv)
    else:
        s = poly._sqrt_w
        zmin, lam = _wolfe((V - x) * s)
        y = x + zmin / s
    return y.clip(0.0, 1.0), lam


def _as_point(poly: VertexPolytope, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        x = x.reshape(-1)
    if x.shape[0] != poly.dim:
        raise DimensionMismatchError(f"point has {x.shape[0]} entries, polytope has {poly.dim} events")
    if not np.isfinite(x).all():
        raise ValueError("point has non-finite entries")
    return x


def project_onto(poly: VertexPolytope, x, return_weights: bool = False):
    """Weighted least-squares projection of ``x`` onto the coherence hull.

    Points already within ``TOL.snap`` of the hull come back unchanged, so
    coherent inputs are exact fixed points.  With ``return_weights`` the
    barycentric weights over ``poly.vertices`` are returned too.
    """
    y, lam, _ = _certified(poly, _as_point(poly, x), return_weights)
    return (y, lam) if return_weights else y


def _certified(poly: VertexPolytope, x: np.ndarray, return_weights: bool = False):
    """Projection, barycentric weights (or None) and the largest coordinate move.

    ``x`` must already be a finite float vector of the right length.
    """
    y, lam = _project(poly, x, return_weights)
    move = float(np.abs(y - x).max())
    if move <= TOL.snap:
        y, move = x.copy(), 0.0
    slack = certificate_slack(poly, x, y)
    if _monitor.enabled:
        _monitor.calls += 1
        _monitor.worst = max(_monitor.worst, slack)
    if slack > TOL.certificate:
        if _monitor.enabled:
            _monitor.failures.append(slack)
        raise CertificateError("projection failed its optimality check", slack)
    return y, lam, move


def incoherence(poly: VertexPolytope, x) -> float:
    """Euclidean distance from ``x`` to the hull."""
    x = _as_point(poly, x)
    return float(np.linalg.norm(x - project_onto(poly, x)))


def is_coherent(poly: VertexPolytope, x, tol: float = TOL.membership) -> bool:
    return incoherence(poly, x) <= tol


# -- intersections ---------------------------------------------------------


def _shared_weights(polys, index_maps, m: int) -> np.ndarray:
    w = np.full(m, np.nan)
    for poly, idx in zip(polys, index_maps):
        idx = np.asarray(idx, dtype=int)
        if idx.shape[0] != poly.dim:
            raise DimensionMismatchError("index map length differs from polytope dimension")
        seen = ~np.isnan(w[idx])
        if np.any(np.abs(w[idx][seen] - poly.weights[seen]) > 1e-12):
            raise ValueError("polytopes disagree on the weight of a shared coordinate")
        w[idx] = poly.weights
    return w


def project_onto_dykstra(
    polys: Sequence[VertexPolytope],
    index_maps: Sequence[Sequence[int]],
    x,
    max_sweeps: int = 10_000,
    tol: float = 1e-10,
) -> np.ndarray:
    """Weighted projection of ``x`` onto the intersection of several local hulls.

    Each polytope constrains the coordinates listed in its index map;
    coordinates no map mentions are left alone.  Dykstra's correction
    terms make the limit the projection itself rather than just some
    point of the intersection.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if len(polys) != len(index_maps):
        raise DimensionMismatchError("one index map is needed per polytope")
    _shared_weights(polys, index_maps, x.shape[0])
    maps = [np.asarray(idx, dtype=int) for idx in index_maps]
    if len(polys) == 1:
        out = x.copy()
        out[maps[0]] = project_onto(polys[0], x[maps[0]])
        return out

    z = x.copy()
    incr = [np.zeros(len(idx)) for idx in maps]
    change = np.inf
    for _ in range(max_sweeps):
        change = 0.0
        for k, (poly, idx) in enumerate(zip(polys, maps)):
            shifted = z[idx] + incr[k]
            p = project_onto(poly, shifted)
            new_incr = shifted - p
            change = max(change, float(np.max(np.abs(p - z[idx]))),
                         float(np.max(np.abs(new_incr - incr[k]))))
            z[idx] = p
            incr[k] = new_incr
        if change <= tol:
            return z
    raise SolverError(f"Dykstra did not converge in {max_sweeps} sweeps", change)


# -- global oracle ---------------------------------------------------------


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {u >= 0, sum u = 1} by the sort-and-threshold rule."""
    n = v.shape[0]
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, n + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def global_cap_oracle(
    events: Sequence[EventExpr],
    weights=None,
    x=None,
    cap: int = DEFAULT_CAP,
    tol: float = TOL.oracle_stationarity,
    max_iter: int = 2_000_000,
) -> np.ndarray:
    """Exact CAP solution by optimising over atom probabilities.

    Solves ``min 1/2 sum_i w_i ((A mu)_i - x_i)**2`` over the probability
    simplex of the 2**n atoms, where ``A[i, t]`` is the value of event i
    in atom t.  Accelerated projected gradient with fixed step 1/L and
    adaptive restart; stops when the projected-gradient step
    ``||mu - Proj(mu - grad/L)||_inf`` falls below ``tol``.
    """
    events = list(events)
    m = len(events)
    w = np.ones(m) if weights is None else np.asarray(weights, dtype=float)
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != m or w.shape[0] != m:
        raise DimensionMismatchError("events, weights and point must have equal length")
    _, table = truth_table(events, cap)
    A = table.T.astype(float)
    L = float(np.linalg.norm(A, 2)) ** 2 * float(w.max())

    def grad(mu):
        return A.T @ (w * (A @ mu - x))

    mu = np.full(A.shape[1], 1.0 / A.shape[1])
    y = mu.copy()
    t = 1.0
    residual = np.inf
    for k in range(max_iter):
        mu_next = project_simplex(y - grad(y) / L)
        if np.dot(y - mu_next, mu_next - mu) > 0.0:
            # momentum points uphill: restart from the plain gradient step
            t = 1.0
            y = mu_next
        else:
            t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
            y = mu_next + ((t - 1.0) / t_next) * (mu_next - mu)
            t = t_next
        mu = mu_next
        if k % 8 == 0:
            residual = float(np.max(np.abs(mu - project_simplex(mu - grad(mu) / L))))
            if residual <= tol:
                return np.clip(A @ mu, 0.0, 1.0)
    raise SolverError("global oracle did not reach stationarity", residual)
