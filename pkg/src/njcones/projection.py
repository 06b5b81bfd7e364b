"""Euclidean projection onto decision cones and classification distances.

The projection of v onto {x : Hx >= 0} is unique and satisfies
x - v = H_A^T mu with mu >= 0 supported on the tight constraints A.
The workhorse solver grows and shrinks a working active set; every
answer is certified by a nonnegative-least-squares fit of x - v in the
span of the tight normals, and anything that fails certification falls
back to enumerating candidate active sets by increasing size, which is
slow but exhaustive.  A separate brute-force oracle (all subsets, or all
subsets up to the constraint rank) exists purely to cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, islice

import numpy as np
from scipy.linalg import orth
from scipy.optimize import nnls

from .cones import NJCone, membership


@dataclass(frozen=True)
class ProjectionResult:
    point: np.ndarray
    distance: float
    active_set: tuple
    method: str


@dataclass(frozen=True)
class ClassificationRecord:
    verdict: str                 # "correct" or "incorrect"
    boundary_distance: float
    nearest_region: str          # canonical Newick of the nearest other region


_H_CACHE: dict = {}


def _unit_rows(cone_or_normals) -> np.ndarray:
    """Float constraint matrix with unit rows (same cone, nicer tolerances)."""
    if isinstance(cone_or_normals, NJCone):
        key = id(cone_or_normals)
        hit = _H_CACHE.get(key)
        if hit is not None and hit[0] is cone_or_normals:
            return hit[1]
        H = np.array(cone_or_normals.normals, dtype=float)
        if H.size:
            H = H / np.linalg.norm(H, axis=1, keepdims=True)
        _H_CACHE[key] = (cone_or_normals, H)
        return H
    H = np.array(cone_or_normals, dtype=float)
    if H.size:
        H = H / np.linalg.norm(H, axis=1, keepdims=True)
    return H


def _null_projector(Hw: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto the common zero set of the given rows."""
    m = Hw.shape[1]
    if Hw.shape[0] == 0:
        return np.eye(m)
    return np.eye(m) - np.linalg.pinv(Hw) @ Hw


def _kkt_residual(Hw: np.ndarray, w: np.ndarray) -> float:
    """Distance from w to the nonnegative span of the given rows."""
    if Hw.shape[0] == 0:
        return float(np.linalg.norm(w))
    _, resid = nnls(Hw.T, w)
    return float(resid)


def _enumerate_projection(H: np.ndarray, v: np.ndarray, tol: float):
    """Candidate active sets by increasing size; first certified one wins."""
    k = H.shape[0]
    cap = int(np.linalg.matrix_rank(H)) if k else 0
    scale = 1.0 + float(np.linalg.norm(v))
    for size in range(cap + 1):
        for subset in combinations(range(k), size):
            x = _null_projector(H[list(subset)]) @ v
            if k and float((H @ x).min()) < -tol * scale:
                continue
            w = x - v
            if _kkt_residual(H[list(subset)], w) <= tol * scale:
                return x, subset
    raise RuntimeError("projection enumeration failed; inconsistent tolerances")


def nearest_point(cone, v, tol: float = 1e-9, max_iter: int | None = None) -> ProjectionResult:
    """The unique closest point of the cone, with its tight constraint set."""
    H = _unit_rows(cone)
    v = np.asarray(v, dtype=float)
    k = H.shape[0] if H.size else 0
    if k == 0:
        return ProjectionResult(v.copy(), 0.0, (), "trivial")
    if H.shape[1] != v.shape[0]:
        raise ValueError("vector length does not match the cone's ambient dimension")
    scale = 1.0 + float(np.linalg.norm(v))
    if max_iter is None:
        max_iter = 30 + 10 * k

    method = "active-set"
    work: list[int] = []
    x = v.copy()
    ok = False
    for _ in range(max_iter):
        x = _null_projector(H[work]) @ v
        s = H @ x
        j = int(np.argmin(s))
        if s[j] < -tol * scale:
            if j in work:
                break  # numerically stuck; hand over to enumeration
            work.append(j)
            continue
        w = x - v
        if _kkt_residual(H[work], w) <= tol * scale:
            ok = True
            break
        lam, *_ = np.linalg.lstsq(H[work].T, w, rcond=None)
        drop = int(np.argmin(lam))
        if lam[drop] >= 0:
            break  # certificate failed yet no multiplier is negative
        work.pop(drop)
    if not ok:
        x, subset = _enumerate_projection(H, v, tol)
        work = list(subset)
        method = "enumeration"
    s = H @ x
    tight = tuple(int(i) for i in np.flatnonzero(np.abs(s) <= 10 * tol * scale))
    return ProjectionResult(x, float(np.linalg.norm(v - x)), tight, method)


def projection_oracle(cone, V, tol: float = 1e-9, batch: int = 128):
    """Brute-force projections for a batch of vectors, for cross-checking.

    Enumerates every constraint subset when there are at most 12
    constraints, otherwise every subset up to the constraint rank (any
    tight set spans the same subspace as some independent subset of at
    most that size, so nothing is missed).  Each subset's candidate is
    the equality projection onto that subset's zero set; feasible
    candidates compete on distance.  Returns (distances, points).

    Everything runs in coordinates on the span of the constraint rows:
    projections leave the orthogonal (lineality) component untouched, so
    distances are unchanged and the subproblems are small enough to
    process as stacked batches.
    """
    H = _unit_rows(cone)
    V = np.asarray(V, dtype=float)
    single = V.ndim == 1
    if single:
        V = V[None, :]
    npts = V.shape[0]
    if H.size == 0:
        d = np.zeros(npts)
        return (0.0, V[0].copy()) if single else (d, V.copy())
    k = H.shape[0]
    U = orth(H.T)                      # (m, r) orthonormal row-space basis
    r = U.shape[1]
    Hq = H @ U                         # unit rows again (they live in span(U))
    W = V @ U
    lineal = V - W @ U.T
    scales = 1.0 + np.linalg.norm(V, axis=1)
    wnorm2 = (W * W).sum(axis=1)
    best_d2 = np.full(npts, np.inf)
    best_w = np.zeros_like(W)

    feas0 = (W @ Hq.T).min(axis=1) >= -tol * scales
    best_d2[feas0] = 0.0
    best_w[feas0] = W[feas0]

    eye = np.eye(r)
    cap = k if k <= 12 else r
    cols = np.arange(npts)
    for size in range(1, cap + 1):
        combos = combinations(range(k), size)
        while True:
            idx = np.array(list(islice(combos, batch)), dtype=int)
            if idx.size == 0:
                break
            S = Hq[idx]                            # (B, size, r)
            gram_inv = np.linalg.pinv(S @ S.transpose(0, 2, 1))
            proj = eye - S.transpose(0, 2, 1) @ gram_inv @ S
            X = proj @ W.T                         # (B, r, npts)
            feas = np.matmul(Hq, X).min(axis=1) >= -tol * scales
            d2 = np.where(feas, wnorm2 - (X * X).sum(axis=1), np.inf)
            which = d2.argmin(axis=0)
            dmin = d2[which, cols]
            upd = dmin < best_d2
            if upd.any():
                best_d2[upd] = dmin[upd]
                best_w[upd] = X[which[upd], :, upd]
    dist = np.sqrt(np.maximum(best_d2, 0.0))
    points = best_w @ U.T + lineal
    if single:
        return float(dist[0]), points[0]
    return dist, points


def recursive_projection(cone, v, tol: float = 1e-9) -> np.ndarray:
    """Greedy variant: repeatedly pin the most violated constraint.

    Fast and usually right, but not guaranteed optimal when several
    constraints are violated at once; tests compare it against
    nearest_point rather than trusting it.
    """
    H = _unit_rows(cone)
    v = np.asarray(v, dtype=float)
    if H.size == 0:
        return v.copy()
    scale = 1.0 + float(np.linalg.norm(v))
    pinned: list[int] = []
    x = v
    for _ in range(H.shape[0]):
        s = H @ x
        j = int(np.argmin(s))
        if s[j] >= -tol * scale:
            return x
        pinned.append(j)
        x = _null_projector(H[pinned]) @ v
    return x


def boundary_distance_interior(cone, v) -> float:
    """Distance from an inside point to the boundary, one dot per facet.

    Valid when the representation is irredundant (a redundant constraint
    plane can pass closer to v than any facet does).
    """
    H = _unit_rows(cone)
    v = np.asarray(v, dtype=float)
    s = H @ v
    if float(s.min()) < 0:
        raise ValueError("point is not inside the cone")
    return float(s.min())


def _violation_lower_bound(cone, v) -> float:
    """max violated signed distance; never exceeds the projection distance."""
    H = _unit_rows(cone)
    s = H @ v
    worst = float(s.min())
    return max(0.0, -worst)


def distance_to_wrong(d, true_topology, cones, tol: float = 1e-9) -> ClassificationRecord:
    """Classify d against a cone census and measure the safety margin.

    Correct inputs get their distance to the nearest cone of any other
    topology; incorrect ones get their distance back to the cones of the
    true topology.
    """
    v = np.asarray(
        d.as_array() if hasattr(d, "as_array") else d, dtype=float
    )
    mine = [c for c in cones if c.topology == true_topology]
    if not mine:
        raise ValueError("census contains no cone for the given topology")
    correct = any(membership(c, v, tol=tol) != "outside" for c in mine)
    candidates = (
        [c for c in cones if c.topology != true_topology] if correct else mine
    )
    order = sorted(candidates, key=lambda c: _violation_lower_bound(c, v))
    best = np.inf
    best_cone = None
    for cone in order:
        if _violation_lower_bound(cone, v) >= best:
            continue
        dist = nearest_point(cone, v, tol=tol).distance
        if dist < best:
            best = dist
            best_cone = cone
    return ClassificationRecord(
        "correct" if correct else "incorrect",
        float(best),
        best_cone.topology.newick() if best_cone.topology is not None else "",
    )
