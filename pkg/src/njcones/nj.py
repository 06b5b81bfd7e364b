"""Neighbor joining as explicit linear algebra.

The cherry-selection score is a linear map of the flattened distance
vector; each agglomeration step is another linear map (a relabeling
permutation followed by the averaging reduction).  This module exposes
those operators exactly and runs the algorithm with full tie branching,
so the output is the set of every (trace, topology) the input can
produce, not just one arbitrary tree.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .distvec import (
    DissimilarityVector,
    all_pairs,
    index_to_pair,
    num_pairs,
    pair_to_index,
)
from .trees import TreeTopology


class BranchLimitExceeded(RuntimeError):
    """Tie branching exceeded the configured limit."""


@dataclass(frozen=True, eq=False)
class QOperator:
    """The linear map sending a distance vector to its selection scores."""

    n: int
    matrix: np.ndarray  # m x m, small integers, read-only


@dataclass(frozen=True, eq=False)
class ReductionOperator:
    """One agglomeration step, written on flattened vectors.

    Convention: the merged cherry occupies the last index m-1 (taxa n-2
    and n-1); the merged node becomes taxon n-2 of the smaller problem.
    """

    n: int
    matrix: np.ndarray  # (m-n+1) x m, entries in {0, 1, 1/2, -1/2}

    def rows_exact(self) -> list[list[Fraction]]:
        half = Fraction(1, 2)
        return [
            [half * int(round(2 * x)) for x in row] for row in self.matrix
        ]


@lru_cache(maxsize=None)
def q_operator(n: int) -> QOperator:
    if n < 4:
        raise ValueError("need at least 4 taxa")
    pairs = all_pairs(n)
    m = len(pairs)
    mat = np.zeros((m, m), dtype=np.int64)
    for i, (a, b) in enumerate(pairs):
        for j, (c, d) in enumerate(pairs):
            if i == j:
                mat[i, j] = n - 4
            elif {a, b} & {c, d}:
                mat[i, j] = -1
    mat.setflags(write=False)
    return QOperator(n, mat)


@lru_cache(maxsize=None)
def reduction_operator(n: int) -> ReductionOperator:
    if n < 4:
        raise ValueError("need at least 4 taxa")
    m = num_pairs(n)
    rows = num_pairs(n - 1)
    keep = num_pairs(n - 2)
    mat = np.zeros((rows, m))
    for i in range(keep):
        mat[i, i] = 1.0
    for i in range(keep, rows):
        # d'(k, merged) = (d(k, n-2) + d(k, n-1) - d(n-2, n-1)) / 2
        mat[i, i] = 0.5
        mat[i, i + n - 2] = 0.5
        mat[i, m - 1] = -0.5
    mat.setflags(write=False)
    return ReductionOperator(n, mat)


def _row_sums(d, n):
    """Per-taxon distance sums of a flattened vector."""
    sums = [0] * n
    for idx, (a, b) in enumerate(all_pairs(n)):
        sums[a] += d[idx]
        sums[b] += d[idx]
    return sums


def q_criterion(d, n: int | None = None):
    """Selection scores (n-2)*d_ab - sum_k d_ak - sum_k d_bk.

    Accepts a DissimilarityVector or a bare flat sequence with explicit n.
    Exact entries give exact scores; float entries give a float array.
    This is the direct summation route; q_operator is the independent
    matrix route, and the two are cross-checked in the test suite.
    """
    if isinstance(d, DissimilarityVector):
        vals, n = d.values, d.n
    else:
        if n is None:
            raise ValueError("n is required for bare sequences")
        vals = list(d)
    sums = _row_sums(vals, n)
    out = [
        (n - 2) * vals[idx] - sums[a] - sums[b]
        for idx, (a, b) in enumerate(all_pairs(n))
    ]
    if all(isinstance(v, (int, Fraction)) for v in vals):
        return out
    return np.array([float(v) for v in out])


@dataclass(frozen=True)
class CherryTrace:
    """The ordered record of cherry joins, in original leaf sets.

    merges holds one (cluster, cluster) pair per join; clusters are
    frozensets of original leaves, and each pair is stored with the
    cluster containing the smaller minimum first.  The join at the
    four-node step is recorded as the side of the final split that
    contains the overall smallest leaf, which makes equal cones carry
    equal traces.
    """

    n: int
    merges: tuple

    def __post_init__(self):
        canon = tuple(
            (a, b) if min(a) < min(b) else (b, a)
            for a, b in (tuple(map(frozenset, mg)) for mg in self.merges)
        )
        object.__setattr__(self, "merges", canon)
        if len(canon) != self.n - 3:
            raise ValueError(f"expected {self.n - 3} joins for n={self.n}")

    def topology(self) -> TreeTopology:
        return TreeTopology.from_trace(self.n, self.merges)

    def label(self) -> str:
        def fmt(cluster):
            return "".join(str(x) for x in sorted(cluster))

        return "+".join(f"{fmt(a)}-{fmt(b)}" for a, b in self.merges)

    def step_picks(self):
        """Replay the relabeling bookkeeping.

        Yields (active_count, picked_pair_index, clusters) per step, where
        picked_pair_index is the flat index of the joined pair under the
        current labeling and clusters maps current label -> original leaf
        set.  The relabeling convention matches nj_run: the two picked
        nodes move to the last two slots, everything else keeps its order,
        and the merged node becomes node count-2 of the reduced problem.
        """
        clusters = [frozenset([i]) for i in range(self.n)]
        for a, b in self.merges:
            nk = len(clusters)
            try:
                x, y = sorted((clusters.index(a), clusters.index(b)))
            except ValueError:
                raise ValueError(f"join of inactive clusters {set(a)}, {set(b)}") from None
            yield nk, pair_to_index(y, x, nk), list(clusters)
            rest = [c for i, c in enumerate(clusters) if i != x and i != y]
            clusters = rest + [a | b]

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "merges": [[sorted(a), sorted(b)] for a, b in self.merges]}
        )

    @classmethod
    def from_json(cls, text: str) -> "CherryTrace":
        obj = json.loads(text)
        return cls(obj["n"], tuple((frozenset(a), frozenset(b)) for a, b in obj["merges"]))

    def sort_key(self):
        return tuple(
            (tuple(sorted(a)), tuple(sorted(b))) for a, b in self.merges
        )


def _canonical_last_join(clusters, x, y):
    """At four active nodes, record the split side holding the smallest leaf."""
    part_a = (clusters[x], clusters[y])
    part_b = tuple(c for i, c in enumerate(clusters) if i != x and i != y)
    lo = min(min(c) for c in part_a + part_b)
    return part_a if any(lo in c for c in part_a) else part_b


def nj_run(
    d: DissimilarityVector,
    tie_tol: float = 1e-9,
    branch_limit: int = 10_000,
):
    """All (CherryTrace, TreeTopology) pairs reachable by optimal joins.

    Branches depth-first on every tie of the minimal selection score.
    Exact inputs use exact comparisons; float inputs declare a tie within
    tie_tol.  Results are deduplicated and sorted deterministically.
    """
    n = d.n
    exact = d.is_exact

    def tied_minima(vals):
        lo = min(vals)
        if exact:
            return [i for i, v in enumerate(vals) if v == lo]
        return [i for i, v in enumerate(vals) if v - lo <= tie_tol]

    results = {}
    budget = [branch_limit]

    def recurse(vals, clusters, merges):
        budget[0] -= 1
        if budget[0] < 0:
            raise BranchLimitExceeded(f"more than {branch_limit} tie branches")
        nk = len(clusters)
        q = q_criterion(vals, nk)
        if not exact:
            q = list(q)
        if nk == 4:
            # complementary pairs score identically; branch over the three
            # splits via their representatives {0,1},{2,0},{2,1}
            for p in tied_minima(q[:3]):
                x, y = index_to_pair(p, 4)
                join = _canonical_last_join(clusters, x, y)
                trace = CherryTrace(n, tuple(merges + [join]))
                results.setdefault(trace, None)
            return
        for p in tied_minima(q):
            x, y = index_to_pair(p, nk)  # x > y
            keep = [i for i in range(nk) if i != x and i != y]
            nxt = []
            for ai in range(1, nk - 2):
                for bi in range(ai):
                    nxt.append(vals[pair_to_index(keep[ai], keep[bi], nk)])
            dxy = vals[pair_to_index(x, y, nk)]
            half = Fraction(1, 2) if exact else 0.5
            for k in keep:
                dk = (
                    vals[pair_to_index(k, x, nk)]
                    + vals[pair_to_index(k, y, nk)]
                    - dxy
                ) * half
                nxt.append(dk)
            new_clusters = [clusters[i] for i in keep] + [clusters[x] | clusters[y]]
            recurse(nxt, new_clusters, merges + [(clusters[y], clusters[x])])

    vals = list(d.values)
    recurse(vals, [frozenset([i]) for i in range(n)], [])
    out = [(tr, tr.topology()) for tr in results]
    out.sort(key=lambda pair: pair[0].sort_key())
    return out


def unique_topologies(results) -> list[TreeTopology]:
    """Distinct topologies from an nj_run result, in first-seen order."""
    seen = []
    for _, top in results:
        if top not in seen:
            seen.append(top)
    return seen
