"""Polyhedral cones of inputs that drive the join algorithm down one path.

Every cone lives in the original m-dimensional input space and is stored
as a list of primitive integer normals h with sense (h, d) >= 0.  The
constraints for a full trace come from replaying the algorithm's linear
maps exactly: at each step, the picked pair's score must be minimal,
which pins score differences against every competing pair.

Normals keep their semantic orientation.  Scaling to primitive integers
preserves the inequality; flipping signs would not, so deduplication is
done on the oriented vectors (duplicates always arise with equal signs
here, because coinciding score rows coincide exactly).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from .distvec import (
    DissimilarityVector,
    index_to_pair,
    num_pairs,
    pair_to_index,
    permute_flat,
)
from .nj import CherryTrace, q_operator
from .rational import feasible_point, primitive
from .trees import TreeTopology


class DegenerateConeError(RuntimeError):
    """The cone has no interior point (not full-dimensional)."""


@dataclass(frozen=True)
class NJCone:
    """H-representation of one decision region, tagged with its trace."""

    n: int
    normals: tuple
    trace: CherryTrace | None = None
    topology: TreeTopology | None = None
    irredundant: bool = False
    label: str = ""
    removed: tuple = ()

    @property
    def m(self) -> int:
        return num_pairs(self.n)

    def __post_init__(self):
        for h in self.normals:
            if len(h) != self.m:
                raise ValueError("normal length does not match the pair count")


def halfspace_normal(i: int, j: int, n: int) -> tuple:
    """Integer normal h with (h, d) = score_j(d) - score_i(d).

    (h, d) >= 0 exactly when pair i scores no worse than pair j.
    """
    if i == j:
        raise ValueError("need two distinct pair indices")
    mat = q_operator(n).matrix
    m = num_pairs(n)
    if not (0 <= i < m and 0 <= j < m):
        raise ValueError(f"pair index out of range for n={n}")
    return tuple(int(mat[j, t] - mat[i, t]) for t in range(m))


def first_step_cone(i: int, n: int) -> NJCone:
    """Inputs whose minimal first-step score is at pair i.

    The n=4 case drops the identically-zero normal against the
    complementary pair (their score rows coincide).
    """
    m = num_pairs(n)
    normals = []
    seen = set()
    for j in range(m):
        if j == i:
            continue
        h = primitive(halfspace_normal(i, j, n))
        if any(h) and h not in seen:
            seen.add(h)
            normals.append(h)
    a, b = index_to_pair(i, n)
    return NJCone(n, tuple(normals), label=f"first-pick {b}{a}")


def cone_from_trace(trace: CherryTrace, n: int | None = None) -> NJCone:
    """Exact H-representation of all inputs that can follow this trace."""
    if n is not None and n != trace.n:
        raise ValueError("taxon count does not match the trace")
    n = trace.n
    m = num_pairs(n)
    L = [
        [Fraction(1) if r == s else Fraction(0) for s in range(m)]
        for r in range(m)
    ]
    normals = []
    seen = set()
    for nk, p, _clusters in trace.step_picks():
        mk = num_pairs(nk)
        mat = q_operator(nk).matrix
        scores = []  # row r of A L, a linear functional on the original space
        for r in range(mk):
            row = [Fraction(0)] * m
            for t in range(mk):
                c = int(mat[r, t])
                if c:
                    lt = L[t]
                    for s in range(m):
                        if lt[s]:
                            row[s] += c * lt[s]
            scores.append(row)
        base = scores[p]
        for j in range(mk):
            if j == p:
                continue
            h = primitive([scores[j][s] - base[s] for s in range(m)])
            if any(h) and h not in seen:
                seen.add(h)
                normals.append(h)
        if nk == 4:
            break
        hi, lo = index_to_pair(p, nk)
        tau = {}
        slot = 0
        for u in range(nk):
            if u == lo:
                tau[u] = nk - 2
            elif u == hi:
                tau[u] = nk - 1
            else:
                tau[u] = slot
                slot += 1
        permuted = [None] * mk
        for u in range(nk):
            for v in range(u):
                permuted[pair_to_index(tau[u], tau[v], nk)] = L[
                    pair_to_index(u, v, nk)
                ]
        half = Fraction(1, 2)
        keep = num_pairs(nk - 2)
        nxt = permuted[:keep]
        last = permuted[mk - 1]
        for idx in range(keep, num_pairs(nk - 1)):
            partner = permuted[idx + nk - 2]
            row = permuted[idx]
            nxt.append(
                [half * (row[s] + partner[s] - last[s]) for s in range(m)]
            )
        L = nxt
    return NJCone(
        n,
        tuple(normals),
        trace=trace,
        topology=trace.topology(),
        label=trace.label(),
    )


def slacks(cone: NJCone, d):
    """Inner products (h, d) per stored normal; exact for exact inputs."""
    if isinstance(d, DissimilarityVector):
        if d.n != cone.n:
            raise ValueError("taxon count mismatch")
        vals = d.values
    else:
        vals = list(d)
        if len(vals) != cone.m:
            raise ValueError("vector length does not match the pair count")
    return [sum(h[s] * vals[s] for s in range(cone.m)) for h in cone.normals]


def membership(cone: NJCone, d, tol: float = 1e-9) -> str:
    """'interior', 'boundary', or 'outside'; exact for rational inputs."""
    exact = isinstance(d, DissimilarityVector) and d.is_exact
    if not exact and not isinstance(d, DissimilarityVector):
        exact = all(isinstance(v, (int, Fraction)) for v in d)
    lo = 0 if exact else -tol
    hi = 0 if exact else tol
    on_boundary = False
    for s in slacks(cone, d):
        if s < lo:
            return "outside"
        if s <= hi:
            on_boundary = True
    return "boundary" if on_boundary else "interior"


def interior_point(cone: NJCone):
    """An exact rational point with every slack >= 1, or None."""
    rows = [[Fraction(v) for v in h] for h in cone.normals]
    rhs = [Fraction(1)] * len(rows)
    return feasible_point(rows, rhs)


def redundant_indices(cone: NJCone) -> list[int]:
    """Positions whose halfspace is implied by the rest, found one by one.

    Each test asks (exactly) whether the others admit a point with
    (h_k, x) <= -1; homogeneity makes -1 equivalent to any negative slack.
    """
    normals = cone.normals
    kept = list(range(len(normals)))
    removed = []
    for idx in range(len(normals)):
        rows = []
        rhs = []
        for j in kept:
            if j == idx:
                continue
            rows.append([Fraction(v) for v in normals[j]])
            rhs.append(Fraction(0))
        rows.append([Fraction(-v) for v in normals[idx]])
        rhs.append(Fraction(1))
        if feasible_point(rows, rhs) is None:
            kept.remove(idx)
            removed.append(idx)
    return removed


def irredundant(cone: NJCone) -> NJCone:
    """Facet-only copy of the cone; exact LP certifies every removal."""
    if interior_point(cone) is None:
        raise DegenerateConeError("cone has empty interior")
    removed = redundant_indices(cone)
    gone = set(removed)
    return replace(
        cone,
        normals=tuple(h for k, h in enumerate(cone.normals) if k not in gone),
        irredundant=True,
        removed=tuple(removed),
    )


def facet_witness(i: int, j: int, n: int) -> DissimilarityVector:
    """A vector on the face score_i = score_j with all other scores larger.

    Entries are 2 on pairs i and j and 4 elsewhere.  For n = 5 with i and
    j sharing a taxon, that pattern also ties the pair formed by the two
    untouched taxa; raising that single entry to 5 breaks the extra tie
    without moving the i-j equality (their score rows ignore the entry).
    """
    if n < 5:
        raise ValueError("witness construction needs at least 5 taxa")
    if i == j:
        raise ValueError("need two distinct pair indices")
    m = num_pairs(n)
    vals = [Fraction(4)] * m
    vals[i] = Fraction(2)
    vals[j] = Fraction(2)
    ti, tj = set(index_to_pair(i, n)), set(index_to_pair(j, n))
    if n == 5 and ti & tj:
        outside = sorted(set(range(n)) - ti - tj)
        k0 = pair_to_index(outside[1], outside[0], n)
        vals[k0] += 1
    return DissimilarityVector(n, tuple(vals))


def permute_cone(sigma, cone: NJCone) -> NJCone:
    """Relabel taxa in the cone: constraints, trace, and topology together."""
    normals = tuple(
        tuple(permute_flat(sigma, h, cone.n)) for h in cone.normals
    )
    trace = None
    topology = None
    label = cone.label
    if cone.trace is not None:
        trace = CherryTrace(
            cone.n,
            tuple(
                (frozenset(sigma[x] for x in a), frozenset(sigma[x] for x in b))
                for a, b in cone.trace.merges
            ),
        )
        label = trace.label()
    if cone.topology is not None:
        topology = cone.topology.relabel(sigma)
    return NJCone(
        cone.n,
        normals,
        trace=trace,
        topology=topology,
        irredundant=cone.irredundant,
        label=label,
    )


# ---------------------------------------------------------------------------
# Cone files: '#' metadata lines, then "n m k" and k integer normal rows.


def write_cone_text(cone: NJCone) -> str:
    lines = []
    if cone.label:
        lines.append(f"# label: {cone.label}")
    if cone.trace is not None:
        lines.append(f"# trace: {cone.trace.to_json()}")
    if cone.topology is not None:
        lines.append(f"# topology: {cone.topology.newick()}")
    lines.append(f"# irredundant: {'true' if cone.irredundant else 'false'}")
    lines.append(f"{cone.n} {cone.m} {len(cone.normals)}")
    for h in cone.normals:
        lines.append(" ".join(str(v) for v in h))
    return "\n".join(lines) + "\n"


def read_cone_text(text: str) -> NJCone:
    label = ""
    trace = None
    topology = None
    irr = False
    body = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            meta = line[1:].strip()
            if meta.startswith("label:"):
                label = meta[len("label:"):].strip()
            elif meta.startswith("trace:"):
                trace = CherryTrace.from_json(meta[len("trace:"):].strip())
            elif meta.startswith("topology:"):
                topology = TreeTopology.from_newick(meta[len("topology:"):].strip())
            elif meta.startswith("irredundant:"):
                irr = meta[len("irredundant:"):].strip().lower() == "true"
            continue
        body.append(line)
    if not body:
        raise ValueError("no header line in cone file")
    n, m, k = (int(x) for x in body[0].split())
    if m != num_pairs(n):
        raise ValueError("header m does not match n")
    if len(body) != k + 1:
        raise ValueError(f"expected {k} normal rows, found {len(body) - 1}")
    normals = []
    for line in body[1:]:
        row = tuple(int(x) for x in line.split())
        if len(row) != m:
            raise ValueError("normal row has wrong length")
        normals.append(row)
    return NJCone(
        n, tuple(normals), trace=trace, topology=topology,
        irredundant=irr, label=label,
    )
