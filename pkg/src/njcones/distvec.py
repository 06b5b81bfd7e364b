"""Flattened pairwise-distance vectors and the leaf relabeling action.

A dissimilarity map on taxa {0, ..., n-1} is stored as a vector of
length m = n(n-1)/2, one entry per unordered pair, arranged so that
the pair {a, b} with a > b sits at index a(a-1)/2 + b.  Everything
downstream (the neighbor-joining criterion, the cones, the polytopes)
is linear algebra on these vectors, so the indexing conventions live
here and nowhere else.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .rational import solve


class InputFormatError(ValueError):
    """Raised when a distance input file fails validation."""


def num_pairs(n: int) -> int:
    return n * (n - 1) // 2


def pair_to_index(a: int, b: int, n: int) -> int:
    """Flat index of the unordered pair {a, b} among the pairs of n taxa."""
    if a == b:
        raise ValueError(f"pair requires two distinct taxa, got ({a}, {b})")
    if not (0 <= a < n and 0 <= b < n):
        raise ValueError(f"taxon out of range for n={n}: ({a}, {b})")
    if a < b:
        a, b = b, a
    return a * (a - 1) // 2 + b


def index_to_pair(i: int, n: int) -> tuple[int, int]:
    """Inverse of pair_to_index; returns (a, b) with a > b."""
    if not (0 <= i < num_pairs(n)):
        raise ValueError(f"pair index {i} out of range for n={n}")
    # integer sqrt keeps this exact for any index size
    a = (1 + math.isqrt(1 + 8 * i)) // 2
    while a * (a - 1) // 2 > i:
        a -= 1
    while (a + 1) * a // 2 <= i:
        a += 1
    return a, i - a * (a - 1) // 2


def all_pairs(n: int) -> list[tuple[int, int]]:
    """Pairs (a, b) with a > b in flat-index order."""
    return [(a, b) for a in range(1, n) for b in range(a)]


@dataclass(frozen=True)
class DissimilarityVector:
    """A flattened dissimilarity map; entries may be Fractions or floats."""

    n: int
    values: tuple

    def __post_init__(self):
        if self.n < 4:
            raise ValueError("need at least 4 taxa")
        if len(self.values) != num_pairs(self.n):
            raise ValueError(
                f"expected {num_pairs(self.n)} entries for n={self.n}, got {len(self.values)}"
            )

    @property
    def m(self) -> int:
        return len(self.values)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(v, (Fraction, int)) for v in self.values)

    def get(self, a: int, b: int):
        return self.values[pair_to_index(a, b, self.n)]

    def as_array(self) -> np.ndarray:
        return np.array([float(v) for v in self.values])

    @classmethod
    def from_pairs(cls, n: int, mapping) -> "DissimilarityVector":
        vals = [None] * num_pairs(n)
        for (a, b), v in mapping.items():
            vals[pair_to_index(a, b, n)] = v
        if any(v is None for v in vals):
            missing = [p for p, v in zip(all_pairs(n), vals) if v is None]
            raise ValueError(f"missing pairs: {missing}")
        return cls(n, tuple(vals))

    @classmethod
    def from_matrix(cls, rows) -> "DissimilarityVector":
        n = len(rows)
        vals = [rows[a][b] for a in range(1, n) for b in range(a)]
        return cls(n, tuple(vals))


def shift_vector(a: int, n: int) -> DissimilarityVector:
    """Indicator of the pairs containing taxon a (exact entries)."""
    if not 0 <= a < n:
        raise ValueError(f"taxon {a} out of range for n={n}")
    vals = tuple(
        Fraction(1) if a in pair else Fraction(0) for pair in all_pairs(n)
    )
    return DissimilarityVector(n, vals)


def shift_basis(n: int) -> list[DissimilarityVector]:
    return [shift_vector(a, n) for a in range(n)]


def pair_permutation(sigma: Sequence[int], n: int) -> list[int]:
    """Index permutation pi with pi[index(a,b)] = index(sigma a, sigma b)."""
    if sorted(sigma) != list(range(n)):
        raise ValueError("sigma must be a permutation of range(n)")
    return [pair_to_index(sigma[a], sigma[b], n) for a, b in all_pairs(n)]


def apply_permutation(sigma: Sequence[int], d: DissimilarityVector) -> DissimilarityVector:
    """Relabel taxa: the output entry at {sigma a, sigma b} is the input at {a, b}."""
    pi = pair_permutation(sigma, d.n)
    vals = [None] * d.m
    for i, v in enumerate(d.values):
        vals[pi[i]] = v
    return DissimilarityVector(d.n, tuple(vals))


def permute_flat(sigma: Sequence[int], values: Sequence, n: int) -> list:
    """apply_permutation on a bare flat sequence."""
    pi = pair_permutation(sigma, n)
    out = [None] * len(values)
    for i, v in enumerate(values):
        out[pi[i]] = v
    return out


# ---------------------------------------------------------------------------
# The five-taxon kernel basis.
#
# For n = 5 the vectors below span the orthogonal complement of the span of
# the shift vectors, and the relabeling action restricted to that subspace
# has a pleasant form: the cycle (0 1 2 3 4) permutes the basis cyclically.


def w_vector(a: int, b: int, c: int, d: int) -> DissimilarityVector:
    """Entries +1 at {a,b} and {c,d}, -1 at {a,c} and {b,d}, 0 elsewhere (n=5)."""
    if len({a, b, c, d}) != 4:
        raise ValueError("w_vector needs four distinct taxa")
    vals = [Fraction(0)] * 10
    vals[pair_to_index(a, b, 5)] += 1
    vals[pair_to_index(c, d, 5)] += 1
    vals[pair_to_index(a, c, 5)] -= 1
    vals[pair_to_index(b, d, 5)] -= 1
    return DissimilarityVector(5, tuple(vals))


def w_basis() -> list[DissimilarityVector]:
    tuples = [(0, 1, 3, 4), (1, 2, 4, 0), (2, 3, 0, 1), (3, 4, 1, 2), (4, 0, 2, 3)]
    return [w_vector(*t) for t in tuples]


def w_coordinates(v: Sequence) -> list[Fraction]:
    """Exact coordinates of a vector in the w basis; errors if outside the span."""
    basis = w_basis()
    cols = [[Fraction(x) for x in w.values] for w in basis]
    rows = [[cols[k][i] for k in range(5)] for i in range(10)]
    sol = solve(rows, [Fraction(x) for x in v])
    if sol is None:
        raise ValueError("vector is not in the span of the w basis")
    return sol


def permutation_w_matrix(sigma: Sequence[int]) -> list[list[Fraction]]:
    """Matrix of the relabeling action on the w span, columns = images of w_k."""
    basis = w_basis()
    cols = [w_coordinates(apply_permutation(sigma, w).values) for w in basis]
    return [[cols[k][i] for k in range(5)] for i in range(5)]


# ---------------------------------------------------------------------------
# Input parsing.

_SYM_RTOL = 1e-12


def _parse_value(text: str, exact: bool):
    text = text.strip()
    if exact:
        return Fraction(text)
    return float(text)


def parse_pair_csv(text: str, exact: bool = False):
    """Parse 'label,label,value' rows into a vector plus the sorted label list.

    Each unordered pair must appear exactly once; rows with equal labels
    must carry the value zero.
    """
    entries = {}
    labels = set()
    for row in csv.reader(io.StringIO(text)):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if row[0].lstrip().startswith("#"):
            continue
        if len(row) != 3:
            raise InputFormatError(f"expected 'a,b,value', got {row!r}")
        a, b, raw = row[0].strip(), row[1].strip(), row[2]
        value = _parse_value(raw, exact)
        if a == b:
            if value != 0:
                raise InputFormatError(f"diagonal entry for {a!r} must be zero")
            labels.add(a)
            continue
        labels.update((a, b))
        key = frozenset((a, b))
        if key in entries:
            prev = entries[key]
            if exact:
                ok = prev == value
            else:
                ok = abs(prev - value) <= _SYM_RTOL * max(abs(prev), abs(value), 1.0)
            if not ok:
                raise InputFormatError(f"conflicting entries for pair ({a}, {b})")
        else:
            entries[key] = value
    names = sorted(labels)
    n = len(names)
    if n < 4:
        raise InputFormatError("need at least 4 taxa")
    index = {name: i for i, name in enumerate(names)}
    mapping = {}
    for key, value in entries.items():
        a, b = sorted(key)
        mapping[(index[a], index[b])] = value
    try:
        vec = DissimilarityVector.from_pairs(n, mapping)
    except ValueError as exc:
        raise InputFormatError(str(exc)) from exc
    return vec, names


def parse_phylip(text: str, exact: bool = False):
    """Parse a square symmetric PHYLIP distance matrix; returns (vector, names)."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise InputFormatError("empty input")
    try:
        n = int(lines[0].split()[0])
    except ValueError as exc:
        raise InputFormatError("first line must give the number of taxa") from exc
    if len(lines) != n + 1:
        raise InputFormatError(f"expected {n} matrix rows, found {len(lines) - 1}")
    names = []
    rows = []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != n + 1:
            raise InputFormatError(f"row {parts[:1]} must list a name and {n} values")
        names.append(parts[0])
        rows.append([_parse_value(p, exact) for p in parts[1:]])
    for i in range(n):
        if exact:
            if rows[i][i] != 0:
                raise InputFormatError(f"nonzero diagonal at {names[i]}")
        elif abs(rows[i][i]) > _SYM_RTOL:
            raise InputFormatError(f"nonzero diagonal at {names[i]}")
        for j in range(i):
            a, b = rows[i][j], rows[j][i]
            if exact:
                ok = a == b
            else:
                ok = abs(a - b) <= _SYM_RTOL * max(abs(a), abs(b), 1.0)
            if not ok:
                raise InputFormatError(f"asymmetric entries for ({names[i]}, {names[j]})")
    vec = DissimilarityVector.from_matrix(rows)
    return vec, names
