"""Exact linear algebra over the rationals.

Dense textbook routines backing the facet enumeration and the cone
redundancy tests, where the deliverable is an exact integer count and
floating point is not good enough.  Matrices are plain lists of lists
of Fraction and stay small (tens of rows), so clarity wins over
asymptotics.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd
from typing import Optional


def frac_rows(rows) -> list[list[Fraction]]:
    return [[Fraction(x) for x in row] for row in rows]


def primitive(vec) -> tuple[int, ...]:
    """Scale a rational vector to coprime integers, keeping orientation.

    The sign is never flipped: for half-space normals the orientation is
    part of the meaning.  The zero vector maps to itself.
    """
    fracs = [Fraction(x) for x in vec]
    den = 1
    for f in fracs:
        den = den * f.denominator // gcd(den, f.denominator)
    ints = [int(f * den) for f in fracs]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    if g > 1:
        ints = [v // g for v in ints]
    return tuple(ints)


def _eliminate(a: list[list[Fraction]]) -> tuple[list[list[Fraction]], list[int]]:
    """Row-reduce in place to reduced echelon form; returns (rows, pivot cols)."""
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = None
        for i in range(r, nrows):
            if a[i][c] != 0:
                piv = i
                break
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        inv = 1 / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def rank(rows) -> int:
    if not rows:
        return 0
    _, pivots = _eliminate(frac_rows(rows))
    return len(pivots)


def nullspace(rows) -> list[list[Fraction]]:
    """Basis of {x : A x = 0} for a rational matrix A."""
    if not rows:
        return []
    a = frac_rows(rows)
    ncols = len(a[0])
    red, pivots = _eliminate(a)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -red[r][fc]
        basis.append(v)
    return basis


def solve(rows, rhs) -> Optional[list[Fraction]]:
    """One exact solution of A x = b, or None if the system is inconsistent."""
    a = frac_rows(rows)
    b = [Fraction(x) for x in rhs]
    ncols = len(a[0]) if a else 0
    aug = [row + [bv] for row, bv in zip(a, b)]
    red, pivots = _eliminate(aug)
    if ncols in pivots:
        return None
    x = [Fraction(0)] * ncols
    for r, pc in enumerate(pivots):
        x[pc] = red[r][ncols]
    return x


def affine_rank(points) -> int:
    """Dimension of the affine span of rational points, plus zero for a single point."""
    pts = frac_rows(points)
    if len(pts) <= 1:
        return 0
    base = pts[0]
    diffs = [[x - y for x, y in zip(p, base)] for p in pts[1:]]
    return rank(diffs)


def feasible_point(G, g) -> Optional[list[Fraction]]:
    """An exact x with G x >= g, or None when the system is infeasible.

    Phase-one simplex on the standard form with split free variables,
    using Bland's rule so termination is guaranteed.  Sizes here are at
    most a few dozen rows, so the dense tableau is fine.
    """
    G = frac_rows(G)
    g = [Fraction(x) for x in g]
    if not G:
        return []
    k = len(G)
    m = len(G[0])

    # G x - s = g with s >= 0 and x = u - w.  Rows with a negative right
    # hand side are negated so the tableau starts with rhs >= 0.  After
    # negation the slack enters with +1 and can start basic; other rows
    # get an artificial variable.
    rows = []
    rhs = []
    slack_sign = []
    for i in range(k):
        if g[i] < 0:
            rows.append([-x for x in G[i]])
            rhs.append(-g[i])
            slack_sign.append(Fraction(1))
        else:
            rows.append(list(G[i]))
            rhs.append(g[i])
            slack_sign.append(Fraction(-1))

    art_rows = [i for i in range(k) if slack_sign[i] < 0]
    n_art = len(art_rows)
    ncols = 2 * m + k + n_art
    tab = []
    for i in range(k):
        row = [Fraction(0)] * (ncols + 1)
        for j in range(m):
            row[j] = rows[i][j]
            row[m + j] = -rows[i][j]
        row[2 * m + i] = slack_sign[i]
        row[ncols] = rhs[i]
        tab.append(row)
    basis = [0] * k
    for pos, i in enumerate(art_rows):
        tab[i][2 * m + k + pos] = Fraction(1)
        basis[i] = 2 * m + k + pos
    for i in range(k):
        if slack_sign[i] > 0:
            basis[i] = 2 * m + i

    # objective: minimize the sum of artificials
    obj = [Fraction(0)] * (ncols + 1)
    for pos in range(n_art):
        obj[2 * m + k + pos] = Fraction(1)
    for i in art_rows:
        obj = [o - t for o, t in zip(obj, tab[i])]

    while True:
        enter = None
        for j in range(ncols):
            if obj[j] < 0:
                enter = j
                break
        if enter is None:
            break
        leave = None
        best = None
        for i in range(k):
            if tab[i][enter] > 0:
                ratio = tab[i][ncols] / tab[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            # unbounded phase-one objective cannot happen (bounded below by 0)
            raise ArithmeticError("phase-one simplex became unbounded")
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for i in range(k):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[leave])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [x - f * y for x, y in zip(obj, tab[leave])]
        basis[leave] = enter

    if -obj[ncols] != 0:
        return None
    x = [Fraction(0)] * m
    for i in range(k):
        b = basis[i]
        if b < m:
            x[b] += tab[i][ncols]
        elif b < 2 * m:
            x[b - m] -= tab[i][ncols]
    return x
