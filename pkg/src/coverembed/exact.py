"""Exact rational helpers: ingestion of floats, integer rank, and a small LP solver.

Everything here works on Python ints and ``fractions.Fraction`` so that rank
and feasibility verdicts never depend on rounding.
"""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Iterable, Sequence

Number = int | float | Fraction


def to_fraction(x: Number, precision: int | None = None) -> Fraction:
    """Convert ``x`` to a Fraction.

    Floats are converted exactly (their binary value) unless ``precision`` is
    given, in which case they are rounded to that many decimal places first.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if precision is not None:
        return Fraction(round(float(x), precision)).limit_denominator(10**precision)
    return Fraction(float(x))


def decimal_fraction(x: Number) -> Fraction:
    """Rationalize a user-facing decimal such as ``0.1`` as exactly 1/10."""
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return Fraction(repr(float(x)))


def integer_row(row: Iterable[Number]) -> list[int]:
    """Scale a rational row by the lcm of its denominators to get integers."""
    fr = [to_fraction(v) for v in row]
    den = 1
    for v in fr:
        den = lcm(den, v.denominator)
    return [int(v * den) for v in fr]


def integer_rank(rows: Sequence[Sequence[int]]) -> int:
    """Rank of an integer matrix by fraction-free (Bareiss) elimination."""
    m = [list(r) for r in rows]
    if not m:
        return 0
    nrows, ncols = len(m), len(m[0])
    rank = 0
    prev = 1
    for col in range(ncols):
        if rank == nrows:
            break
        pivot = next((i for i in range(rank, nrows) if m[i][col] != 0), None)
        if pivot is None:
            continue
        m[rank], m[pivot] = m[pivot], m[rank]
        p = m[rank][col]
        for i in range(rank + 1, nrows):
            a = m[i][col]
            row_i, row_r = m[i], m[rank]
            for j in range(col + 1, ncols):
                row_i[j] = (p * row_i[j] - a * row_r[j]) // prev
            row_i[col] = 0
        prev = p
        rank += 1
    return rank


def rational_rank(rows: Sequence[Sequence[Number]]) -> int:
    return integer_rank([integer_row(r) for r in rows])


def affine_rank(points: Sequence[Sequence[Number]]) -> int:
    """Rank of the points augmented with a trailing 1 (rows are points)."""
    return rational_rank([list(p) + [1] for p in points])


def det(matrix: Sequence[Sequence[Number]]) -> Fraction:
    """Exact determinant by Gaussian elimination over Fractions."""
    a = [[to_fraction(v) for v in row] for row in matrix]
    n = len(a)
    sign = 1
    result = Fraction(1)
    for col in range(n):
        pivot = next((i for i in range(col, n) if a[i][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            a[col], a[pivot] = a[pivot], a[col]
            sign = -sign
        p = a[col][col]
        result *= p
        for i in range(col + 1, n):
            f = a[i][col] / p
            if f:
                for j in range(col, n):
                    a[i][j] -= f * a[col][j]
    return sign * result


class LPResult:
    __slots__ = ("feasible", "value", "x")

    def __init__(self, feasible: bool, value: Fraction | None, x: list[Fraction] | None):
        self.feasible = feasible
        self.value = value
        self.x = x

    def __repr__(self) -> str:
        return f"LPResult(feasible={self.feasible}, value={self.value})"


def _pivot(tab: list[list[Fraction]], basis: list[int], r: int, c: int) -> None:
    row = tab[r]
    p = row[c]
    if p != 1:
        tab[r] = row = [v / p for v in row]
    for i, other in enumerate(tab):
        if i != r and other[c] != 0:
            f = other[c]
            tab[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _simplex(tab: list[list[Fraction]], basis: list[int], allowed: int) -> bool:
    """Maximize the objective stored in the last row (as reduced costs).

    The last row holds ``-c`` style reduced costs: entering columns are those
    with a negative entry. Bland's rule guarantees termination. Returns False
    when unbounded.
    """
    m = len(tab) - 1
    while True:
        obj = tab[-1]
        c = next((j for j in range(allowed) if obj[j] < 0), None)
        if c is None:
            return True
        best = None
        for i in range(m):
            a = tab[i][c]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:
            return False
        _pivot(tab, basis, best[1], c)


def lp_maximize(c: Sequence[Number], a_eq: Sequence[Sequence[Number]], b_eq: Sequence[Number]) -> LPResult:
    """Exactly solve ``max c.x`` subject to ``A x = b``, ``x >= 0``.

    Two-phase tableau simplex over Fractions with Bland's rule. Returns
    ``feasible=False`` for an empty feasible set; raises ``ValueError`` when the
    objective is unbounded.
    """
    a = [[to_fraction(v) for v in row] for row in a_eq]
    b = [to_fraction(v) for v in b_eq]
    m = len(a)
    n = len(c)
    for i in range(m):
        if b[i] < 0:
            a[i] = [-v for v in a[i]]
            b[i] = -b[i]
    # phase 1: artificials n..n+m-1, minimize their sum == maximize -sum
    tab = [a[i] + [Fraction(int(i == k)) for k in range(m)] + [b[i]] for i in range(m)]
    obj = [Fraction(0)] * (n + m + 1)
    for i in range(m):
        for j in range(n):
            obj[j] -= tab[i][j]
        obj[-1] -= tab[i][-1]
    tab.append(obj)
    basis = list(range(n, n + m))
    _simplex(tab, basis, n + m)
    if tab[-1][-1] != 0:
        return LPResult(False, None, None)
    # drive zero-level artificials out of the basis where possible
    for r in range(m):
        if basis[r] >= n:
            c_in = next((j for j in range(n) if tab[r][j] != 0), None)
            if c_in is not None:
                _pivot(tab, basis, r, c_in)
    keep = [r for r in range(m) if basis[r] < n]
    tab2 = [tab[r][:n] + [tab[r][-1]] for r in keep]
    basis2 = [basis[r] for r in keep]
    cf = [to_fraction(v) for v in c]
    obj2 = [-v for v in cf] + [Fraction(0)]
    for r, j in enumerate(basis2):
        if obj2[j] != 0:
            f = obj2[j]
            obj2 = [o - f * t for o, t in zip(obj2, tab2[r])]
    tab2.append(obj2)
    if not _simplex(tab2, basis2, n):
        raise ValueError("LP objective is unbounded")
    x = [Fraction(0)] * n
    for r, j in enumerate(basis2):
        x[j] = tab2[r][-1]
    return LPResult(True, tab2[-1][-1], x)
