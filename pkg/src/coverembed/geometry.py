"""Sup-norm metrics, exact affine-independence / general-position predicates,
randomized perturbation into general position, and an exact simplex
intersection oracle.
"""

from __future__ import annotations

import enum
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .exact import affine_rank, integer_rank, integer_row, lp_maximize, to_fraction

__all__ = [
    "PointSet",
    "GeneralPositionError",
    "Intersection",
    "delta_metric",
    "rho_metric",
    "is_affinely_independent",
    "is_general_position",
    "perturb_to_general_position",
    "simplices_disjoint",
]

GUARD = 64


class GeneralPositionError(RuntimeError):
    pass


class PointSet:
    """Ordered points of R^N, kept both as floats and (lazily) as exact rationals."""

    def __init__(self, points, exact: bool = True, precision: int | None = None):
        pts = [list(p) for p in points]
        if pts:
            dims = {len(p) for p in pts}
            if len(dims) != 1:
                raise ValueError("all points need the same dimension")
            self.dim = dims.pop()
        else:
            self.dim = 0
        self.exact = exact
        self.precision = precision
        self._rows = pts
        self.array = np.array([[float(v) for v in p] for p in pts], dtype=float).reshape(len(pts), self.dim)
        self._rational = None

    @classmethod
    def of(cls, points, dim: int | None = None, **kw) -> "PointSet":
        ps = cls(points, **kw)
        if dim is not None and len(ps) == 0:
            ps.dim = dim
            ps.array = np.zeros((0, dim))
        return ps

    def __len__(self) -> int:
        return len(self._rows)

    def __getitem__(self, i):
        return self.array[i]

    @property
    def rational(self) -> list[list[Fraction]]:
        if self._rational is None:
            self._rational = [[to_fraction(v, self.precision) for v in p] for p in self._rows]
        return self._rational

    def int_rows(self) -> list[list[int]]:
        """Rows (p, 1) scaled to integers; rank-equivalent to the augmented matrix."""
        return [integer_row(p + [Fraction(1)]) for p in self.rational]


def delta_metric(x, y) -> float:
    """min(1, sup-norm distance)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("dimension mismatch")
    if x.size == 0:
        return 0.0
    return float(min(1.0, np.abs(x - y).max()))


def rho_metric(f, g, samples=None, exact: bool = False) -> float | Fraction:
    """sup over samples of delta_metric(f(x), g(x)).

    ``f`` and ``g`` are arrays (rows = samples) or mappings id -> vector; with
    ``samples`` the sup runs over those row indices / keys only. ``exact``
    evaluates the differences in rational arithmetic and returns a Fraction.
    """
    if isinstance(f, dict) or isinstance(g, dict):
        if not isinstance(f, dict) or not isinstance(g, dict):
            raise ValueError("domain mismatch")
        keys = list(f) if samples is None else list(samples)
        if any(k not in f or k not in g for k in keys):
            raise ValueError("domain mismatch")
        fa = np.array([f[k] for k in keys], dtype=float)
        ga = np.array([g[k] for k in keys], dtype=float)
    else:
        fa, ga = np.asarray(f, dtype=float), np.asarray(g, dtype=float)
        if fa.shape != ga.shape:
            raise ValueError("domain mismatch")
        if samples is not None:
            idx = np.asarray(list(samples), dtype=np.intp)
            fa, ga = fa[idx], ga[idx]
    if fa.size == 0:
        return Fraction(0) if exact else 0.0
    if exact:
        best = Fraction(0)
        diff = np.abs(fa - ga).reshape(len(fa), -1)
        # only rows whose float sup is near the max can hold the exact max
        rowmax = diff.max(axis=1)
        cand = np.nonzero(rowmax >= rowmax.max() * (1 - 1e-9) - 1e-300)[0]
        for i in cand:
            for a, b in zip(fa.reshape(len(fa), -1)[i], ga.reshape(len(ga), -1)[i]):
                best = max(best, abs(Fraction(float(a)) - Fraction(float(b))))
        return min(Fraction(1), best)
    return float(min(1.0, np.abs(fa - ga).max()))


def _independent_rows(rows: Sequence[Sequence[int]]) -> bool:
    return integer_rank(rows) == len(rows)


def is_affinely_independent(points: PointSet | Sequence) -> bool:
    """True iff the points augmented with a row of ones have full rank k+1."""
    ps = points if isinstance(points, PointSet) else PointSet(points)
    k1 = len(ps)
    if k1 == 0:
        return True
    if k1 > ps.dim + 1:
        return False
    if ps.exact:
        return _independent_rows(ps.int_rows())
    aug = np.hstack([ps.array, np.ones((k1, 1))])
    return int(np.linalg.matrix_rank(aug)) == k1


def _top_subsets(n_points: int, dim: int, must_contain: int | None = None):
    """Subsets of size min(N+1, count); every smaller subset lies inside one."""
    size = min(dim + 1, n_points)
    if must_contain is None:
        yield from combinations(range(n_points), size)
        return
    others = [i for i in range(n_points) if i != must_contain]
    for rest in combinations(others, size - 1):
        yield rest + (must_contain,)


def is_general_position(points: PointSet | Sequence, guard: int = GUARD) -> bool:
    """Every subset of at most N+1 points is affinely independent."""
    ps = points if isinstance(points, PointSet) else PointSet(points)
    if len(ps) > guard:
        raise ValueError(f"{len(ps)} points exceed the general-position guard {guard}")
    if len(ps) <= 1:
        return True
    if ps.exact:
        rows = ps.int_rows()
        # subsets of an independent set are independent, so maximal ones suffice
        return all(_independent_rows([rows[i] for i in sub]) for sub in _top_subsets(len(ps), ps.dim))
    return all(is_affinely_independent(PointSet([ps._rows[i] for i in sub], exact=False)) for sub in _top_subsets(len(ps), ps.dim))


def _offset_ok(x_row: Sequence[float], y_row: Sequence[float], r: Fraction) -> bool:
    return all(abs(Fraction(float(b)) - Fraction(float(a))) < r for a, b in zip(x_row, y_row))


def perturb_to_general_position(
    points: PointSet | Sequence,
    r: float,
    seed: int = 0,
    retries: int = 1000,
    constraints: Iterable[Iterable[int]] | None = None,
    guard: int = GUARD,
) -> PointSet:
    """Move each point by less than ``r`` (sup norm) into general position.

    y_1 = x_1; each later y_k is drawn uniformly from the open sup-norm ball of
    radius r around x_k and redrawn until every subset of at most N+1 of
    y_1..y_k that contains y_k is affinely independent (checked exactly).

    With ``constraints`` (a family of index sets) only those sets are required
    to be affinely independent, each being checked when its largest index is
    drawn; sets larger than N+1 are ignored. Without constraints the point
    count is capped by ``guard``.
    """
    ps = points if isinstance(points, PointSet) else PointSet(points)
    if not r > 0:
        raise ValueError("r must be positive")
    n, dim = len(ps), ps.dim
    if constraints is None and n > guard:
        raise ValueError(f"{n} points exceed the general-position guard {guard}; pass constraints")
    rng = np.random.default_rng(seed)
    rfrac = Fraction(float(r))
    by_last: dict[int, list[tuple[int, ...]]] = {}
    if constraints is not None:
        for c in constraints:
            c = tuple(sorted(set(c)))
            if 1 < len(c) <= dim + 1:
                by_last.setdefault(c[-1], []).append(c)
    out = np.array(ps.array, copy=True)
    rows: list[list[int]] = []
    for k in range(n):
        x = ps.array[k]
        for attempt in range(retries + 1):
            if attempt == retries:
                raise GeneralPositionError(f"retry budget {retries} exhausted at point {k}")
            if k == 0:
                y = x.copy()
            else:
                off = rng.uniform(-float(r), float(r), size=dim)
                y = x + off
                if not _offset_ok(x, y, rfrac):
                    continue
            row = integer_row([Fraction(float(v)) for v in y] + [Fraction(1)])
            if constraints is None:
                subs = _top_subsets(k + 1, dim, must_contain=k)
                cand = rows + [row]
                good = all(_independent_rows([cand[i] for i in sub]) for sub in subs) if k else True
            else:
                cand = rows + [row]
                good = all(_independent_rows([cand[i] for i in c]) for c in by_last.get(k, ()))
            if good:
                out[k] = y
                rows.append(row)
                break
    return PointSet(out.tolist(), exact=ps.exact)


class Intersection(str, enum.Enum):
    DISJOINT = "disjoint"
    COMMON_FACE = "intersect_in_common_face"
    IMPROPER = "intersect_improperly"


def simplices_disjoint(s1: PointSet | Sequence, s2: PointSet | Sequence) -> Intersection:
    """Classify how the convex hulls of two geometric simplices meet.

    Shared vertices are detected by exact coordinate equality. Feasibility of
    sum(l_i p_i) = sum(m_j q_j) over the two standard simplices is decided by an
    exact LP; when vertices are shared the LP also maximizes the weight on the
    non-shared vertices of ``s1``, which is positive exactly when the
    intersection is larger than the shared face.
    """
    a = s1 if isinstance(s1, PointSet) else PointSet(s1)
    b = s2 if isinstance(s2, PointSet) else PointSet(s2)
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    for s in (a, b):
        if len(s) == 0 or not is_affinely_independent(PointSet(s.rational)):
            raise ValueError("degenerate simplex: vertices are not affinely independent")
    pa, pb = a.rational, b.rational
    shared_b = {tuple(p) for p in pb}
    private_a = [i for i, p in enumerate(pa) if tuple(p) not in shared_b]
    ka, kb, dim = len(pa), len(pb), a.dim
    # variables: lambda (ka) then mu (kb)
    a_eq = [[1] * ka + [0] * kb, [0] * ka + [1] * kb]
    for c in range(dim):
        a_eq.append([pa[i][c] for i in range(ka)] + [-pb[j][c] for j in range(kb)])
    b_eq = [1, 1] + [0] * dim
    obj = [1 if i in private_a else 0 for i in range(ka)] + [0] * kb
    res = lp_maximize(obj, a_eq, b_eq)
    if not res.feasible:
        return Intersection.DISJOINT
    if len(private_a) == ka:
        return Intersection.IMPROPER
    return Intersection.IMPROPER if res.value > 0 else Intersection.COMMON_FACE
