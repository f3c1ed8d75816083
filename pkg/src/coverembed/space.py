"""Finite metric spaces, simplicial complexes, sampled realizations, exhaustions."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "FiniteMetricSpace",
    "SimplicialComplex",
    "SampleSet",
    "Exhaustion",
    "realize_metric",
    "build_exhaustion",
    "subdivision_stars",
    "sup_metric",
    "load_complex",
    "dump_complex",
    "load_coords",
    "dump_samples",
]

METRIC_TOL = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FiniteMetricSpace:
    """A finite set of labelled points with an explicit distance matrix."""

    point_ids: tuple
    dist: np.ndarray
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        ids = tuple(self.point_ids)
        d = _frozen(self.dist)
        n = len(ids)
        if d.shape != (n, n):
            raise ValueError(f"distance matrix has shape {d.shape}, expected {(n, n)}")
        if len(set(ids)) != n:
            raise ValueError("point ids must be distinct")
        object.__setattr__(self, "point_ids", ids)
        object.__setattr__(self, "dist", d)
        object.__setattr__(self, "_index", {p: i for i, p in enumerate(ids)})

    def __len__(self) -> int:
        return len(self.point_ids)

    def check(self, tol: float = METRIC_TOL, triangle: bool = True) -> None:
        """Raise ValueError unless the matrix is a metric within ``tol``.

        The O(n^3) triangle check can be skipped for matrices that are metric
        by construction (norm distances of points).
        """
        d = self.dist
        n = len(self)
        if n == 0:
            return
        if np.any(np.abs(np.diag(d)) > tol):
            raise ValueError("dist(x, x) must be 0")
        if np.any(np.abs(d - d.T) > tol):
            raise ValueError("distance matrix is not symmetric")
        off = d + np.eye(n)
        if np.any(off <= 0):
            i, j = np.argwhere(off <= 0)[0]
            raise ValueError(f"distinct points {self.point_ids[i]!r}, {self.point_ids[j]!r} at distance 0")
        if not triangle:
            return
        # d[x,z] <= d[x,y] + d[y,z], one pivot y at a time
        for y in range(n):
            if np.any(d > d[:, y : y + 1] + d[y : y + 1, :] + tol):
                raise ValueError("triangle inequality violated")

    def index(self, ids: Iterable[Hashable]) -> np.ndarray:
        return np.fromiter((self._index[p] for p in ids), dtype=np.intp)

    def index_of(self, pid: Hashable) -> int:
        return self._index[pid]

    def __contains__(self, pid) -> bool:
        return pid in self._index

    def sorted_ids(self, ids: Iterable[Hashable]) -> list:
        """``ids`` in the space's own order."""
        return [self.point_ids[i] for i in sorted(self.index(ids))]

    def restrict(self, ids: Iterable[Hashable]) -> "FiniteMetricSpace":
        ids = self.sorted_ids(set(ids))
        idx = self.index(ids)
        return FiniteMetricSpace(tuple(ids), self.dist[np.ix_(idx, idx)])

    def diameter(self, ids: Iterable[Hashable] | None = None) -> float:
        if ids is None:
            return float(self.dist.max()) if len(self) else 0.0
        idx = self.index(ids)
        if len(idx) < 2:
            return 0.0
        return float(self.dist[np.ix_(idx, idx)].max())

    def d(self, a: Hashable, b: Hashable) -> float:
        return float(self.dist[self._index[a], self._index[b]])


def sup_metric(points: np.ndarray, ids: Sequence[Hashable] | None = None) -> FiniteMetricSpace:
    """Finite metric space of points in R^m under the sup norm."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    d = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2) if len(pts) else np.zeros((0, 0))
    if ids is None:
        ids = range(len(pts))
    return FiniteMetricSpace(tuple(ids), d)


def _simplex_key(s: Iterable[Hashable]) -> tuple:
    return tuple(sorted(s, key=_vertex_sort_key))


def _vertex_sort_key(v):
    return (0, v, "") if isinstance(v, (int, np.integer)) else (1, 0, str(v))


@dataclass(frozen=True, eq=False)
class SimplicialComplex:
    """Abstract simplicial complex; simplices are stored as sorted vertex tuples.

    Construction does not force face-closure, so ill-formed inputs can be
    represented and reported; ``validate`` checks the invariants and
    ``from_facets`` builds the closure.
    """

    n: int
    vertices: tuple
    simplices: tuple

    def __post_init__(self):
        verts = tuple(sorted(dict.fromkeys(self.vertices), key=_vertex_sort_key))
        simp = {_simplex_key(s) for s in self.simplices if len(tuple(s))}
        simp = tuple(sorted(simp, key=lambda s: (len(s), [_vertex_sort_key(v) for v in s])))
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "simplices", simp)

    @classmethod
    def from_facets(cls, facets: Iterable[Iterable[Hashable]], n: int | None = None) -> "SimplicialComplex":
        faces = set()
        verts = set()
        for f in facets:
            f = _simplex_key(f)
            verts.update(f)
            for k in range(1, len(f) + 1):
                faces.update(combinations(f, k))
        if n is None:
            n = max((len(s) for s in faces), default=1) - 1
        return cls(n, tuple(verts), tuple(faces))

    def validate(self) -> None:
        present = set(self.simplices)
        vset = set(self.vertices)
        for s in self.simplices:
            if not set(s) <= vset:
                raise ValueError(f"simplex {s} uses unknown vertices")
            for k in range(1, len(s)):
                for face in combinations(s, k):
                    if face not in present:
                        raise ValueError(f"complex is not face-closed: {face} missing from {s}")
        for v in self.vertices:
            if (v,) not in present:
                raise ValueError(f"vertex {v!r} is not listed as a simplex")
        top = max((len(s) for s in self.simplices), default=1) - 1
        if top != self.n:
            raise ValueError(f"declared dimension {self.n} but largest simplex has dimension {top}")

    def of_dim(self, k: int) -> list[tuple]:
        return [s for s in self.simplices if len(s) == k + 1]

    @property
    def facets(self) -> list[tuple]:
        sset = set(self.simplices)
        out = []
        for s in self.simplices:
            if not any(len(t) == len(s) + 1 and set(s) < set(t) for t in sset):
                out.append(s)
        return out

    def euler_characteristic(self) -> int:
        return sum((-1) ** (len(s) - 1) for s in self.simplices)

    def to_json(self) -> dict:
        return {"n": self.n, "vertices": list(self.vertices), "simplices": [list(s) for s in self.simplices]}


def load_complex(path_or_obj, close: bool = True) -> SimplicialComplex:
    """Read complex JSON ``{"n", "vertices", "simplices"}``.

    With ``close`` the listed simplices are treated as generators and all their
    faces are added; otherwise the list is taken literally and validated.
    """
    obj = path_or_obj
    if not isinstance(obj, Mapping):
        with open(path_or_obj) as fh:
            obj = json.load(fh)
    try:
        n = int(obj["n"])
        vertices = list(obj["vertices"])
        simplices = [tuple(s) for s in obj["simplices"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed complex JSON: {exc}") from exc
    if close:
        cx = SimplicialComplex.from_facets(simplices + [(v,) for v in vertices], n=n)
    else:
        cx = SimplicialComplex(n, tuple(vertices), tuple(simplices))
    cx.validate()
    return cx


def dump_complex(cx: SimplicialComplex, path=None) -> str:
    text = json.dumps(cx.to_json(), indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def load_coords(path) -> dict:
    """Reference coordinates CSV: ``id, x1, ..., xm`` per row (header optional)."""
    coords = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].startswith("#"):
                continue
            try:
                vals = [float(v) for v in row[1:]]
            except ValueError:
                if not coords:
                    continue  # header
                raise
            key = row[0].strip()
            coords[int(key) if key.lstrip("-").isdigit() else key] = vals
    return coords


def basis_coords(cx: SimplicialComplex) -> dict:
    """Vertices to standard basis vectors; always an injective realization."""
    eye = np.eye(len(cx.vertices))
    return {v: eye[i] for i, v in enumerate(cx.vertices)}


@dataclass(frozen=True, eq=False)
class SampleSet:
    """Sample points of a complex's realization.

    Sample ``i`` lies in the open simplex ``carriers[i]`` with barycentric
    coordinates ``numerators[i] / denominator`` (all strictly positive). The
    ordering is by carrier simplex (complex order) then by lexicographic
    barycentric grid, so sample ids ``0..len-1`` are reproducible; vertex
    samples come first, in vertex order.
    """

    complex: SimplicialComplex
    carriers: tuple
    numerators: tuple
    denominator: int
    positions: np.ndarray
    mesh: float

    def __len__(self) -> int:
        return len(self.carriers)

    @property
    def ids(self) -> range:
        return range(len(self.carriers))

    def bary(self, i: int) -> tuple[Fraction, ...]:
        return tuple(Fraction(k, self.denominator) for k in self.numerators[i])

    def bary_float(self, i: int) -> np.ndarray:
        return np.asarray(self.numerators[i], dtype=float) / self.denominator

    def point(self, i: int) -> tuple[tuple, tuple[Fraction, ...]]:
        return self.carriers[i], self.bary(i)

    def vertex_sample(self, v) -> int:
        return self.carriers.index((v,))

    def samples_in(self, simplex: Iterable) -> list[int]:
        """Samples lying in the closed simplex."""
        s = set(simplex)
        return [i for i, c in enumerate(self.carriers) if set(c) <= s]

    def to_json(self) -> dict:
        rows = []
        for i, (c, num) in enumerate(zip(self.carriers, self.numerators)):
            rows.append(
                {
                    "id": i,
                    "simplex": list(c),
                    "bary": [repr(k / self.denominator) for k in num],
                    "bary_exact": [str(Fraction(k, self.denominator)) for k in num],
                }
            )
        return {"mesh": self.mesh, "denominator": self.denominator, "samples": rows}


def dump_samples(samples: SampleSet, path=None) -> str:
    text = json.dumps(samples.to_json(), indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def _positive_compositions(total: int, parts: int):
    """All tuples of ``parts`` positive ints summing to ``total``, lexicographic."""
    if parts == 1:
        if total >= 1:
            yield (total,)
        return
    for first in range(1, total - parts + 2):
        for rest in _positive_compositions(total - first, parts - 1):
            yield (first,) + rest


def realize_metric(
    complex: SimplicialComplex,
    reference_coords: Mapping | None = None,
    mesh: float = 0.25,
) -> tuple[SampleSet, FiniteMetricSpace]:
    """Sample the realization of ``complex`` and equip it with the sup metric.

    Points are taken on the barycentric lattice of denominator ``q``, where
    ``q`` is the smallest integer with ``max_edge / q <= mesh`` (and at least
    ``n + 1`` so every open simplex receives a sample). Without reference
    coordinates the vertices go to the standard basis of R^V.
    """
    if not mesh > 0:
        raise ValueError("mesh must be positive")
    complex.validate()
    coords = basis_coords(complex) if reference_coords is None else reference_coords
    vpos = {}
    for v in complex.vertices:
        if v not in coords:
            raise ValueError(f"no reference coordinates for vertex {v!r}")
        vpos[v] = np.asarray(coords[v], dtype=float).ravel()
    dims = {p.shape[0] for p in vpos.values()}
    if len(dims) != 1:
        raise ValueError("reference coordinates have inconsistent lengths")
    seen = {}
    for v, p in vpos.items():
        key = tuple(p)
        if key in seen:
            raise ValueError(f"reference coordinates not injective: {seen[key]!r} and {v!r}")
        seen[key] = v
    max_edge = max((np.abs(vpos[a] - vpos[b]).max() for a, b in complex.of_dim(1)), default=0.0)
    q = max(complex.n + 1, math.ceil(max_edge / mesh - 1e-12), 1)
    carriers, nums, pos = [], [], []
    for s in complex.simplices:
        vs = np.array([vpos[v] for v in s])
        for comp in _positive_compositions(q, len(s)) if len(s) > 1 else [(q,)]:
            carriers.append(s)
            nums.append(comp)
            pos.append(np.asarray(comp, dtype=float) @ vs / q)
    positions = np.array(pos)
    samples = SampleSet(complex, tuple(carriers), tuple(nums), q, _frozen(positions), float(mesh))
    space = sup_metric(positions)
    # sup-norm distances already satisfy the triangle inequality
    space.check(triangle=False)
    return samples, space


@dataclass(frozen=True)
class Exhaustion:
    """Nested stages C_1 <= C_2 <= ... <= C_K whose union is the ground set."""

    stages: tuple

    def __post_init__(self):
        stages = tuple(frozenset(s) for s in self.stages)
        if not stages or not stages[0]:
            raise ValueError("first stage must be nonempty")
        for a, b in zip(stages, stages[1:]):
            if not a <= b:
                raise ValueError("stages are not nested")
        object.__setattr__(self, "stages", stages)

    def __len__(self) -> int:
        return len(self.stages)

    def __getitem__(self, k):
        return self.stages[k]

    @property
    def ground(self) -> frozenset:
        return self.stages[-1]

    def stage(self, k: int) -> frozenset:
        """1-based stage C_k with C_0 = C_{-1} = empty; indices past K clamp to C_K."""
        if k <= 0:
            return frozenset()
        return self.stages[min(k, len(self.stages)) - 1]

    def shells(self) -> list[frozenset]:
        """C_1, C_2 \\ C_1, ..., C_K \\ C_{K-1}."""
        out, prev = [], frozenset()
        for s in self.stages:
            out.append(s - prev)
            prev = s
        return out


def build_exhaustion(space: FiniteMetricSpace, batch_count: int, base=None) -> Exhaustion:
    """Balls around a base point (default: the first point), cut into batches.

    Points are ordered by distance to the base point (ties by space order) and
    split into ``batch_count`` contiguous batches of nondecreasing size; stage
    ``i`` is the union of the first ``i`` batches.
    """
    if batch_count < 1:
        raise ValueError("batch_count must be >= 1")
    n = len(space)
    if n == 0:
        raise ValueError("cannot exhaust an empty space")
    base_idx = 0 if base is None else space.index_of(base)
    order = np.lexsort((np.arange(n), space.dist[base_idx]))
    k = min(batch_count, n)
    # np.array_split puts the larger batches first; reverse for nondecreasing sizes
    sizes = [len(b) for b in np.array_split(np.arange(n), k)][::-1]
    stages, cut = [], 0
    for size in sizes:
        cut += size
        stages.append(frozenset(space.point_ids[i] for i in order[:cut]))
    return Exhaustion(tuple(stages))


def _bary_round(vertex_coords: list[tuple], weights: list[Fraction]):
    """One barycentric subdivision step for a point in the open simplex.

    ``vertex_coords`` are the current simplex's vertices (each a canonical
    sorted tuple of (original vertex, Fraction) pairs) and ``weights`` the
    point's positive barycentric weights there. Returns the carrier in the
    subdivision as (vertices, weights), keeping only positive weights.
    """
    order = sorted(range(len(weights)), key=lambda i: -weights[i])
    ws = [weights[i] for i in order] + [Fraction(0)]
    new_v, new_w = [], []
    acc: dict = {}
    for j, i in enumerate(order, start=1):
        for v, c in vertex_coords[i]:
            acc[v] = acc.get(v, Fraction(0)) + c
        w = j * (ws[j - 1] - ws[j])
        if w > 0:
            new_v.append(tuple(sorted(((v, c / j) for v, c in acc.items() if c), key=lambda t: _vertex_sort_key(t[0]))))
            new_w.append(w)
    return new_v, new_w


def subdivision_stars(samples: SampleSet, rounds: int, ids: Iterable[int] | None = None) -> dict:
    """Open-star membership of samples in the ``rounds``-fold barycentric subdivision.

    Returns ``{subdivision vertex: [sample ids]}`` where a subdivision vertex
    is identified by its exact barycentric position (sorted tuple of
    ``(original vertex, Fraction)``). A sample belongs to the open star of
    every vertex carrying positive weight in its carrier simplex, so each
    sample lies in at most ``dim(carrier) + 1`` stars.
    """
    stars: dict = {}
    for i in samples.ids if ids is None else ids:
        carrier = samples.carriers[i]
        verts = [((v, Fraction(1)),) for v in carrier]
        w = list(samples.bary(i))
        for _ in range(rounds):
            verts, w = _bary_round(verts, w)
        for v in verts:
            stars.setdefault(v, []).append(i)
    return stars


def subdivision_star_chain(samples: SampleSet, max_rounds: int, ids: Iterable[int] | None = None) -> list[dict]:
    """``subdivision_stars`` for rounds 0..max_rounds computed in one pass."""
    chain = [dict() for _ in range(max_rounds + 1)]
    for i in samples.ids if ids is None else ids:
        verts = [((v, Fraction(1)),) for v in samples.carriers[i]]
        w = list(samples.bary(i))
        for r in range(max_rounds + 1):
            if r:
                verts, w = _bary_round(verts, w)
            for v in verts:
                chain[r].setdefault(v, []).append(i)
    return chain
