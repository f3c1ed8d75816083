"""PL maps and sample maps: fibre diameters, partitions of unity, a proper
height function, escape-to-infinity ladders and bounded blend extensions.

A *sample map* is an array whose row ``i`` is the image of the space's
``i``-th point.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from .covers import Cover
from .space import Exhaustion, FiniteMetricSpace, SampleSet, SimplicialComplex, _frozen, _simplex_key

__all__ = [
    "PLMap",
    "PartitionOfUnity",
    "evaluate",
    "evaluate_samples",
    "fiber_diameter",
    "fiber_witness",
    "in_U_eps",
    "partition_of_unity",
    "proper_height",
    "escape_witnesses",
    "escapes_to_infinity",
    "blend_extend",
    "equal_image_pairs",
    "load_map",
    "dump_map",
]


@dataclass(frozen=True, eq=False)
class PLMap:
    complex: SimplicialComplex
    N: int
    vertex_images: dict

    def __post_init__(self):
        imgs = {}
        for v in self.complex.vertices:
            if v not in self.vertex_images:
                raise ValueError(f"vertex {v!r} has no image")
            p = np.asarray(self.vertex_images[v], dtype=float).ravel()
            if p.shape != (self.N,):
                raise ValueError(f"image of {v!r} has length {p.shape[0]}, expected {self.N}")
            imgs[v] = _frozen(p)
        object.__setattr__(self, "vertex_images", imgs)

    def image(self, simplex: Sequence) -> np.ndarray:
        return np.array([self.vertex_images[v] for v in simplex])

    def to_json(self) -> dict:
        return {"N": self.N, "vertex_images": {str(v): [float(c) for c in p] for v, p in self.vertex_images.items()}}


def load_map(path_or_obj, complex: SimplicialComplex) -> PLMap:
    obj = path_or_obj
    if not isinstance(obj, Mapping):
        with open(path_or_obj) as fh:
            obj = json.load(fh)
    by_str = {str(v): v for v in complex.vertices}
    imgs = {by_str[k]: v for k, v in obj["vertex_images"].items()}
    return PLMap(complex, int(obj["N"]), imgs)


def dump_map(m: PLMap, path=None) -> str:
    text = json.dumps(m.to_json(), indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text


def evaluate(m: PLMap, point: tuple) -> np.ndarray:
    """Barycentric combination of the vertex images of the point's simplex."""
    simplex, bary = point
    simplex = tuple(simplex)
    if _simplex_key(simplex) not in set(m.complex.simplices):
        raise ValueError(f"{simplex} is not a simplex of the complex")
    w = np.asarray([float(b) for b in bary])
    if w.shape != (len(simplex),) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
        raise ValueError("barycentric coordinates must be nonnegative and sum to 1")
    return w @ m.image(simplex)


def evaluate_samples(m: PLMap, samples: SampleSet) -> np.ndarray:
    out = np.empty((len(samples), m.N))
    for i in samples.ids:
        out[i] = samples.bary_float(i) @ m.image(samples.carriers[i])
    return out


def _region_index(space: FiniteMetricSpace, region) -> np.ndarray:
    if region is None:
        return np.arange(len(space))
    return np.sort(space.index(set(region)))


def _pairs_within(values: np.ndarray, idx: np.ndarray, tau: float, chunk: int = 512):
    """Yield (rows, cols) index arrays of pairs i<j in idx with sup-distance <= tau."""
    v = values[idx]
    n = len(idx)
    for start in range(0, n, chunk):
        block = v[start : start + chunk]
        dist = np.abs(block[:, None, :] - v[None, :, :]).max(axis=2) if v.shape[1] else np.zeros((len(block), n))
        ii, jj = np.nonzero(dist <= tau)
        ii = ii + start
        keep = ii < jj
        yield idx[ii[keep]], idx[jj[keep]]


def fiber_witness(values, region, tau: float, space: FiniteMetricSpace):
    """(diameter, pair) for the widest near-fibre: max d(x, y) over pairs of
    region points whose images are within ``tau`` in the sup norm."""
    values = np.asarray(values, dtype=float).reshape(len(space), -1)
    idx = _region_index(space, region)
    best, pair = 0.0, None
    for rows, cols in _pairs_within(values, idx, tau):
        if len(rows):
            dd = space.dist[rows, cols]
            k = int(np.argmax(dd))
            if dd[k] > best:
                best, pair = float(dd[k]), (space.point_ids[rows[k]], space.point_ids[cols[k]])
    return best, pair


def fiber_diameter(values, region, tau: float, space: FiniteMetricSpace) -> float:
    return fiber_witness(values, region, tau, space)[0]


def in_U_eps(values, region, eps: float, tau: float, space: FiniteMetricSpace) -> bool:
    return fiber_diameter(values, region, tau, space) < eps


def equal_image_pairs(values, tau: float = 1e-9, region=None, space: FiniteMetricSpace | None = None) -> int:
    """Number of unordered pairs of distinct points with images within ``tau``."""
    values = np.asarray(values, dtype=float)
    values = values.reshape(len(values), -1)
    idx = np.arange(len(values)) if region is None else _region_index(space, region)
    return int(sum(len(r) for r, _ in _pairs_within(values, idx, tau)))


@dataclass(frozen=True, eq=False)
class PartitionOfUnity:
    """``weights[i, x]`` is the weight of cover set ``i`` at the point with
    index ``x`` of ``space``."""

    cover: Cover
    space: FiniteMetricSpace
    weights: np.ndarray

    def vector(self, pid: Hashable) -> np.ndarray:
        return self.weights[:, self.space.index_of(pid)]

    def support(self, i: int) -> frozenset:
        return frozenset(self.space.point_ids[x] for x in np.nonzero(self.weights[i] > 0)[0])

    def check(self, tol: float = 1e-9) -> None:
        w = self.weights
        if np.any(w < 0) or np.any(w > 1):
            raise ValueError("weights must lie in [0, 1]")
        if np.any(np.abs(w.sum(axis=0) - 1) > tol):
            raise ValueError("weights do not sum to 1")
        for i, s in enumerate(self.cover.sets):
            if not self.support(i) <= s:
                raise ValueError(f"support of weight {i} leaves its cover set")


def partition_of_unity(cover: Cover, space: FiniteMetricSpace) -> PartitionOfUnity:
    """phi_i = g_i / sum_j g_j with g_i(x) = d(x, ground minus U_i).

    g_i is identically 1 when U_i is the whole ground set.
    """
    if frozenset(space.point_ids) != cover.ground:
        raise ValueError("cover ground does not match the space")
    n = len(space)
    g = np.zeros((len(cover.sets), n))
    for i, s in enumerate(cover.sets):
        inside = np.zeros(n, dtype=bool)
        inside[space.index(s)] = True
        if inside.all():
            g[i] = 1.0
        else:
            g[i, inside] = space.dist[np.ix_(inside, ~inside)].min(axis=1)
    total = g.sum(axis=0)
    if np.any(total <= 0):
        bad = space.point_ids[int(np.argmin(total))]
        raise ValueError(f"weights vanish at {bad!r}: not a cover")
    return PartitionOfUnity(cover, space, _frozen(g / total))


def stage_cover(exhaustion: Exhaustion, space: FiniteMetricSpace, collar: float | None = None) -> tuple[Cover, list[int]]:
    """Cover U_k = (C_k minus C_{k-1}) plus the part of the next shell within
    ``collar`` of C_k. Returns the cover and the stage number of each set.

    The default collar is twice the largest gap between a stage and the next
    shell, so consecutive sets always overlap.
    """
    if exhaustion.ground != frozenset(space.point_ids):
        raise ValueError("exhaustion does not match the space")
    shells = exhaustion.shells()
    gaps = []
    for k in range(len(shells) - 1):
        a, b = exhaustion.stages[k], shells[k + 1]
        if b:
            gaps.append(float(space.dist[np.ix_(space.index(a), space.index(b))].min()))
    if collar is None:
        collar = 2 * max(gaps, default=0.0)
    sets, ks = [], []
    for k, shell in enumerate(shells):
        u = set(shell)
        if k + 1 < len(shells) and shells[k + 1] and collar > 0:
            nxt = sorted(space.index(shells[k + 1]))
            near = space.dist[np.ix_(nxt, space.index(exhaustion.stages[k]))].min(axis=1) < collar
            u.update(space.point_ids[i] for i, keep in zip(nxt, near) if keep)
        if u:
            sets.append(frozenset(u))
            ks.append(k + 1)
    return Cover(exhaustion.ground, tuple(sets), tuple(f"U{k}" for k in ks)), ks


def proper_height(exhaustion: Exhaustion, space: FiniteMetricSpace, collar: float | None = None) -> np.ndarray:
    """f(x) = sum_k k * phi_k(x) over the stage-derived cover (see ``stage_cover``).

    f is 1 on the first shell and lies in (k-1, k] on the k-th shell, so its
    minimum over the complement of C_k is nondecreasing in k.
    """
    cover, ks = stage_cover(exhaustion, space, collar)
    pou = partition_of_unity(cover, space)
    return np.asarray(ks, dtype=float) @ pou.weights


def _stage_list(stages) -> list[frozenset]:
    if isinstance(stages, Exhaustion):
        return list(stages.stages)
    return [frozenset(s) for s in stages]


def _norms(f, ids) -> tuple[list, np.ndarray]:
    if isinstance(f, Mapping):
        keys = list(f)
        vals = np.array([np.atleast_1d(np.asarray(f[k], dtype=float)) for k in keys])
    else:
        vals = np.asarray(f, dtype=float)
        vals = vals.reshape(len(vals), -1)
        keys = list(range(len(vals))) if ids is None else list(ids)
    return keys, np.abs(vals).max(axis=1) if vals.size else np.zeros(len(keys))


def escape_witnesses(f, stages, ladder: Sequence[float], ids=None) -> list[int | None]:
    """For each R, the first stage index k (1-based) with ||f(x)|| > R off C_k."""
    ladder = list(ladder)
    if any(b <= a for a, b in zip(ladder, ladder[1:])):
        raise ValueError("ladder must be strictly increasing")
    keys, norms = _norms(f, ids)
    stl = _stage_list(stages)
    out = []
    for R in ladder:
        hit = None
        for k, st in enumerate(stl, start=1):
            outside = [n for key, n in zip(keys, norms) if key not in st]
            if not outside or min(outside) > R:
                hit = k
                break
        out.append(hit)
    return out


def escapes_to_infinity(f, stages, ladder: Sequence[float], ids=None) -> bool:
    """Finite analogue of f(x) -> infinity: every R of the ladder has a witnessing stage.

    A stage equal to the whole domain witnesses every R, so exhaustions of
    the full sample set always pass (the compact case); pass a truncated list
    of stages to model a window of a non-compact space.
    """
    return all(w is not None for w in escape_witnesses(f, stages, ladder, ids))


def blend_extend(h, region, space: FiniteMetricSpace, width: float, bound: float | None = None) -> np.ndarray:
    """Bounded extension of ``h`` from ``region`` to the whole space.

    H(x) = beta(x) * h(pi(x)) with pi(x) the nearest region point (ties to the
    lower id) and beta(x) = max(0, 1 - d(x, region) / width). ``h`` is given
    as rows in the space order of ``region``.
    """
    if not width > 0:
        raise ValueError("width must be positive")
    ridx = _region_index(space, region)
    h = np.asarray(h, dtype=float).reshape(len(ridx), -1)
    if bound is not None and len(h) and np.abs(h).max() > bound:
        raise ValueError(f"|h| = {np.abs(h).max()} exceeds the claimed bound {bound}")
    dr = space.dist[:, ridx]
    nearest = np.argmin(dr, axis=1)
    dist = dr[np.arange(len(space)), nearest]
    beta = np.clip(1.0 - dist / width, 0.0, 1.0)
    out = beta[:, None] * h[nearest]
    out[ridx] = h
    return out
