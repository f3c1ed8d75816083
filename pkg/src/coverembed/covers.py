"""Finite cover combinatorics: order, refinement, Lebesgue numbers and the
explicit constructions used to bound covering dimension.

Covers are finite families of id sets over a finite ground set; openness is
not modelled, so order and refinement are purely combinatorial.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from typing import Callable, Hashable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .exact import decimal_fraction
from .space import Exhaustion, FiniteMetricSpace, SampleSet, SimplicialComplex, subdivision_star_chain

__all__ = [
    "Cover",
    "CoverError",
    "RefinerContractError",
    "Refinement",
    "CubeCoverSpec",
    "order",
    "order_in",
    "refines",
    "lebesgue_number",
    "cube_cover",
    "cube_cells_at",
    "cube_set_diameters",
    "merge_refinements",
    "staged_cover",
    "star_cover",
    "star_refiner",
    "dimension_upper_bound",
    "load_cover",
    "dump_cover",
]


class CoverError(ValueError):
    pass


class RefinerContractError(CoverError):
    def __init__(self, stage: int, message: str):
        super().__init__(f"stage {stage}: {message}")
        self.stage = stage


@dataclass(frozen=True)
class Cover:
    ground: frozenset
    sets: tuple
    labels: tuple = ()

    def __post_init__(self):
        ground = frozenset(self.ground)
        sets = tuple(frozenset(s) for s in self.sets)
        labels = tuple(str(x) for x in self.labels) if self.labels else tuple(f"U{i}" for i in range(len(sets)))
        if len(labels) != len(sets):
            raise CoverError("one label per set required")
        for lab, s in zip(labels, sets):
            if not s:
                raise CoverError(f"cover set {lab} is empty")
            if not s <= ground:
                raise CoverError(f"cover set {lab} leaves the ground set")
        if sets and frozenset().union(*sets) != ground or (not sets and ground):
            raise CoverError("sets do not cover the ground set")
        object.__setattr__(self, "ground", ground)
        object.__setattr__(self, "sets", sets)
        object.__setattr__(self, "labels", labels)

    @classmethod
    def of(cls, sets: Iterable[Iterable[Hashable]], ground: Iterable[Hashable] | None = None, labels=None) -> "Cover":
        sets = [frozenset(s) for s in sets]
        if ground is None:
            ground = frozenset().union(*sets) if sets else frozenset()
        return cls(frozenset(ground), tuple(sets), tuple(labels or ()))

    def __len__(self) -> int:
        return len(self.sets)

    def __iter__(self):
        return iter(self.sets)

    def restrict(self, region: Iterable[Hashable]) -> "Cover":
        """Trace on ``region``: sets intersected with it, empty traces dropped."""
        region = frozenset(region)
        pairs = [(lab, s & region) for lab, s in zip(self.labels, self.sets) if s & region]
        return Cover(region, tuple(s for _, s in pairs), tuple(lab for lab, _ in pairs))

    def distinct(self) -> "Cover":
        """Drop repeated sets, keeping the first label."""
        seen, keep = set(), []
        for lab, s in zip(self.labels, self.sets):
            if s not in seen:
                seen.add(s)
                keep.append((lab, s))
        return Cover(self.ground, tuple(s for _, s in keep), tuple(lab for lab, _ in keep))

    def counts(self) -> Counter:
        """Number of distinct cover sets containing each point."""
        c: Counter = Counter()
        for s in set(self.sets):
            c.update(s)
        return c

    def to_json(self) -> dict:
        return {
            "ground": _sorted_ids(self.ground),
            "sets": [{"label": lab, "ids": _sorted_ids(s)} for lab, s in zip(self.labels, self.sets)],
        }


def _sorted_ids(ids):
    return sorted(ids, key=lambda v: (0, v, "") if isinstance(v, (int, np.integer)) else (1, 0, str(v)))


def order_in(cover: Cover, region: Iterable[Hashable]) -> int | None:
    """Largest m such that some point of ``region`` lies in m+1 distinct sets.

    Returns None for an empty region.
    """
    region = frozenset(region)
    if not region <= cover.ground:
        raise CoverError("region is not contained in the ground set")
    if not region:
        return None
    counts = cover.counts()
    return max(counts[x] for x in region) - 1


def order(cover: Cover) -> int | None:
    return order_in(cover, cover.ground)


class Refinement(NamedTuple):
    ok: bool
    witness: tuple  # index into u (first match) per set of v, None where none


def refines(v: Cover, u: Cover) -> Refinement:
    if v.ground != u.ground:
        raise CoverError("covers have different ground sets")
    witness = []
    for s in v.sets:
        witness.append(next((j for j, t in enumerate(u.sets) if s <= t), None))
    return Refinement(all(w is not None for w in witness), tuple(witness))


def lebesgue_number(cover: Cover, space: FiniteMetricSpace) -> float:
    """min over x of max over sets U containing x of d(x, ground minus U).

    Distance to an empty complement is capped at diam + 1.
    """
    ids = list(space.point_ids)
    if frozenset(ids) != cover.ground:
        raise CoverError("cover ground does not match the space")
    cap = space.diameter() + 1.0
    n = len(ids)
    best = np.zeros(n)
    for s in cover.sets:
        mask = np.zeros(n, dtype=bool)
        mask[space.index(s)] = True
        if mask.all():
            reach = np.full(mask.sum(), cap)
        else:
            reach = space.dist[np.ix_(mask, ~mask)].min(axis=1)
        best[mask] = np.maximum(best[mask], reach)
    return float(best.min())


# ---------------------------------------------------------------------------
# Unit-cube cover of R^n, scaled by lambda / 3


@dataclass(frozen=True)
class CubeCoverSpec:
    n: int
    lam: float
    box: tuple  # ((lo, hi), ...) one pair per axis
    grid_pitch: float

    def __post_init__(self):
        if self.n < 1:
            raise CoverError("n must be >= 1")
        box = tuple(tuple(b) for b in self.box)
        if len(box) == 1 and self.n > 1:
            box = box * self.n
        if len(box) != self.n:
            raise CoverError("box needs one (lo, hi) pair per axis")
        if any(not lo <= hi for lo, hi in box):
            raise CoverError("box is empty")
        if not self.lam > 0 or not self.grid_pitch > 0:
            raise CoverError("lambda and pitch must be positive")
        if decimal_fraction(self.grid_pitch) > decimal_fraction(self.lam) / 24:
            raise CoverError("grid pitch too coarse: need pitch <= lambda / 24")
        object.__setattr__(self, "box", box)

    def axis_values(self, axis: int) -> list[Fraction]:
        lo, hi = (decimal_fraction(v) for v in self.box[axis])
        p = decimal_fraction(self.grid_pitch)
        return [lo + i * p for i in range(int((hi - lo) / p) + 1)]

    def grid_point(self, idx: Sequence[int]) -> tuple[Fraction, ...]:
        lo = [decimal_fraction(b[0]) for b in self.box]
        p = decimal_fraction(self.grid_pitch)
        return tuple(l + i * p for l, i in zip(lo, idx))


def _axis_data(x: Fraction):
    """floor, distance to the nearest integer, nearest integer."""
    fl = math.floor(x)
    frac = x - fl
    delta = min(frac, 1 - frac)
    near = fl if frac < Fraction(1, 2) else fl + 1
    return fl, delta, near


def cube_cells_at(x: Sequence[Fraction]) -> dict:
    """Cells C (one per stratum d at most) whose neighbourhood U(C) contains x.

    ``x`` is in unscaled coordinates. U(C) is the union of the open cubes of
    radius eps(x')/2 around points x' of C, eps(x') = min(1/2, distances of the
    non-integer coordinates of x' to Z). Working this out per coordinate, x is
    in U(C) exactly when, with K the integer-type axes of C and J the
    interval-type axes, max over K of |x_i - k_i| is below 1/4 and strictly
    below the distance of every J-coordinate to the ends of its interval.
    Returns ``{d: cell}`` with a cell written as a tuple of ("K", k) / ("J", k)
    entries (("J", k) meaning the interval (k, k+1)).
    """
    n = len(x)
    data = [_axis_data(Fraction(v)) for v in x]
    deltas = sorted((dlt for _, dlt, _ in data), reverse=True)
    quarter = Fraction(1, 4)
    out = {}
    for d in range(n + 1):
        a = deltas[d] if d < n else Fraction(0)
        if a >= quarter:
            continue
        if d > 0 and not deltas[d - 1] > a:
            continue
        cell = []
        for fl, dlt, near in data:
            cell.append(("J", fl) if d > 0 and dlt >= deltas[d - 1] else ("K", near))
        out[d] = tuple(cell)
    return out


def _cell_label(cell) -> str:
    return "x".join(f"{'{'}{k}{'}'}" if t == "K" else f"({k},{k + 1})" for t, k in cell)


def cube_cover(spec: CubeCoverSpec) -> Cover:
    """The scaled neighbourhoods (lambda/3) U(C) traced on the grid of the box.

    Ground ids are grid index tuples; see ``CubeCoverSpec.grid_point``.
    """
    lam = decimal_fraction(spec.lam)
    axes = [spec.axis_values(a) for a in range(spec.n)]
    scale = 3 / lam
    sets: dict = {}
    for idx in product(*(range(len(ax)) for ax in axes)):
        x = [axes[a][i] * scale for a, i in enumerate(idx)]
        for d, cell in cube_cells_at(x).items():
            sets.setdefault(cell, []).append(idx)
    cells = sorted(sets, key=lambda c: (sum(t == "J" for t, _ in c), c))
    ground = frozenset(product(*(range(len(ax)) for ax in axes)))
    return Cover(ground, tuple(frozenset(sets[c]) for c in cells), tuple(_cell_label(c) for c in cells))


def cube_set_diameters(spec: CubeCoverSpec, cover: Cover) -> list[Fraction]:
    """Exact sup-norm diameter of each cover set in the box coordinates."""
    p = decimal_fraction(spec.grid_pitch)
    out = []
    for s in cover.sets:
        idx = np.array(list(s))
        span = (idx.max(axis=0) - idx.min(axis=0)).max()
        out.append(int(span) * p)
    return out


# ---------------------------------------------------------------------------
# Constructions that produce low-order refinements


def merge_refinements(a1: Cover, a2: Cover, x1: Iterable[Hashable], x2: Iterable[Hashable]) -> Cover:
    """Amalgamate a2 along its refinement witness into a1.

    Each set S of a1 is replaced by V(S), the union of the sets of a2 whose
    witness is S. The result refines a1 and, at every point, has no more sets
    than either a1 or a2, so its order is bounded by both order_in(a1, x1)
    and order_in(a2, x2) when x1 and x2 cover the ground.
    """
    x1, x2 = frozenset(x1), frozenset(x2)
    if x1 | x2 != a1.ground:
        raise CoverError("x1 and x2 must cover the ground set")
    ref = refines(a2, a1)
    if not ref.ok:
        bad = ref.witness.index(None)
        raise CoverError(f"a2 does not refine a1: set {a2.labels[bad]} fits in no set of a1")
    merged: dict = {}
    for s, w in zip(a2.sets, ref.witness):
        merged[w] = merged.get(w, frozenset()) | s
    keys = sorted(merged)
    return Cover(a1.ground, tuple(merged[k] for k in keys), tuple(a1.labels[k] for k in keys)).distinct()


Refiner = Callable[[Cover, frozenset, int], Cover]


def staged_cover(u: Cover, exhaustion: Exhaustion, refiner: Refiner, d: int) -> Cover:
    """Refine ``u`` to order <= d one exhaustion stage at a time.

    Stage i asks the refiner for a refinement W of the current cover V_i with
    order <= d on the new shell C_{i+1} \\ C_i, then forms V_{i+1} from
      * the sets of V_i meeting C_{i-1} (kept unchanged),
      * for the other sets U of V_i meeting C_i, the union V(U) of the sets of W
        that meet C_i and are assigned to U by the refinement witness,
      * the sets of W missing C_i.
    V_{i+1} refines V_i and has order <= d on C_{i+1} provided kept sets stay
    inside C_i, which holds when the refiner's sets are smaller than the gap
    between consecutive stages. Returns V_K.
    """
    if exhaustion.ground != u.ground:
        raise CoverError("exhaustion does not match the cover's ground set")
    cur = u
    K = len(exhaustion)
    for i in range(K):
        prev2, prev, nxt = exhaustion.stage(i - 1), exhaustion.stage(i), exhaustion.stage(i + 1)
        region = nxt - prev
        w = refiner(cur, frozenset(region), d)
        if w.ground != cur.ground:
            raise RefinerContractError(i + 1, "refiner changed the ground set")
        ref = refines(w, cur)
        if not ref.ok:
            raise RefinerContractError(i + 1, "refiner output is not a refinement")
        ow = order_in(w, region)
        if ow is not None and ow > d:
            raise RefinerContractError(i + 1, f"refiner output has order {ow} > {d} on the new shell")
        kept = [(lab, s) for lab, s in zip(cur.labels, cur.sets) if s & prev2]
        pieces: dict = {}
        for s, j in zip(w.sets, ref.witness):
            if s & prev:
                pieces[j] = pieces.get(j, frozenset()) | s
        amalgams = [
            (f"{cur.labels[j]}'", pieces[j])
            for j, s in enumerate(cur.sets)
            if j in pieces and not s & prev2 and s & prev
        ]
        fresh = [(lab, s) for lab, s in zip(w.labels, w.sets) if not s & prev]
        parts = kept + amalgams + fresh
        nxt_cover = Cover(cur.ground, tuple(s for _, s in parts), tuple(lab for lab, _ in parts)).distinct()
        on = order_in(nxt_cover, nxt)
        if on is not None and on > d:
            leaks = [lab for lab, s in kept if s - prev]
            raise CoverError(
                f"stage {i + 1}: order {on} > {d} on C_{i + 1}; kept sets {leaks[:3]} reach past C_{i}"
                " (refiner sets must be smaller than the gap between stages)"
            )
        cur = nxt_cover
    return cur


def star_cover(samples: SampleSet, rounds: int, ids: Iterable[int] | None = None, _chain=None) -> Cover:
    """Open stars of the vertices of the ``rounds``-fold barycentric subdivision, traced on samples."""
    stars = (_chain[rounds] if _chain is not None else subdivision_star_chain(samples, rounds, ids)[rounds])
    sets = [frozenset(v) for v in stars.values()]
    ground = frozenset(samples.ids if ids is None else ids)
    return Cover(ground, tuple(sets), tuple(f"st{k}" for k in range(len(sets))))


def star_refiner(samples: SampleSet, space: FiniteMetricSpace, scale: float = math.inf, max_rounds: int = 10) -> Refiner:
    """Refiner returning the coarsest star cover that refines the given cover
    and whose sets all have diameter below ``scale``.

    Star covers of an n-complex have order <= n everywhere, so this is an
    honest refiner for any d >= n.
    """
    chain = subdivision_star_chain(samples, max_rounds)

    def refine(cover: Cover, region: frozenset, d: int) -> Cover:
        for r in range(max_rounds + 1):
            cand = star_cover(samples, r, _chain=chain)
            if refines(cand, cover).ok and max(space.diameter(s) for s in cand.sets) < scale:
                return cand
        raise CoverError(f"no star cover within {max_rounds} rounds refines the cover at scale {scale}")

    return refine


def dimension_upper_bound(complex: SimplicialComplex, samples: SampleSet, rounds: int) -> int:
    """Order of the open-star cover of the ``rounds``-fold barycentric subdivision."""
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    return order(star_cover(samples, rounds))


def load_cover(path_or_obj) -> Cover:
    obj = path_or_obj
    if not isinstance(obj, Mapping):
        with open(path_or_obj) as fh:
            obj = json.load(fh)
    try:
        ground = [_id(v) for v in obj["ground"]]
        sets = [[_id(v) for v in s["ids"]] for s in obj["sets"]]
        labels = [str(s.get("label", f"U{i}")) for i, s in enumerate(obj["sets"])]
    except (KeyError, TypeError, AttributeError) as exc:
        raise ValueError(f"malformed cover JSON: {exc}") from exc
    return Cover(frozenset(ground), tuple(frozenset(s) for s in sets), tuple(labels))


def _id(v):
    return tuple(v) if isinstance(v, list) else v


def dump_cover(cover: Cover, path=None) -> str:
    text = json.dumps(cover.to_json(), indent=1)
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    return text
