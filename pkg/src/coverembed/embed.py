"""Perturbation steps toward injectivity, the staged embedding pipeline, the
direct general-position PL embedding and the embedding verifier.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Sequence

import numpy as np

from .covers import Cover, order
from .geometry import (
    GUARD,
    Intersection,
    PointSet,
    is_affinely_independent,
    is_general_position,
    perturb_to_general_position,
    rho_metric,
    simplices_disjoint,
)
from .maps import (
    PLMap,
    _pairs_within,
    blend_extend,
    equal_image_pairs,
    escape_witnesses,
    evaluate_samples,
    fiber_diameter,
    partition_of_unity,
    proper_height,
)
from .space import Exhaustion, FiniteMetricSpace, SampleSet, SimplicialComplex, build_exhaustion, subdivision_star_chain

__all__ = [
    "SampleMap",
    "PerturbationReport",
    "PerturbationError",
    "EmbeddingCertificate",
    "small_order_cover",
    "perturb_step",
    "embed_iterative",
    "pl_embed",
    "verify_embedding",
    "to_obj",
    "to_svg",
]

TAU = 1e-9
WEIGHT_TOL = 1e-6
SUBSET_BUDGET = 20000


class PerturbationError(RuntimeError):
    def __init__(self, message: str, report: "PerturbationReport | None" = None):
        super().__init__(message)
        self.report = report


@dataclass(frozen=True, eq=False)
class SampleMap:
    """A map known only on the samples of a complex: row i is the image of sample i."""

    samples: SampleSet
    values: np.ndarray

    @property
    def N(self) -> int:
        return self.values.shape[1]

    def to_json(self) -> dict:
        return {"N": self.N, "sample_images": [[float(c) for c in row] for row in self.values]}


def _values(f, samples: SampleSet) -> np.ndarray:
    if isinstance(f, PLMap):
        return evaluate_samples(f, samples)
    if isinstance(f, SampleMap):
        return np.array(f.values, dtype=float)
    return np.array(f, dtype=float).reshape(len(samples), -1)


def _fspan(values: np.ndarray) -> float:
    if len(values) < 2:
        return 0.0
    return float((values.max(axis=0) - values.min(axis=0)).max())


def small_order_cover(
    complex: SimplicialComplex,
    samples: SampleSet,
    region,
    eps: float,
    f,
    r: float,
    space: FiniteMetricSpace,
    max_rounds: int = 8,
    return_rounds: bool = False,
):
    """Star cover of the region, subdivided until every set has diameter
    < eps/2 and image diameter <= r/2 (both measured on samples).

    Open stars of an n-complex's subdivision meet each point at most n+1
    times, so the order is at most n.
    """
    if not eps > 0 or not r > 0:
        raise ValueError("eps and r must be positive")
    region = sorted(set(region))
    vals = _values(f, samples)
    chain = subdivision_star_chain(samples, max_rounds, region)
    for rounds, stars in enumerate(chain):
        sets = [frozenset(s) for s in stars.values()]
        ok = all(space.diameter(s) < eps / 2 and _fspan(vals[sorted(s)]) <= r / 2 for s in sets)
        if ok:
            cover = Cover(frozenset(region), tuple(sets), tuple(f"st{k}" for k in range(len(sets))))
            return (cover, rounds) if return_rounds else cover
    raise PerturbationError(f"subdivision budget of {max_rounds} rounds exhausted (map too steep for r={r})")


@dataclass
class PerturbationReport:
    eps: float
    r: float
    seed: int
    rho_bound: Fraction
    delta_before: dict
    delta_after: dict
    cover_order: int
    cover_size: int
    rounds: int
    zs_general_position: bool
    gp_scope: str
    coincident_pairs: int
    coincident_max_weight_gap: float
    coincident_max_distance: float
    blend_width: float
    tau: float = TAU
    status: str = "ok"

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "r": self.r,
            "seed": self.seed,
            "rho_bound": float(self.rho_bound),
            "rho_bound_exact": str(self.rho_bound),
            "delta_before": self.delta_before,
            "delta_after": self.delta_after,
            "cover_order": self.cover_order,
            "cover_size": self.cover_size,
            "rounds": self.rounds,
            "zs_general_position": self.zs_general_position,
            "gp_scope": self.gp_scope,
            "coincidences": {
                "tau": self.tau,
                "pairs": self.coincident_pairs,
                "max_weight_gap": self.coincident_max_weight_gap,
                "weight_tol": WEIGHT_TOL,
                "max_distance": self.coincident_max_distance,
            },
            "blend_width": self.blend_width,
            "status": self.status,
        }


def _nn_gap(space: FiniteMetricSpace) -> float:
    if len(space) < 2:
        return 0.0
    d = np.array(space.dist)
    np.fill_diagonal(d, np.inf)
    return float(d.min(axis=1).max())


def _coincidence_constraints(vals: np.ndarray, supports: list[tuple], radius: float) -> set:
    """Support unions for region pairs whose f-images are within ``radius``:
    the only pairs whose g-tilde images can coincide."""
    out = {s for s in supports if len(s) > 1}
    idx = np.arange(len(vals))
    for rows, cols in _pairs_within(vals, idx, radius):
        for a, b in zip(rows, cols):
            u = tuple(sorted(set(supports[a]) | set(supports[b])))
            if len(u) > 1:
                out.add(u)
    return out


def perturb_step(
    f,
    region,
    eps: float,
    r: float,
    seed: int,
    space: FiniteMetricSpace,
    samples: SampleSet,
    max_rounds: int = 8,
    width: float | None = None,
    guard: int = GUARD,
    subset_budget: int = SUBSET_BUDGET,
    tau: float = TAU,
) -> tuple[np.ndarray, PerturbationReport]:
    """One density step: a map g within r of f whose near-fibres on the
    region have diameter below eps.

    The region gets a star cover with small sets (``small_order_cover``), each
    set U_i a representative x_i (its lowest id) and a point z_i within r/2 of
    f(x_i), the z_i in general position. On the region g = sum_i phi_i z_i;
    the correction f - g is blended out to the rest of the space.

    Full general position of the z_i is enforced while the number of
    (N+1)-subsets stays within ``subset_budget``; beyond that only the support
    unions of region pairs whose images could coincide are made independent,
    which is all the fibre bound uses.
    """
    if not 0 < r < 1:
        raise ValueError("r must lie in (0, 1)")
    if not eps > 0:
        raise ValueError("eps must be positive")
    fv = _values(f, samples)
    N = fv.shape[1]
    n = samples.complex.n
    if N < 2 * n + 1:
        raise ValueError(f"target dimension {N} is below 2n+1 = {2 * n + 1}")
    region = space.sorted_ids(set(region))
    ridx = space.index(region)
    cover, rounds = small_order_cover(samples.complex, samples, region, eps, fv, r, space, max_rounds, return_rounds=True)
    sub = space.restrict(region)
    pou = partition_of_unity(cover, sub)
    weights = np.asarray(pou.weights)
    m = len(cover.sets)
    reps = [min(s) for s in cover.sets]
    fr = fv[ridx]
    supports = [tuple(np.nonzero(weights[:, j] > 0)[0]) for j in range(len(region))]

    if m <= guard and comb(m, min(N + 1, m)) <= subset_budget:
        constraints, scope = None, "all"
    else:
        constraints, scope = _coincidence_constraints(fr, supports, 2 * r), "near-coincident"
    zs = perturb_to_general_position(fv[space.index(reps)], r / 2, seed=seed, constraints=constraints, guard=guard)
    z = zs.array
    if constraints is None:
        zs_ok = is_general_position(zs, guard=guard)
    else:
        zs_ok = all(is_affinely_independent([zs._rows[i] for i in c]) for c in constraints if len(c) <= N + 1)

    gt = weights.T @ z
    h = fr - gt
    hmax = float(np.abs(h).max()) if h.size else 0.0
    if width is None:
        width = 2 * _nn_gap(space) or 1.0
    H = blend_extend(h, region, space, width)
    g = fv - H
    g[ridx] = gt

    rho = rho_metric(fv, g, exact=True)
    before = {"tau=0": fiber_diameter(fv, region, 0.0, space), f"tau={tau}": fiber_diameter(fv, region, tau, space)}
    after = {"tau=0": fiber_diameter(g, region, 0.0, space), f"tau={tau}": fiber_diameter(g, region, tau, space)}

    gap, dmax, npairs = 0.0, 0.0, 0
    for rows, cols in _pairs_within(gt, np.arange(len(region)), tau):
        npairs += len(rows)
        if len(rows):
            gap = max(gap, float(np.abs(weights[:, rows] - weights[:, cols]).max()))
            dmax = max(dmax, float(sub.dist[rows, cols].max()))

    report = PerturbationReport(
        eps=eps,
        r=r,
        seed=seed,
        rho_bound=rho,
        delta_before=before,
        delta_after=after,
        cover_order=order(cover),
        cover_size=m,
        rounds=rounds,
        zs_general_position=zs_ok,
        gp_scope=scope,
        coincident_pairs=npairs,
        coincident_max_weight_gap=gap,
        coincident_max_distance=dmax,
        blend_width=width,
        tau=tau,
    )
    if hmax >= r or rho >= r:
        report.status = "displacement-bound-violated"
        raise PerturbationError(f"correction {max(hmax, float(rho))} is not below r={r}", report)
    if not after[f"tau={tau}"] < eps:
        report.status = "fiber-bound-violated"
    return g, report


@dataclass
class EmbeddingCertificate:
    map: object
    scope: str
    pairwise_simplex_results: list
    injectivity_margin: float
    margin_pair: tuple | None
    resolution: float
    properness_witness: dict | None = None
    steps: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def improper_pairs(self) -> list:
        return [p for p in self.pairwise_simplex_results if p["result"] == Intersection.IMPROPER.value]

    @property
    def passed(self) -> bool:
        if self.improper_pairs or not self.injectivity_margin > 0:
            return False
        if self.properness_witness and any(w is None for w in self.properness_witness.get("witness_stage", [])):
            return False
        return True

    def to_json(self) -> dict:
        return {
            "passed": self.passed,
            "scope": self.scope,
            "N": self.map.N,
            "injectivity_margin": self.injectivity_margin,
            "margin_pair": list(self.margin_pair) if self.margin_pair else None,
            "resolution": self.resolution,
            "pairs_checked": len(self.pairwise_simplex_results),
            "improper_pairs": self.improper_pairs,
            "pairwise_simplex_results": self.pairwise_simplex_results,
            "properness_witness": self.properness_witness,
            "steps": [s.to_json() for s in self.steps],
            **self.extra,
            "map": self.map.to_json(),
        }


def _margin(values: np.ndarray, space: FiniteMetricSpace, resolution: float):
    """Smallest sup-distance between images of pairs at domain distance >= resolution."""
    best, pair = np.inf, None
    n = len(values)
    for start in range(0, n, 512):
        block = values[start : start + 512]
        dd = np.abs(block[:, None, :] - values[None, :, :]).max(axis=2)
        rows = np.arange(start, start + len(block))[:, None]
        mask = (np.arange(n)[None, :] > rows) & (space.dist[start : start + len(block)] >= resolution)
        if resolution <= 0:
            mask &= np.arange(n)[None, :] != rows
        if mask.any():
            cand = np.where(mask, dd, np.inf)
            k = np.unravel_index(np.argmin(cand), cand.shape)
            if cand[k] < best:
                best, pair = float(cand[k]), (space.point_ids[start + k[0]], space.point_ids[k[1]])
    return (best if pair else np.inf), pair


def _simplex_pairs(m: PLMap) -> list:
    facets = m.complex.facets
    out = []
    for a, b in combinations(facets, 2):
        res = simplices_disjoint(m.image(a), m.image(b))
        out.append({"a": list(a), "b": list(b), "shared": len(set(a) & set(b)), "result": res.value})
    return out


def verify_embedding(
    m,
    samples: SampleSet | None = None,
    space: FiniteMetricSpace | None = None,
    exhaustion: Exhaustion | None = None,
    resolution: float = 0.0,
    ladder: Sequence[float] | None = None,
) -> EmbeddingCertificate:
    """Certificate for a PL map (exact facet-pair checks plus sample margin)
    or a sample map (sample margin only)."""
    if isinstance(m, PLMap):
        pairs, scope = _simplex_pairs(m), "pl"
        values = evaluate_samples(m, samples) if samples is not None else None
    else:
        pairs, scope = [], "samples"
        values = np.asarray(m.values)
    margin, mpair = np.inf, None
    if values is not None and space is not None:
        margin, mpair = _margin(values, space, resolution)
    witness = None
    if exhaustion is not None and values is not None:
        norms = np.abs(values).max(axis=1)
        minima = []
        for st in exhaustion.stages:
            outside = [norms[i] for i, pid in enumerate(space.point_ids) if pid not in st]
            minima.append(float(min(outside)) if outside else None)
        witness = {"stage_min_norm_outside": minima}
        if ladder is not None:
            witness["ladder"] = list(ladder)
            witness["witness_stage"] = escape_witnesses(values, exhaustion, ladder, ids=space.point_ids)
    return EmbeddingCertificate(m, scope, pairs, float(margin), mpair, resolution, witness)


def _step_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def initial_map(samples: SampleSet, space: FiniteMetricSpace, exhaustion: Exhaustion, N: int) -> np.ndarray:
    """Height over the exhaustion (scaled to (0, 1]) as the first coordinate,
    the sample positions (truncated or zero-padded) in the rest."""
    height = proper_height(exhaustion, space) / len(exhaustion)
    pos = np.asarray(samples.positions, dtype=float)
    rest = np.zeros((len(samples), N - 1))
    k = min(N - 1, pos.shape[1])
    rest[:, :k] = pos[:, :k]
    return np.column_stack([height, rest])


def embed_iterative(
    complex: SimplicialComplex,
    samples: SampleSet,
    space: FiniteMetricSpace,
    exhaustion: Exhaustion | None = None,
    K: int = 6,
    seed: int = 0,
    max_rounds: int = 8,
    tau: float = TAU,
) -> tuple[SampleMap, EmbeddingCertificate]:
    """K perturbation steps with eps_k = 1/k and r_k = 2^-(k+1) on stage C_k.

    Stages past the end of the exhaustion repeat the last one. The result is
    certified on samples at resolution 1/K; the total displacement is below
    sum r_k < 1.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    N = 2 * complex.n + 1
    if exhaustion is None:
        exhaustion = build_exhaustion(space, K)
    f0 = initial_map(samples, space, exhaustion, N)
    f = f0
    reports, equal_counts = [], [equal_image_pairs(f0, tau)]
    for k in range(1, K + 1):
        r = 2.0 ** -(k + 1)
        f, rep = perturb_step(f, exhaustion.stage(k), 1.0 / k, r, _step_seed(seed, k), space, samples, max_rounds=max_rounds, tau=tau)
        reports.append(rep)
        equal_counts.append(equal_image_pairs(f, tau))
    sm = SampleMap(samples, f)
    cert = verify_embedding(sm, samples, space, resolution=1.0 / K)
    budget = sum((Fraction(2) ** -(k + 1) for k in range(1, K + 1)), Fraction(0))
    spent = sum((rep.rho_bound for rep in reports), Fraction(0))
    cert.steps = reports
    cert.extra = {
        "K": K,
        "seed": seed,
        "tau": tau,
        "rho_budget": str(budget),
        "rho_spent": str(spent),
        "rho_f0_fK": str(rho_metric(f0, f, exact=True)),
        "equal_image_pairs": equal_counts,
        "stage_sizes": [len(s) for s in exhaustion.stages],
    }
    return sm, cert


def _moment_curve(count: int, N: int) -> np.ndarray:
    t = (np.arange(count) + 1.0) / count
    return np.column_stack([t**j for j in range(1, N + 1)]) if N else np.zeros((count, 0))


def pl_embed(
    complex: SimplicialComplex,
    seed: int = 0,
    N: int | None = None,
    samples: SampleSet | None = None,
    space: FiniteMetricSpace | None = None,
) -> tuple[PLMap, EmbeddingCertificate]:
    """Vertex images in general position in R^N (default 2n+1), certified by
    exact pairwise facet checks."""
    complex.validate()
    if N is None:
        N = 2 * complex.n + 1
    verts = complex.vertices
    init = _moment_curve(len(verts), N)
    constraints = None
    if len(verts) > GUARD:
        pos = {v: i for i, v in enumerate(verts)}
        facets = [tuple(pos[v] for v in s) for s in complex.facets]
        constraints = {tuple(sorted(set(a) | set(b))) for a, b in combinations(facets, 2)} | set(facets)
    pts = perturb_to_general_position(init, 1.0, seed=seed, constraints=constraints)
    m = PLMap(complex, N, {v: pts.array[i] for i, v in enumerate(verts)})
    cert = verify_embedding(m, samples, space)
    cert.extra = {"seed": seed, "method": "pl"}
    return m, cert


def _edge_polylines(samples: SampleSet, values: np.ndarray) -> list[list[int]]:
    """Sample ids along each closed edge, in order from its first vertex."""
    lines = []
    for a, b in samples.complex.of_dim(1):
        inner = [i for i, c in enumerate(samples.carriers) if c == (a, b)]
        inner.sort(key=lambda i: -samples.numerators[i][0])
        lines.append([samples.vertex_sample(a)] + inner + [samples.vertex_sample(b)])
    return lines


def to_obj(m, samples: SampleSet | None = None) -> str:
    """Wavefront OBJ of the first three image coordinates (complexes of dimension <= 2)."""
    cx = m.complex if isinstance(m, PLMap) else m.samples.complex
    if cx.n > 2:
        raise ValueError("OBJ export needs dimension <= 2")
    lines = ["# coverembed export"]

    def vline(p):
        q = list(p[:3]) + [0.0] * max(0, 3 - len(p))
        return "v " + " ".join(f"{c:.12g}" for c in q)

    if isinstance(m, PLMap):
        index = {v: i + 1 for i, v in enumerate(cx.vertices)}
        lines += [vline(m.vertex_images[v]) for v in cx.vertices]
        for s in cx.facets:
            tag = "f" if len(s) == 3 else "l" if len(s) == 2 else "p"
            lines.append(tag + " " + " ".join(str(index[v]) for v in s))
    else:
        lines += [vline(p) for p in m.values]
        for pl in _edge_polylines(m.samples, m.values):
            lines.append("l " + " ".join(str(i + 1) for i in pl))
    return "\n".join(lines) + "\n"


def to_svg(m, size: int = 400) -> str:
    """SVG of the first two image coordinates (complexes of dimension <= 1)."""
    cx = m.complex if isinstance(m, PLMap) else m.samples.complex
    if cx.n > 1:
        raise ValueError("SVG export needs dimension <= 1")
    if isinstance(m, PLMap):
        pts = np.array([m.vertex_images[v] for v in cx.vertices])
        index = {v: i for i, v in enumerate(cx.vertices)}
        polys = [[index[a], index[b]] for a, b in cx.of_dim(1)]
    else:
        pts = np.asarray(m.values)
        polys = _edge_polylines(m.samples, pts)
    xy = np.zeros((len(pts), 2))
    xy[:, : min(2, pts.shape[1])] = pts[:, :2]
    lo, hi = xy.min(axis=0), xy.max(axis=0)
    scale = (size - 20) / max(float((hi - lo).max()), 1e-12)
    px = (xy - lo) * scale + 10
    px[:, 1] = size - px[:, 1]
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">']
    for pl in polys:
        coords = " ".join(f"{px[i, 0]:.3f},{px[i, 1]:.3f}" for i in pl)
        out.append(f'<polyline points="{coords}" fill="none" stroke="black" stroke-width="1"/>')
    for x, y in px:
        out.append(f'<circle cx="{x:.3f}" cy="{y:.3f}" r="2"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
