import json
import math
from fractions import Fraction
from itertools import chain, combinations, product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from coverembed.complexes import path, segment, torus7, vertex
from coverembed.covers import (
    Cover,
    CoverError,
    CubeCoverSpec,
    RefinerContractError,
    cube_cells_at,
    cube_cover,
    cube_set_diameters,
    dimension_upper_bound,
    dump_cover,
    lebesgue_number,
    load_cover,
    merge_refinements,
    order,
    order_in,
    refines,
    staged_cover,
    star_cover,
    star_refiner,
)
from coverembed.space import Exhaustion, build_exhaustion, realize_metric, sup_metric


def interval_samples(pitch_den=100):
    xs = [Fraction(i, pitch_den) for i in range(pitch_den + 1)]
    space = sup_metric(np.array([[float(x)] for x in xs]))
    return xs, space


@st.composite
def covers(draw, max_ground=12, max_sets=6):
    g = draw(st.integers(1, max_ground))
    sets = draw(st.lists(st.sets(st.integers(0, g - 1), min_size=1), min_size=1, max_size=max_sets))
    missing = set(range(g)) - set().union(*sets)
    if missing:
        sets.append(missing)
    return Cover.of(sets, range(g))


# order ------------------------------------------------------------------------


def test_order_examples():
    xs, _ = interval_samples()
    ids = range(len(xs))
    u = Cover.of([[i for i in ids if xs[i] < 1], [i for i in ids if xs[i] > 0]], ids)
    assert order(u) == 1
    assert order(Cover.of([ids], ids)) == 0
    assert order(Cover.of([{0}, {1}, {2}])) == 0


def test_order_in():
    c = Cover.of([{0, 1}, {1, 2}, {1, 3}, {3}])
    assert order(c) == 2
    assert order_in(c, {0, 2, 3}) == 1
    assert order_in(c, set()) is None
    assert order_in(c, c.ground) == order(c)
    with pytest.raises(CoverError):
        order_in(c, {7})


def test_cover_invariants():
    with pytest.raises(CoverError):
        Cover(frozenset({0, 1}), (frozenset({0}),))
    with pytest.raises(CoverError):
        Cover(frozenset({0}), (frozenset({0}), frozenset()))
    with pytest.raises(CoverError):
        Cover(frozenset({0}), (frozenset({0, 5}),))


@given(covers())
def test_order_is_max_count_minus_one(c):
    brute = max(sum(x in s for s in set(c.sets)) for x in c.ground) - 1
    assert order(c) == brute


@given(covers(), st.data())
def test_restriction_does_not_raise_order(c, data):
    region = data.draw(st.sets(st.sampled_from(sorted(c.ground)), min_size=1))
    assert order(c.restrict(region)) <= order(c)


# refines ----------------------------------------------------------------------


def test_refines_examples():
    u = Cover.of([{0, 1}, {1, 2}])
    r = refines(u, u)
    assert r.ok and r.witness == (0, 1)
    singles = Cover.of([{0}, {1}, {2}])
    assert refines(singles, u).ok
    assert refines(singles, u).witness == (0, 0, 1)
    straddle = Cover.of([{0, 2}, {1}])
    r = refines(straddle, u)
    assert not r.ok and r.witness == (None, 0)
    with pytest.raises(CoverError):
        refines(Cover.of([{0}]), u)


# Lebesgue number --------------------------------------------------------------


def test_lebesgue_examples():
    sp = sup_metric(np.array([[0.0], [1.0]]))
    assert lebesgue_number(Cover.of([{0}, {1}]), sp) == 1
    assert lebesgue_number(Cover.of([{0, 1}]), sp) == 2  # diam + 1 cap
    xs, space = interval_samples()
    ids = range(len(xs))
    u = Cover.of([[i for i in ids if xs[i] < 1], [i for i in ids if xs[i] > 0]], ids)
    assert abs(lebesgue_number(u, space) - 0.5) <= 0.01
    with pytest.raises(CoverError):
        lebesgue_number(Cover.of([{0}]), sp)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 10), st.integers(0, 10_000), st.integers(1, 5))
def test_lebesgue_guarantee_exhaustive(n, seed, k):
    rng = np.random.default_rng(seed)
    sp = sup_metric(rng.uniform(size=(n, 2)))
    sets = [set(np.nonzero(rng.random(n) < 0.5)[0].tolist()) for _ in range(k)]
    sets = [s for s in sets if s]
    missing = set(range(n)) - set().union(*sets) if sets else set(range(n))
    if missing:
        sets.append(missing)
    c = Cover.of(sets, range(n))
    lam = lebesgue_number(c, sp)
    for size in range(1, n + 1):
        for sub in combinations(range(n), size):
            if sp.diameter(sub) < lam:
                assert any(set(sub) <= s for s in c.sets)


# cube cover -------------------------------------------------------------------


def _delta(x):
    return min(x - math.floor(x), math.ceil(x) - x)


def _brute_cells(y, probe=Fraction(1, 40)):
    """Cells C whose neighbourhood contains y, by searching points x' of C on a
    probe grid: x' in U(C)'s generating set and |y - x'| < eps(x')/2."""
    n = len(y)
    found = {}
    lo = [math.floor(v) - 1 for v in y]
    steps = int(1 / probe)
    for types in product("KJ", repeat=n):
        d = types.count("J")
        for base in product(*[range(l, l + 3) for l in lo]):
            # x' ranges over C: integer coordinates on K axes, probe points inside J intervals
            axes = []
            for t, k in zip(types, base):
                axes.append([Fraction(k)] if t == "K" else [k + i * probe for i in range(1, steps)])
            hit = False
            for xp in product(*axes):
                nonint = [_delta(v) for v, t in zip(xp, types) if t == "J"]
                eps = min([Fraction(1, 2)] + nonint)
                if max(abs(a - b) for a, b in zip(y, xp)) < eps / 2:
                    hit = True
                    break
            if hit:
                cell = tuple((t, k) for t, k in zip(types, base))
                assert d not in found, "two cells of one stratum contain the same point"
                found[d] = cell
    return found


@pytest.mark.parametrize("n", [1, 2])
def test_cube_membership_matches_brute_force(n):
    grid = [Fraction(i, 10) for i in range(0, 21)]
    pts = list(product(grid, repeat=n)) if n == 1 else [p for p in product(grid, repeat=2) if p[0] <= 1 or p[1] <= 1][::7]
    for y in pts:
        assert cube_cells_at(y) == _brute_cells(y), y


def test_cube_cover_orders_and_diameters():
    spec = CubeCoverSpec(1, 3, [(-2, 2)], 0.1)
    c = cube_cover(spec)
    assert order(c) == 1
    assert max(cube_set_diameters(spec, c)) <= Fraction(3, 2)
    spec2 = CubeCoverSpec(2, 3, [(0, 2)] * 2, 0.1)
    assert order(cube_cover(spec2)) == 2


def test_cube_same_stratum_disjoint():
    spec = CubeCoverSpec(2, 3, [(-1, 1)] * 2, 0.1)
    c = cube_cover(spec)
    strata = {}
    for lab, s in zip(c.labels, c.sets):
        strata.setdefault(lab.count("("), []).append(s)
    for sets in strata.values():
        for a, b in combinations(sets, 2):
            assert not a & b


def test_cube_spec_errors():
    with pytest.raises(CoverError):
        CubeCoverSpec(1, 3, [(-2, 2)], 0.2)
    with pytest.raises(CoverError):
        CubeCoverSpec(1, 3, [(2, -2)], 0.1)
    CubeCoverSpec(1, 2.4, [(0, 1)], 0.1)  # pitch exactly lambda/24 is allowed


def test_cube_diameters_are_exact_against_grid_points():
    spec = CubeCoverSpec(2, 3, [(-1, 1)] * 2, 0.1)
    c = cube_cover(spec)
    for s, dm in zip(c.sets, cube_set_diameters(spec, c)):
        pts = [spec.grid_point(i) for i in s]
        brute = max((max(abs(a - b) for a, b in zip(p, q)) for p in pts for q in pts), default=0)
        assert brute == dm


# merge ------------------------------------------------------------------------


def test_merge_identity():
    a = Cover.of([{0, 1}, {1, 2}, {2, 3}])
    m = merge_refinements(a, a, {0, 1}, {2, 3})
    assert set(m.sets) == set(a.sets)


def test_merge_interval_halves():
    xs, _ = interval_samples(20)
    ids = list(range(len(xs)))
    left = [i for i in ids if xs[i] <= Fraction(1, 2)]
    right = [i for i in ids if xs[i] >= Fraction(1, 2)]
    a1 = Cover.of([[i for i in ids if xs[i] < Fraction(3, 5)], [i for i in ids if xs[i] > Fraction(2, 5)]], ids)
    pieces = [[i for i in ids if Fraction(k, 10) <= xs[i] <= Fraction(k + 1, 10)] for k in range(10)]
    a2 = Cover.of(pieces, ids)
    assert refines(a2, a1).ok
    assert order_in(a1, left) <= 1 and order_in(a2, right) <= 1
    m = merge_refinements(a1, a2, left, right)
    assert refines(m, a1).ok and order(m) <= 1


def test_merge_rejects_non_refinement():
    a1 = Cover.of([{0, 1}, {2}])
    a2 = Cover.of([{0}, {1, 2}])
    with pytest.raises(CoverError):
        merge_refinements(a1, a2, {0, 1}, {2})
    with pytest.raises(CoverError):
        merge_refinements(a1, a1, {0}, {1})


@settings(max_examples=100, deadline=None)
@given(covers(max_ground=15, max_sets=5), st.data())
def test_merge_order_bound(a1, data):
    # a2: every a1 set split into random pieces
    pieces = []
    for s in a1.sets:
        labels = data.draw(st.lists(st.integers(0, 2), min_size=len(s), max_size=len(s)))
        for lab in set(labels):
            pieces.append({x for x, l in zip(sorted(s), labels) if l == lab})
    a2 = Cover.of(pieces, a1.ground)
    x1 = data.draw(st.sets(st.sampled_from(sorted(a1.ground))))
    x2 = set(a1.ground) - x1
    m = merge_refinements(a1, a2, x1, x2)
    bound = max(order_in(a1, x1) if x1 else -1, order_in(a2, x2) if x2 else -1)
    assert refines(m, a1).ok
    assert order(m) <= bound


# staged -----------------------------------------------------------------------


def _gap(space, ex):
    gaps = [
        float(space.dist[np.ix_(space.index(ex.stage(i - 1)), space.index(ex.ground - ex.stage(i)))].min())
        for i in range(1, len(ex))
        if ex.stage(i - 1) and ex.ground - ex.stage(i)
    ]
    return min(gaps, default=math.inf)


def test_staged_single_stage():
    samples, space = realize_metric(path(2), mesh=0.25)
    ex = Exhaustion((frozenset(samples.ids),))
    u = Cover.of([samples.ids], samples.ids)
    v = staged_cover(u, ex, star_refiner(samples, space), 1)
    assert order(v) <= 1 and refines(v, u).ok


def test_staged_three_stage_interval():
    samples, space = realize_metric(path(3), mesh=0.25)
    ex = build_exhaustion(space, 3)
    u = star_cover(samples, 0)
    v = staged_cover(u, ex, star_refiner(samples, space, scale=_gap(space, ex)), 1)
    assert order(v) <= 1 and refines(v, u).ok


def test_staged_rejects_order_violation_at_stage():
    samples, space = realize_metric(path(3), mesh=0.25)
    ex = build_exhaustion(space, 3)
    u = Cover.of([samples.ids], samples.ids)
    with pytest.raises(RefinerContractError) as info:
        staged_cover(u, ex, star_refiner(samples, space), 0)
    assert info.value.stage == 1


def test_staged_rejects_non_refinement():
    samples, space = realize_metric(path(2), mesh=0.25)
    ex = build_exhaustion(space, 2)
    u = star_cover(samples, 2)

    def lazy(cover, region, d):
        return Cover.of([cover.ground], cover.ground)

    with pytest.raises(RefinerContractError):
        staged_cover(u, ex, lazy, 1)


def test_staged_reports_leaking_kept_sets():
    samples, space = realize_metric(path(3), mesh=0.25)
    ex = build_exhaustion(space, 4)
    u = star_cover(samples, 0)
    # sets much larger than the stage gaps: kept sets reach past C_i
    try:
        v = staged_cover(u, ex, star_refiner(samples, space), 1)
    except CoverError as exc:
        assert "reach past" in str(exc) or isinstance(exc, RefinerContractError)
    else:
        assert order(v) <= 1


# dimension bound ----------------------------------------------------------------


def test_dimension_bound_examples():
    s, _ = realize_metric(segment(), mesh=0.1)
    assert dimension_upper_bound(segment(), s, 2) == 1
    # samples that all sit on subdivision vertices see no overlaps
    s, _ = realize_metric(segment(), mesh=0.25)
    assert dimension_upper_bound(segment(), s, 2) == 0
    s, _ = realize_metric(torus7(), mesh=0.1)
    assert dimension_upper_bound(torus7(), s, 1) == 2
    s, _ = realize_metric(vertex())
    assert dimension_upper_bound(vertex(), s, 1) == 0
    with pytest.raises(ValueError):
        dimension_upper_bound(segment(), s, -1)


def test_star_cover_is_a_cover_with_order_at_most_n():
    s, _ = realize_metric(torus7(), mesh=0.25)
    for r in range(3):
        c = star_cover(s, r)
        assert c.ground == frozenset(s.ids)
        assert order(c) <= 2


# IO ---------------------------------------------------------------------------


def test_cover_json_roundtrip(tmp_path):
    c = Cover.of([{(0, 1), (1, 1)}, {(1, 1)}], labels=["a", "b"])
    p = tmp_path / "c.json"
    dump_cover(c, p)
    back = load_cover(p)
    assert back.sets == c.sets and back.labels == c.labels
    with pytest.raises(ValueError):
        load_cover({"ground": [0]})
