import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BARRIER_M2, M1, M2, S2, random_trig
from zigzag_ek.errors import GridTooCoarse, H01Violated, MorseViolation, TieBreakNeeded
from zigzag_ek.landscape import (
    FICTIVE_SADDLE,
    brute_force_labels,
    check_h2,
    label_minima,
)
from zigzag_ek.potential import CANONICAL_V, TorusPotential, find_critical_points


def circ(a, b):
    d = abs(a - b) % 1.0
    return min(d, 1 - d)


def same_landscape(a, b, loc_tol=1e-4, s_tol=1e-6):
    assert a.n0 == b.n0
    for x, y in zip(a.minima, b.minima):
        assert x.rank == y.rank
        assert circ(x.point.location, y.point.location) < loc_tol
        if math.isinf(x.barrier):
            assert math.isinf(y.barrier)
        else:
            assert x.barrier == pytest.approx(y.barrier, abs=s_tol)
        assert len(x.saddle_set) == len(y.saddle_set)
        for s, t in zip(x.saddle_set, y.saddle_set):
            assert circ(s.location, t.location) < loc_tol


def test_single_well():
    land = label_minima(TorusPotential(cos=(0.0, 1.0)))
    assert land.n0 == 1
    m = land.minimum(1)
    assert m.rank == 1 and math.isinf(m.barrier) and m.saddle_set == ()
    assert m.saddles == (FICTIVE_SADDLE,)
    assert land.h2_report.holds


def test_canonical_labels(canonical_landscape):
    land = canonical_landscape
    assert land.n0 == 2
    m1, m2 = land.minima
    assert m1.point.location == pytest.approx(M1[0], abs=1e-11)
    assert m2.point.location == pytest.approx(M2[0], abs=1e-11)
    assert [s.location for s in m2.saddle_set] == pytest.approx([S2[0]], abs=1e-11)
    assert m2.barrier == pytest.approx(BARRIER_M2, abs=1e-13)
    assert m2.sigma == pytest.approx(S2[1], abs=1e-13)
    assert land.s_max.location == pytest.approx(0.011514127338409377, abs=1e-11)
    assert all(s is not land.s_max for m in land.minima for s in m.saddle_set)
    assert land.h2_report.holds


def test_component_of_second_minimum(canonical_landscape):
    arc = canonical_landscape.minimum(2).component[0]
    assert arc.contains(M2[0])
    assert not arc.contains(M1[0])
    # the arc ends at s2 on one side and at a transversal crossing of V = V(s2) on the other
    assert min(circ(arc.start, S2[0]), circ(arc.end, S2[0])) < 1e-12
    other = arc.start if circ(arc.end, S2[0]) < 1e-12 else arc.end
    assert CANONICAL_V(other) == pytest.approx(S2[1], abs=1e-12)


def test_translation_equivariance(canonical_landscape):
    moved = label_minima(CANONICAL_V.shifted(0.3))
    for a, b in zip(canonical_landscape.minima, moved.minima):
        assert a.rank == b.rank
        assert circ(a.point.location + 0.3, b.point.location) < 1e-10
        assert a.barrier == pytest.approx(b.barrier, abs=1e-12) or math.isinf(a.barrier)
        assert a.sigma == pytest.approx(b.sigma, abs=1e-12) or math.isinf(a.sigma)
        arc_a, arc_b = a.component[0], b.component[0]
        if not arc_a.full:
            assert circ(arc_a.start + 0.3, arc_b.start) < 1e-10
            assert arc_a.length == pytest.approx(arc_b.length, abs=1e-10)


def test_additive_constant(canonical_landscape):
    lifted = label_minima(CANONICAL_V + 3.0)
    same_landscape(canonical_landscape, lifted, loc_tol=1e-12, s_tol=1e-12)


def test_symmetric_well_violates_h01():
    V = TorusPotential(cos=(0.0, 0.0, 1.0))
    with pytest.raises(H01Violated):
        label_minima(V)
    with pytest.raises(H01Violated):
        brute_force_labels(V)
    land = label_minima(V, strict=False)
    assert not land.h2_report.h01
    assert not check_h2(land).h01


def test_equal_minima_tie_break():
    # symmetric under x -> 1/2 - x: unique maximum, two minima of equal value
    V = TorusPotential(cos=(0.0, 0.0, -1.0), sin=(0.3,))
    with pytest.warns(TieBreakNeeded):
        land = label_minima(V)
    assert not land.h2_report.unique_minima
    assert land.h2_report.tie_breaks
    locs = sorted(c.location for c in find_critical_points(V) if c.is_minimum)
    assert land.minimum(1).point.location == pytest.approx(locs[0])


def test_three_wells_nested():
    # three minima at different depths; the shallowest is labeled at the lowest saddle level
    V = TorusPotential(cos=(0.0, 0.0, 0.0, 1.0), sin=(0.2, 0.1))
    land = label_minima(V)
    assert land.n0 == 3
    same_landscape(land, brute_force_labels(V))
    finite = [m.barrier for m in land.minima[1:]]
    assert finite == sorted(finite, reverse=True)
    assert land.minimum(1).point.value == min(m.point.value for m in land.minima)


def test_oracle_grid_floor():
    with pytest.raises(ValueError):
        brute_force_labels(CANONICAL_V, grid_size=1000)


def test_oracle_agrees_on_canonical(canonical_landscape):
    same_landscape(canonical_landscape, brute_force_labels(CANONICAL_V), s_tol=1e-9)


def test_oracle_single_well():
    V = TorusPotential(cos=(0.0, 1.0))
    same_landscape(label_minima(V), brute_force_labels(V))


@pytest.mark.parametrize(
    "V, error",
    [
        (TorusPotential.constant(1.0), MorseViolation),
        (TorusPotential(cos=(0.0, 1.0, 0.25)), MorseViolation),
        (TorusPotential(cos=(0.0,), sin=(1 / (4 * math.pi), -1 / (8 * math.pi))), MorseViolation),
        (TorusPotential(cos=(0.0, 0.0, 1.0)), H01Violated),
        (TorusPotential(cos=(0.0, 0.0, 0.0, 1.0)), H01Violated),
    ],
)
def test_identical_rejections(V, error):
    def verdict(fn):
        try:
            fn(V)
        except (MorseViolation, GridTooCoarse, H01Violated) as exc:
            return type(exc)
        return None

    def exact(p):
        return label_minima(p, find_critical_points(p))

    assert verdict(exact) is error
    assert verdict(brute_force_labels) is error


def mountain_pass(V, m, grid=20_000):
    """Lowest pass from m to a strictly lower point, by walking both ways on a grid."""
    x = (m.point.location + np.arange(1, grid) / grid) % 1.0
    vals = V(x)
    best = math.inf
    for seq in (vals, vals[::-1]):
        lower = np.nonzero(seq < m.point.value)[0]
        if lower.size:
            best = min(best, float(np.max(seq[: lower[0] + 1])))
    return best


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_random_potentials_match_oracle(seed, degree):
    V = random_trig(np.random.default_rng(seed), degree)
    try:
        land = label_minima(V)
    except (MorseViolation, GridTooCoarse, H01Violated):
        return
    same_landscape(land, brute_force_labels(V))
    globals_ = [m for m in land.minima if math.isinf(m.barrier)]
    assert len(globals_) == 1 and globals_[0].rank == 1
    for m in land.minima[1:]:
        # grid walk resolves the pass height only to O(grid^-2)
        assert mountain_pass(V, m) == pytest.approx(m.sigma, abs=1e-5)
