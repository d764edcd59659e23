import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from csflab.curve import InitialCurveSpec, PlanarCurve, build_initial_curve, circle_curve, tangent_lift
from csflab.exact import static_line, wedge_flow_curve, wedge_profile
from csflab.functionals import (
    PolarFailure,
    PolarGraphView,
    brute_force_extrema,
    extrema_bounds,
    harnack,
    harnack_extrema,
    pair_grid,
    polar_view,
    prefix_extrema,
    support_function,
    swept_area_prefix,
    turning,
    winding_identity_check,
    winding_trace,
)

from .conftest import CORPUS, corpus_spec

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def overturning_arc(m: int = 4000) -> PlanarCurve:
    """From i straight up, bulging right to 2i (arriving leftward), then straight to -1 + 2i."""
    s = np.linspace(0, 1, m)
    p0, p1, p2, p3 = (np.array(p) for p in ([0.0, 1.1], [0.0, 1.6], [0.5, 2.0], [0.0, 2.0]))
    bez = (((1 - s) ** 3)[:, None] * p0 + (3 * (1 - s) ** 2 * s)[:, None] * p1
           + (3 * (1 - s) * s * s)[:, None] * p2 + (s ** 3)[:, None] * p3)
    stem = np.column_stack([np.zeros(50), np.linspace(1.0, 1.1, 50, endpoint=False)])
    top = np.column_stack([np.linspace(0.0, -1.0, 400)[1:], np.full(399, 2.0)])
    pts = np.vstack([stem, bez, top])
    return PlanarCurve(pts, np.arange(len(pts), dtype=float))


def test_unit_circle_swept_area():
    c = circle_curve(1.0, 2000)
    assert swept_area_prefix(c).total == pytest.approx(-math.pi, rel=1e-5)


def test_static_line_has_zero_area_and_turning():
    c = static_line(0.7, 101)
    S = swept_area_prefix(c).S
    assert np.max(np.abs(S)) < 1e-12
    lift = tangent_lift(c)
    assert np.max(np.abs(turning(lift, 0, np.arange(101)))) < 1e-12
    assert np.max(np.abs(support_function(c, lift).D)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(arrays(float, st.integers(1, 60), elements=finite))
def test_prefix_extrema_match_brute_force(values):
    hi, (hv, hw), lo, (lv, lw) = prefix_extrema(values)
    b_lo, b_hi = brute_force_extrema(values)
    assert hi == b_hi and lo == b_lo
    assert hv <= hw and lv <= lw
    assert values[hw] - values[hv] == hi
    assert values[lw] - values[lv] == lo


@settings(max_examples=50, deadline=None)
@given(arrays(float, (30, 2), elements=finite), st.integers(0, 29), st.integers(0, 29), st.integers(0, 29))
def test_swept_area_is_additive(pts, u, v, w):
    pts = pts + np.arange(30)[:, None] * 1e-3  # keep consecutive points distinct
    c = PlanarCurve(pts, np.arange(30.0))
    pre = swept_area_prefix(c)
    u, v, w = sorted((u, v, w))
    assert pre.area(u, v) + pre.area(v, w) == pytest.approx(pre.area(u, w), abs=1e-9)


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_reflect_and_reverse_remap_functionals(name):
    c = build_initial_curve(corpus_spec(name, 301))
    r = c.reflected().reversed()
    S, T = swept_area_prefix(c).S, swept_area_prefix(r).S
    pc, pr = tangent_lift(c).psi, tangent_lift(r).psi
    n = c.n
    v, w = pair_grid(n, side=80)
    assert np.max(np.abs((T[w] - T[v]) - (S[n - 1 - v] - S[n - 1 - w]))) < 1e-12
    assert np.max(np.abs((pr[w] - pr[v]) - (pc[n - 1 - v] - pc[n - 1 - w]))) < 1e-12


def test_reflection_negates_area_and_reversal_keeps_total():
    c = build_initial_curve(InitialCurveSpec("zigzag", n=301))
    total = swept_area_prefix(c).total
    assert swept_area_prefix(c.reflected()).total == pytest.approx(-total)
    assert swept_area_prefix(c.reversed()).total == pytest.approx(-total)


def test_rotation_invariance():
    c = build_initial_curve(InitialCurveSpec("spiral", n=801))
    r = c.rotated(1.234)
    assert np.max(np.abs(swept_area_prefix(c).S - swept_area_prefix(r).S)) < 1e-12
    assert np.max(np.abs(np.diff(tangent_lift(c).psi) - np.diff(tangent_lift(r).psi))) < 1e-12


def test_extrema_bounds_of_spiral_are_symmetric():
    c = build_initial_curve(InitialCurveSpec("spiral", n=2001))
    eb = extrema_bounds(swept_area_prefix(c))
    assert eb.a_plus > 0.4
    assert eb.a_minus == pytest.approx(-eb.a_plus, rel=1e-2)
    assert eb.spread == eb.a_plus - eb.a_minus


def test_turning_requires_ordered_pairs():
    lift = tangent_lift(circle_curve(1.0, 50))
    with pytest.raises(ValueError):
        turning(lift, 5, 3)


def test_harnack_vanishes_on_the_wedge_expander():
    prof = wedge_profile(math.pi / 2)
    pts = wedge_flow_curve(prof, 1.0)
    keep = np.concatenate([[True], np.hypot(*np.diff(pts, axis=0).T) > 1e-9])
    c = PlanarCurve(pts[keep], np.arange(int(keep.sum()), dtype=float))
    pre = swept_area_prefix(c)
    lift = tangent_lift(c)
    hi, _, lo, _ = harnack_extrema(pre, lift, 1.0)
    assert max(abs(hi), abs(lo)) <= 1e-3
    v, w = pair_grid(c.n, side=60)
    assert np.max(np.abs(harnack(pre, lift, 1.0, v, w))) <= 1e-3


def test_pair_grid_contains_ends_and_extras():
    v, w = pair_grid(1000, extra=[(17, 400)], side=50)
    pairs = set(zip(v.tolist(), w.tolist()))
    assert (0, 999) in pairs and (17, 400) in pairs
    assert np.all(v <= w)


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_winding_identity_on_random_subarcs(name):
    c = build_initial_curve(corpus_spec(name, 801))
    lift = tangent_lift(c)
    rng = np.random.default_rng(7)
    for _ in range(40):
        a = int(rng.integers(0, c.n - 2))
        b = int(rng.integers(a + 2, c.n))  # a sub-arc needs three nodes
        assert winding_identity_check(c, int(a), int(b), lift) < 1e-9


def test_winding_trace_starts_at_zero():
    c = build_initial_curve(InitialCurveSpec("bent_line", n=401, params={"round_radius": 0.5}))
    wt = winding_trace(c, 200)
    assert wt.theta[200] == 0.0
    assert np.all(np.abs(np.diff(wt.theta)) < math.pi)


def test_overturning_arc_configuration():
    arc = overturning_arc()
    wt = winding_trace(arc, 0)
    assert wt.theta[-1] == pytest.approx(math.pi / 4, abs=1e-6)
    # the arc first turns clockwise away from its tangent, then back through 0 at 2i
    assert wt.theta[100] < 0
    top = int(np.argmin(np.abs(arc.points[:, 0]) + np.abs(arc.points[:, 1] - 2.0)))
    assert swept_area_prefix(arc).area(0, top) < 0


def test_polar_view_of_polar_graph_and_failure():
    c = build_initial_curve(InitialCurveSpec("bent_line", n=401, params={"round_radius": 0.5}))
    pv = polar_view(c)
    assert isinstance(pv, PolarGraphView)
    assert pv.phis[0] == pytest.approx(0.0, abs=1e-12)
    assert pv.phis[-1] == pytest.approx(math.pi / 2, abs=1e-12)
    assert pv.area(0, c.n - 1) == pytest.approx(pv.V[-1])
    bad = polar_view(build_initial_curve(InitialCurveSpec("spiral", n=801)))
    assert isinstance(bad, PolarFailure)


def test_polar_area_matches_swept_area_for_polar_graphs():
    # with phi = pi - theta both integrands are -r^2 dtheta / 2; only the quadratures differ
    c = build_initial_curve(InitialCurveSpec("bent_line", n=2001, params={"round_radius": 0.5}))
    pv = polar_view(c)
    S = swept_area_prefix(c).S
    assert np.max(np.abs(S - pv.V)) < 1e-4


def test_winding_limits_agree_on_smooth_curves_and_not_at_corners():
    smooth = build_initial_curve(InitialCurveSpec("bent_line", n=801, params={"round_radius": 0.5}))
    mid = int(np.argmin(np.hypot(*smooth.points.T)))
    assert winding_trace(smooth, mid).limit_gap < 1e-4
    wedge = build_initial_curve(InitialCurveSpec("wedge", n=801))
    corner = int(np.argmin(np.hypot(*wedge.points.T)))
    assert winding_trace(wedge, corner).limit_gap > 0.5
    assert math.isnan(winding_trace(smooth, 0).limit_gap)
