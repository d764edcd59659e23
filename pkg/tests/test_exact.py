import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from csflab.exact import (
    AngenentOval,
    ExactSolutionSpec,
    OracleError,
    ShrinkingCircle,
    csf_residual,
    grim_reaper,
    half_width,
    reaper_gcsf_residual,
    reaper_y,
    solve_peak_curvature,
    wedge_profile,
)
from csflab.functionals import swept_area_prefix


def test_spec_validation():
    with pytest.raises(OracleError):
        ExactSolutionSpec("oval", a=1.0, t=1.0)
    with pytest.raises(OracleError):
        ExactSolutionSpec("wedge", beta=math.pi)
    with pytest.raises(OracleError):
        ExactSolutionSpec("circle", R=1.0, t=0.6)
    with pytest.raises(OracleError):
        ExactSolutionSpec("blob")


def test_oval_samples_lie_on_the_zero_set():
    ov = AngenentOval(5.0)
    c = ov.curve(3.0, 400)
    assert np.max(np.abs(ov.F(c.points, 3.0))) < 1e-12
    assert swept_area_prefix(c).total < 0  # anticlockwise
    # the enclosed area decreases at rate 2 pi
    a0 = -swept_area_prefix(ov.curve(3.0, 4000)).total
    a1 = -swept_area_prefix(ov.curve(3.1, 4000)).total
    assert (a0 - a1) / 0.1 == pytest.approx(2 * math.pi, rel=1e-4)


@pytest.mark.parametrize("sol", [AngenentOval(5.0), ShrinkingCircle(1.5)], ids=["oval", "circle"])
def test_residual_harness_converges(sol):
    t = 3.0 if isinstance(sol, AngenentOval) else 0.2
    r1 = csf_residual(sol, t, 200, 1e-6)
    r2 = csf_residual(sol, t, 400, 1e-6)
    assert r2 < r1 / 3 or r2 < 1e-4
    assert r2 < 1e-3


def test_static_line_residual_is_zero():
    assert csf_residual("line", 0.0, 101, 1e-3) < 1e-12


def test_grim_reaper_samples_and_residual():
    x, y = grim_reaper(0.5, 8.0, 100)
    assert np.all(x > 0.5)
    assert reaper_y(0.5 + math.log(2), 0.5) == pytest.approx(math.pi / 6)
    with pytest.raises(OracleError):
        reaper_y(0.2, 0.5)
    r1 = reaper_gcsf_residual(0.0, 1.0, 6.0, 200)
    r2 = reaper_gcsf_residual(0.0, 1.0, 6.0, 400)
    assert r1 / r2 == pytest.approx(4.0, rel=0.1)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.2, 3.0))
def test_peak_curvature_solves_the_half_width(beta):
    K = solve_peak_curvature(beta)
    assert half_width(K) == pytest.approx((math.pi - beta) / 2, abs=1e-10)


@pytest.mark.parametrize("beta", [math.pi / 4, math.pi / 2, 3 * math.pi / 4])
def test_wedge_profile_identities(beta):
    p = wedge_profile(beta)
    errs = p.identity_errors()
    assert errs["total_V"] < 1e-3
    assert errs["V_minus_Psi"] < 1e-3
    assert errs["kappa_minus_half_D"] < 1e-3
    assert p.psis[0] == pytest.approx(0.0, abs=1e-6)
    assert p.psis[-1] == pytest.approx(p.alpha, abs=1e-6)
    assert np.all(np.diff(p.psis) >= 0)  # the log-spaced tails saturate in double precision
    assert p.kappa_at(p.alpha / 2) == pytest.approx(p.kappa_max, rel=1e-6)


def test_wedge_profile_is_symmetric():
    p = wedge_profile(math.pi / 2)
    assert np.max(np.abs(p.kappa_beta - p.kappa_beta[::-1])) < 1e-12


def test_wedge_profile_rejects_bad_beta():
    with pytest.raises(OracleError):
        wedge_profile(0.0)
    with pytest.raises(OracleError):
        wedge_profile(math.pi)
