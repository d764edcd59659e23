import math

import numpy as np
import pytest

from csflab.curve import InitialCurveSpec, build_initial_curve, circle_curve
from csflab.exact import static_line
from csflab.flow import FlowConfig, FlowTrace, make_snapshot, run
from csflab.io import report_payload
from csflab.verify import (
    CHECKS,
    SlackModel,
    check_area_control,
    check_end_decay,
    check_extremal_turning,
    check_graphicality,
    check_hamilton,
    check_harnack_bounds,
    check_heat_residuals,
    check_polar_harnack,
    check_total_area_law,
    check_turning_bounds,
    convergence_order,
    run_checks,
    symmetric,
    thread_count,
)

from .conftest import CORPUS, corpus_spec


def _spliced(name_start: str, name_later: str, t: float = 1.0) -> FlowTrace:
    """A fake trace whose later snapshot is an unrelated curve, to provoke failures."""
    a = build_initial_curve(corpus_spec(name_start, 601))
    b = build_initial_curve(corpus_spec(name_later, 601))
    cfg = FlowConfig(dt=1e-3, n_nodes=601, t_end=t)
    return FlowTrace([make_snapshot(0.0, a), make_snapshot(t, b)], cfg)


def _line_trace():
    c = static_line(-math.pi / 4, 201)
    return run(c, FlowConfig(dt=1e-3, n_nodes=201, t_end=0.5, record_times=(0.25,)))


@pytest.mark.parametrize("name", sorted(CORPUS))
def test_corpus_checks_never_fail(traces, name):
    reports = run_checks(traces(name, 601))
    assert [r.check_id for r in reports] == list(CHECKS)
    for r in reports:
        assert r.status in ("pass", "inconclusive"), (r.check_id, r.max_violation, r.tolerance, r.notes)
    report_payload(reports)  # schema: a positive violation always carries a witness


def test_expected_inconclusive_preconditions(traces):
    by = {r.check_id: r for r in run_checks(traces("spiral", 601))}
    assert by["polar_harnack"].status == "inconclusive"
    assert by["hamilton"].status == "inconclusive"
    assert by["hamilton"].witness is not None
    by = {r.check_id: r for r in run_checks(traces("bent_line", 601))}
    assert by["hamilton"].status == "pass"
    assert by["polar_harnack"].status == "pass"


def test_spliced_trace_fails_area_checks():
    tr = _spliced("wedge", "spiral")
    for check in (check_harnack_bounds, check_area_control):
        rep = check(tr)
        assert rep.status == "fail"
        assert rep.max_violation > rep.tolerance
        assert rep.witness is not None and "t" in rep.witness


def test_turning_bounds_fail_on_foreign_turning():
    tr = _spliced("bent_line", "spiral")
    rep = check_turning_bounds(tr)
    assert rep.status == "fail"


def test_total_area_law_rejects_a_frozen_curve():
    c = build_initial_curve(corpus_spec("bent_line", 301))
    cfg = FlowConfig(dt=1e-3, n_nodes=301, t_end=1.0)
    tr = FlowTrace([make_snapshot(t, c) for t in (0.0, 0.5, 1.0)], cfg)
    rep = check_total_area_law(tr)
    assert rep.status == "fail"
    assert rep.max_violation == pytest.approx(1.0)


def test_extremal_turning_on_a_single_snapshot(traces):
    tr = traces("spiral", 601)
    rep = check_extremal_turning(tr.snapshots[-1])
    assert rep.status == "pass"
    assert check_extremal_turning(tr).status == "pass"


def test_static_line_conventions():
    tr = _line_trace()
    assert check_graphicality(tr).status == "pass"
    assert "convention" in check_graphicality(tr).notes
    assert check_end_decay(tr).status == "pass"
    assert check_harnack_bounds(tr).status == "pass"


def test_closed_curves_are_inconclusive_for_radial_checks():
    c = circle_curve(1.0, 200)
    tr = run(c, FlowConfig(dt=1e-3, n_nodes=200, t_end=0.2))
    by = {r.check_id: r for r in run_checks(tr, ["graphicality", "end_decay", "polar_harnack", "hamilton"])}
    assert all(r.status == "inconclusive" for r in by.values())


def test_hamilton_needs_convex_initial_data(traces):
    rep = check_hamilton(traces("zigzag", 601))
    assert rep.status == "inconclusive"
    assert "convex" in rep.notes


def test_polar_harnack_accepts_the_wedge(traces):
    rep = check_polar_harnack(traces("wedge", 601))
    assert rep.status == "pass"


def test_tolerance_overrides():
    tr = _spliced("wedge", "spiral")
    strict, loose = run_checks(tr, ["harnack_bounds"])[0], run_checks(tr, ["harnack_bounds"], {"harnack_bounds": 1e6})[0]
    assert strict.status == "fail"
    assert loose.status == "pass" and loose.tolerance == 1e6
    with pytest.raises(KeyError):
        run_checks(tr, ["nope"])


def test_reports_are_deterministic_across_threads(traces, monkeypatch):
    tr = traces("bent_line", 601)
    monkeypatch.setenv("CSF_THREADS", "1")
    a = [r.to_dict() for r in run_checks(tr)]
    monkeypatch.setenv("CSF_THREADS", "4")
    assert thread_count() == 4
    b = [r.to_dict() for r in run_checks(tr)]
    assert a == b
    monkeypatch.setenv("CSF_THREADS", "many")
    assert thread_count() == 1


def test_symmetric_frame_is_checked_rotation(traces):
    snap = symmetric(traces("zigzag", 601).snapshots[-1])
    p0 = snap.curve.points[0]
    assert math.atan2(p0[1], p0[0]) == pytest.approx(3 * math.pi / 4)


def test_slack_model_is_linear():
    m = SlackModel()
    assert m.disc(0.1, 0.0, 0.0) == pytest.approx(20 * 0.01)
    assert m.disc(0.0, 1e-3, 1e-4) == pytest.approx(20e-3 + 10e-4)


def test_heat_residuals_need_three_levels():
    rep = check_heat_residuals([])
    assert rep.status == "inconclusive"


def test_convergence_order_of_a_power_law():
    hs = np.array([0.1, 0.05, 0.025])
    assert convergence_order(hs, 3 * hs ** 2) == pytest.approx(2.0)


def test_end_decay_on_a_radial_start():
    c = build_initial_curve(InitialCurveSpec("bent_line", n=401, params={"round_radius": 0.5}))
    tr = run(c, FlowConfig(dt=2e-3, n_nodes=401, t_end=1.0, record_times=(0.5,)))
    rep = check_end_decay(tr)
    assert rep.status == "pass"
