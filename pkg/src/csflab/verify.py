"""Numerical certification of the Harnack-type estimates on flow traces.

Each ``check_*`` function is a pure function of a :class:`FlowTrace` and
returns a :class:`CheckReport`. Bounds over node pairs ``v <= w`` whose
checked quantity is a difference ``g[w] - g[v]`` of a nodal function are
evaluated exactly over all pairs with the prefix-extrema scan, which
covers every pair of the strided grid.

Tolerances follow one slack model, ``c1 h^2 + c2 dt + c3 eps_pin``, scaled
by the size of the checked quantity; the constants were calibrated on the
Angenent oval and the corpus flows and are frozen here.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .curve import CurveError, PlanarCurve, tangent_lift
from .exact import OracleError, WedgeProfile, wedge_profile
from .flow import (
    GRAPH_MARGIN,
    FlowTrace,
    Snapshot,
    apply_laplacian,
    detect_graphical_time,
    detect_polar_sector,
    make_snapshot,
    sup_abs_psi_symmetric,
    to_canonical_frame,
    to_symmetric_frame,
)
from .functionals import (
    PolarGraphView,
    extrema_bounds,
    polar_view,
    prefix_extrema,
    support_function,
    swept_area_prefix,
)


@dataclass(frozen=True)
class SlackModel:
    c1: float = 20.0
    c2: float = 20.0
    c3: float = 10.0

    def disc(self, h: float, dt: float, eps_pin: float) -> float:
        return self.c1 * h * h + self.c2 * dt + self.c3 * eps_pin


SLACK = SlackModel()
ROTATION_TOL = 1e-9
CONVEX_TOL = 1e-3
PSI_GRID = (0.15, 0.85)
GRAPH_GRADIENT_SLACK = 0.05
SECTOR_SLACK = 0.02


@dataclass
class CheckReport:
    check_id: str
    status: str
    max_violation: float
    tolerance: float
    witness: dict | None = None
    notes: str = ""
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["max_violation"] = float(d["max_violation"])
        d["tolerance"] = float(d["tolerance"])
        return d


def _report(check_id, violation, tol, witness=None, notes="", details=None) -> CheckReport:
    violation = float(max(violation, 0.0))
    status = "pass" if violation <= tol else "fail"
    if violation == 0.0 and witness is None:
        witness = None
    return CheckReport(check_id, status, violation, float(tol), witness, notes, details or {})


def _inconclusive(check_id, notes, witness=None, details=None) -> CheckReport:
    return CheckReport(check_id, "inconclusive", 0.0, 0.0, witness, notes, details or {})


# ---------------------------------------------------------------------------
# shared per-trace data


def trace_resolution(trace: FlowTrace) -> tuple[float, float, float]:
    """``(h, dt, eps_pin)`` for the slack model."""
    c0 = trace.snapshots[0].curve
    h = float(np.median(c0.segment_lengths))
    cfg = trace.config
    eps_pin = 0.0
    if c0.end_meta is not None:
        eps_pin = math.exp(-(cfg.pin_radius - trace.snapshots[-1].t))
    return h, cfg.dt, eps_pin


def disc_slack(trace: FlowTrace, model: SlackModel = SLACK) -> float:
    return model.disc(*trace_resolution(trace))


def rotate_checked(snapshot: Snapshot, curve: PlanarCurve, angle: float) -> Snapshot:
    """Rotate about the origin and assert that swept areas and turning are unchanged."""
    rot = curve.rotated(angle)
    s0 = swept_area_prefix(curve).S
    s1 = swept_area_prefix(rot).S
    scale = 1.0 + float(np.max(np.abs(s0)))
    if np.max(np.abs(s0 - s1)) > ROTATION_TOL * scale:
        raise AssertionError("rotation changed the swept area")
    lift0 = snapshot.lift.psi
    lift1 = tangent_lift(rot).psi
    if np.max(np.abs(np.diff(lift0) - np.diff(lift1))) > ROTATION_TOL:
        raise AssertionError("rotation changed the turning function")
    return make_snapshot(snapshot.t, rot)


def canonical(snapshot: Snapshot) -> Snapshot:
    em = snapshot.curve.end_meta
    return rotate_checked(snapshot, snapshot.curve, math.pi - em.angle_a)


def symmetric(snapshot: Snapshot) -> Snapshot:
    em = snapshot.curve.end_meta
    return rotate_checked(snapshot, snapshot.curve, math.pi / 2 + em.beta / 2 - em.angle_a)


def _radial(trace: FlowTrace) -> bool:
    return trace.snapshots[0].curve.end_meta is not None


def initial_bounds(trace: FlowTrace):
    return extrema_bounds(swept_area_prefix(trace.snapshots[0].curve))


def _psi0(snap: Snapshot) -> np.ndarray:
    """Lift normalized to start at 0 (canonical-frame values)."""
    return snap.lift.psi - snap.lift.psi[0]


def _alpha(trace: FlowTrace) -> float:
    return trace.snapshots[0].curve.end_meta.canonical_alpha


def _beta(trace: FlowTrace) -> float:
    return trace.snapshots[0].curve.end_meta.beta


def profile_for(beta: float) -> WedgeProfile | None:
    if beta >= math.pi - 1e-12:
        return None
    return wedge_profile(round(beta, 12))


# ---------------------------------------------------------------------------
# swept-area family


def check_harnack_bounds(trace: FlowTrace) -> CheckReport:
    """``A_- <= A(v,w,t) - t Psi(v,w,t) <= A_+`` over all pairs and recorded times."""
    cid = "harnack_bounds"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    eb = initial_bounds(trace)
    worst, wit = 0.0, None
    for snap in trace.snapshots:
        S = swept_area_prefix(snap.curve).S
        hi, hp, lo, lp = prefix_extrema(S - snap.t * snap.lift.psi)
        for val, pair in ((hi - eb.a_plus, hp), (eb.a_minus - lo, lp)):
            if val > worst:
                worst, wit = val, {"v": pair[0], "w": pair[1], "t": snap.t}
    tol = 0.01 * max(eb.spread, 1.0) + disc_slack(trace)
    return _report(cid, worst, tol, wit, details={"a_minus": eb.a_minus, "a_plus": eb.a_plus})


def check_area_control(trace: FlowTrace) -> CheckReport:
    """``A_- <= A(v,w,t) <= alpha t + A_+`` in the canonical frame."""
    cid = "area_control"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    alpha = _alpha(trace)
    if not 0 <= alpha < math.pi:
        return _inconclusive(cid, f"canonical alpha {alpha:.6g} outside [0, pi)")
    eb = initial_bounds(trace)
    worst, wit = 0.0, None
    for snap in trace.snapshots:
        can = canonical(snap)
        hi, hp, lo, lp = prefix_extrema(swept_area_prefix(can.curve).S)
        for val, pair in ((hi - alpha * snap.t - eb.a_plus, hp), (eb.a_minus - lo, lp)):
            if val > worst:
                worst, wit = val, {"v": pair[0], "w": pair[1], "t": snap.t}
    tol = 0.01 * max(eb.spread, 1.0) + disc_slack(trace)
    return _report(cid, worst, tol, wit)


def check_turning_bounds(trace: FlowTrace) -> CheckReport:
    """``-(A_+ - A_-)/t <= Psi <= (pi - beta) + (A_+ - A_-)/t`` for ``t > 0``."""
    cid = "turning_bounds"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    eb = initial_bounds(trace)
    beta = _beta(trace)
    worst, wit = 0.0, None
    for snap in trace.snapshots:
        if snap.t <= 0:
            continue
        hi, hp, lo, lp = prefix_extrema(snap.lift.psi)
        slack = eb.spread / snap.t
        for val, pair in ((hi - (math.pi - beta) - slack, hp), (-slack - lo, lp)):
            if val > worst:
                worst, wit = val, {"v": pair[0], "w": pair[1], "t": snap.t}
    tol = 0.01 + disc_slack(trace)
    return _report(cid, worst, tol, wit)


def check_total_area_law(trace: FlowTrace) -> CheckReport:
    """Least-squares slope of ``A(first, last, t)`` within 1% of ``alpha = pi - beta``.

    The drift of the intercept from ``A(first, last, 0)`` is reported in the
    details; it measures the area lost by the discretization while sharp
    features are resolved.
    """
    cid = "total_area_law"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    if len(trace.snapshots) < 3:
        return _inconclusive(cid, "fewer than 3 recorded times")
    alpha = math.pi - _beta(trace)
    if alpha <= 0:
        return _inconclusive(cid, "alpha = 0: the total area is constant")
    ts = trace.times
    tot = np.array([swept_area_prefix(s.curve).total for s in trace.snapshots])
    slope, icpt = np.polyfit(ts, tot, 1)
    rel = abs(slope - alpha) / alpha
    wit = {"t": float(ts[int(np.argmax(np.abs(tot - (tot[0] + alpha * ts))))])} if rel > 0 else None
    return _report(cid, rel, 0.01, wit, notes="violation is |slope - alpha| / alpha",
                   details={"slope": float(slope), "alpha": alpha, "intercept": float(icpt),
                            "initial_total": float(tot[0]), "intercept_drift": float(icpt - tot[0])})


def _extremal_pairs(snap: Snapshot, alpha: float) -> tuple[float, dict | None, dict]:
    """Largest excess of ``Psi`` over its bounds at the extremal pairs of ``A`` in one snapshot."""
    S = swept_area_prefix(snap.curve).S
    psi = _psi0(snap)
    n = len(psi)
    hi, hp, lo, lp = prefix_extrema(S)
    cases = [
        ("sup", hp, psi[hp[1]] - psi[hp[0]] - alpha),
        ("inf", lp, -(psi[lp[1]] - psi[lp[0]])),
    ]
    w_top = int(np.argmax(S))
    w_bot = int(np.argmin(S))
    cases.append(("sup_first", (0, w_top), psi[w_top] - alpha))
    cases.append(("inf_first", (0, w_bot), -psi[w_bot]))
    tail = S[-1] - S
    v_top = int(np.argmax(tail))
    v_bot = int(np.argmin(tail))
    cases.append(("sup_last", (v_top, n - 1), psi[-1] - psi[v_top] - alpha))
    cases.append(("inf_last", (v_bot, n - 1), -(psi[-1] - psi[v_bot])))
    worst, wit = 0.0, None
    info = {}
    for name, pair, val in cases:
        info[name] = {"v": int(pair[0]), "w": int(pair[1]), "excess": float(val)}
        if val > worst:
            worst, wit = float(val), {"v": int(pair[0]), "w": int(pair[1]), "t": snap.t, "case": name}
    return worst, wit, info


def check_extremal_turning(trace: FlowTrace | Snapshot) -> CheckReport:
    """At argmax/argmin pairs of ``A``: ``Psi <= alpha`` and ``Psi >= 0`` (also on the boundary families).

    Accepts a whole trace (every snapshot with ``t > 0``) or one snapshot.
    """
    cid = "extremal_turning"
    if isinstance(trace, Snapshot):
        snaps = [trace]
        em = trace.curve.end_meta
        slack = 0.01 + SLACK.disc(float(np.median(trace.curve.segment_lengths)), 0.0, 0.0)
    else:
        snaps = trace.snapshots
        em = trace.snapshots[0].curve.end_meta
        slack = 0.01 + disc_slack(trace)
    if em is None:
        return _inconclusive(cid, "needs initially radial ends")
    alpha = em.canonical_alpha
    if not 0 <= alpha < math.pi:
        return _inconclusive(cid, f"canonical alpha {alpha:.6g} outside [0, pi)")
    worst, wit = 0.0, None
    per_time = {}
    for snap in snaps:
        if snap.t <= 0:
            continue
        val, w, info = _extremal_pairs(canonical(snap), alpha)
        per_time[f"{snap.t:.6g}"] = info
        if val > worst:
            worst, wit = val, w
    if not per_time:
        return _inconclusive(cid, "needs a snapshot with t > 0")
    return _report(cid, worst, slack, wit, details={"per_time": per_time})


# ---------------------------------------------------------------------------
# graphicality


def check_graphicality(trace: FlowTrace) -> CheckReport:
    """Graph property, gradient bound and polar sector after ``2 (A_+ - A_-) / beta``.

    The violation is measured in units of the allowed slack: the gradient
    excess relative to 5 percent, the sector shortfall relative to 0.02 rad,
    the delay of the first graphical time relative to 5 percent of the
    threshold plus one step, and a full unit for a non-graphical snapshot.
    """
    cid = "graphicality"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    eb = initial_bounds(trace)
    beta = _beta(trace)
    if beta >= math.pi - 1e-12 and eb.spread <= 1e-12:
        return CheckReport(cid, "pass", 0.0, 1.0, None,
                           "static straight line through the origin: pass by convention")
    thresh = 2 * eb.spread / beta
    worst, wit = 0.0, None
    details = {"threshold": thresh, "first_graphical_time": None, "snapshots": []}
    t_graph = detect_graphical_time(trace)
    details["first_graphical_time"] = t_graph
    allowed = thresh * 1.05 + trace.config.dt
    if t_graph is None or t_graph > allowed:
        if trace.snapshots[-1].t > allowed:
            late = math.inf if t_graph is None else t_graph
            val = 1.0 + (late - allowed) / (0.05 * thresh + trace.config.dt) if late < math.inf else 2.0
            worst, wit = val, {"t": t_graph, "case": "first_graphical_time"}
    for snap in trace.snapshots:
        if snap.t <= thresh or snap.t <= 0:
            continue
        sym = symmetric(snap)
        sup_psi = float(np.max(np.abs(sym.lift.psi)))
        bound_angle = math.pi / 2 - beta / 2 + eb.spread / snap.t
        row = {"t": snap.t, "sup_abs_psi": sup_psi, "bound_angle": bound_angle}
        if sup_psi >= math.pi / 2 - GRAPH_MARGIN:
            val, case = 2.0, "not_graphical"
        else:
            grad = math.tan(sup_psi)
            gbound = math.tan(bound_angle) if bound_angle < math.pi / 2 else math.inf
            val = (grad / gbound - 1.0) / GRAPH_GRADIENT_SLACK if gbound < math.inf else 0.0
            case = "gradient"
            row["gradient"] = grad
            row["gradient_bound"] = gbound
            sector = detect_polar_sector(sym)
            s_lo = math.pi / 2 - beta / 2 + eb.spread / snap.t
            s_hi = math.pi / 2 + beta / 2 - eb.spread / snap.t
            row["sector"] = sector
            row["S"] = (s_lo, s_hi)
            if s_lo < s_hi:
                if sector is None:
                    sval = 2.0
                else:
                    short = max(sector[0] - s_lo, s_hi - sector[1], 0.0)
                    sval = short / SECTOR_SLACK
                if sval > val:
                    val, case = sval, "polar_sector"
        details["snapshots"].append(row)
        if val > worst:
            worst, wit = val, {"t": snap.t, "case": case}
    return _report(cid, worst, 1.0, wit, notes="violation in units of the allowed slack", details=details)


# ---------------------------------------------------------------------------
# polar graphical family


def _polar_setup(trace: FlowTrace):
    """Return ``(V0, views)`` or an explanation why the trace is not polar graphical."""
    init = canonical(trace.snapshots[0]).curve
    S0 = swept_area_prefix(init).S
    try:
        pv0 = polar_view(init)
    except CurveError:
        pv0 = None
    if isinstance(pv0, PolarGraphView):
        V0 = float(pv0.V[-1])
    elif pv0 is None and np.max(np.abs(S0)) <= 1e-12:
        V0 = 0.0  # a wedge through the origin: the polar graph r = 0
    else:
        return None, "initial curve is not a polar graph"
    views = []
    for snap in trace.snapshots:
        if snap.t <= 0:
            continue
        can = canonical(snap)
        try:
            pv = polar_view(can.curve)
        except CurveError:
            return None, f"node at the origin at t={snap.t:.6g}"
        if not isinstance(pv, PolarGraphView):
            return None, f"snapshot at t={snap.t:.6g} is not a polar graph (angle {pv.witness_angle:.6g} met twice)"
        views.append((can, pv))
    return (V0, views), ""


def check_polar_harnack(trace: FlowTrace) -> CheckReport:
    """``0 <= V - t Psi <= V0`` and ``|Psi - Psi_beta| <= V0 / t`` on polar graphical flows."""
    cid = "polar_harnack"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    setup, why = _polar_setup(trace)
    if setup is None:
        return _inconclusive(cid, why)
    V0, views = setup
    beta = _beta(trace)
    try:
        prof = profile_for(beta)
    except OracleError as exc:
        return _inconclusive(cid, f"wedge profile unavailable: {exc}")
    if prof is not None:
        pphi = np.concatenate([[0.0], prof.phis, [beta]])
        ppsi = np.concatenate([[0.0], prof.psis, [prof.alpha]])
    worst, wit = 0.0, None
    h, dt, eps = trace_resolution(trace)
    for can, pv in views:
        t = can.t
        psi = _psi0(can)
        hi, hp, lo, lp = prefix_extrema(pv.V - t * psi)
        cand = [(-lo, lp, "wh1_lower"), (hi - V0, hp, "wh1_upper")]
        ref = np.interp(pv.phis, pphi, ppsi) if prof is not None else np.zeros_like(psi)
        ghi, ghp, glo, glp = prefix_extrema(psi - ref)
        cand += [(ghi - V0 / t, ghp, "wh2_upper"), (-V0 / t - glo, glp, "wh2_lower")]
        for val, pair, case in cand:
            if val > worst:
                worst, wit = float(val), {"v": int(pair[0]), "w": int(pair[1]), "t": t, "case": case}
    tol = 0.01 * max(V0, 0.1) + SLACK.disc(h, dt, eps)
    return _report(cid, worst, tol, wit, details={"V0": V0})


def check_support_curvature(trace: FlowTrace) -> CheckReport:
    """``kappa <= D / (2t)`` on polar graphical snapshots.

    The tolerance is ``(1% + disc) kappa_max``: the gap is a curvature, so
    the discretization slack is scaled by the largest curvature seen.
    """
    cid = "support_curvature"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    setup, why = _polar_setup(trace)
    if setup is None:
        return _inconclusive(cid, why)
    _, views = setup
    worst, wit = 0.0, None
    kmax = 0.0
    equality = 0.0
    for can, _ in views:
        t = can.t
        kap = can.curvature.kappa
        D = support_function(can.curve, can.lift).D
        gap = kap - D / (2 * t)
        i = int(np.argmax(gap))
        kmax = max(kmax, float(np.max(np.abs(kap))))
        equality = max(equality, float(np.max(np.abs(gap))) / max(float(np.max(np.abs(kap))), 1e-300))
        if gap[i] > worst:
            worst, wit = float(gap[i]), {"node": i, "t": t}
    tol = (0.01 + disc_slack(trace)) * max(kmax, 1e-3)
    return _report(cid, worst, tol, wit, details={"kappa_max": kmax, "max_rel_gap": equality})


# ---------------------------------------------------------------------------
# convex family


def _psi_samples(trace: FlowTrace, m: int = 200):
    """``kappa`` and positions on a fixed interior ``psi`` grid for every ``t > 0``.

    Returns ``(grid, rows)`` with rows ``(t, kappa(grid), gamma(grid))`` or
    an inconclusive explanation.
    """
    alpha = _alpha(trace)
    if not 0 < alpha < math.pi:
        return None, "convex reformulation needs beta in (0, pi)"
    grid = alpha * np.linspace(PSI_GRID[0], PSI_GRID[1], m)
    rows = []
    for snap in trace.snapshots:
        if snap.t <= 0:
            continue
        can = canonical(snap)
        kap = can.curvature.kappa
        scale = float(np.max(np.abs(kap)))
        inner = slice(1, len(kap) - 1)
        k_in = kap[inner]
        if np.min(k_in) < -CONVEX_TOL * scale:
            i = int(np.argmin(k_in)) + 1
            return None, ("snapshot is not convex", {"node": i, "t": snap.t})
        psi = _psi0(can)
        lo = int(np.searchsorted(np.maximum.accumulate(psi), alpha * 0.05))
        hi = len(psi) - int(np.searchsorted(np.maximum.accumulate(-psi[::-1]), -alpha * 0.95))
        seg = slice(max(lo - 1, 0), min(hi + 1, len(psi)))
        p = psi[seg]
        if np.any(np.diff(p) <= 0):
            return None, ("tangent angle not monotone on the interior range", {"t": snap.t})
        g = can.curve.points[seg]
        rows.append((snap.t, np.interp(grid, p, kap[seg]),
                     np.column_stack([np.interp(grid, p, g[:, 0]), np.interp(grid, p, g[:, 1])])))
    if not rows:
        return None, "no positive recorded times"
    return (grid, rows), ""


def check_hamilton(trace: FlowTrace) -> CheckReport:
    """``(kappa sqrt t)_t >= 0`` at fixed ``psi`` and ``kappa <= t^{-1/2} kappa_beta (1 + 1%)``.

    Both inequalities need a convex initial curve; a flow that only becomes
    convex later is reported inconclusive.
    """
    cid = "hamilton"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    res, why = _psi_samples(trace)
    if res is None:
        if isinstance(why, tuple):
            return _inconclusive(cid, why[0], witness=why[1])
        return _inconclusive(cid, why)
    psi_init = _psi0(trace.snapshots[0])
    drop = np.diff(psi_init)
    if np.min(drop) < -CONVEX_TOL * max(float(np.max(np.abs(drop))), 1e-300):
        i = int(np.argmin(drop))
        return _inconclusive(cid, "initial curve is not convex", witness={"node": i + 1, "t": 0.0})
    grid, rows = res
    prof = profile_for(_beta(trace))
    kb = prof.kappa_at(grid)
    g = np.array([k * math.sqrt(t) for t, k, _ in rows])
    ts = [t for t, _, _ in rows]
    scale = float(np.max(kb))
    slack = SLACK.disc(*trace_resolution(trace)) * scale
    worst, wit = 0.0, None
    if len(rows) > 1:
        dg = np.diff(g, axis=0)
        i, j = np.unravel_index(int(np.argmin(dg)), dg.shape)
        if -dg[i, j] > worst:
            worst, wit = float(-dg[i, j]), {"psi": float(grid[j]), "t": ts[i + 1], "case": "monotonicity"}
    excess = g - 1.01 * kb[None, :]
    i, j = np.unravel_index(int(np.argmax(excess)), excess.shape)
    if excess[i, j] > worst:
        worst, wit = float(excess[i, j]), {"psi": float(grid[j]), "t": ts[i], "case": "kappa_beta_bound"}
    variation = float(np.max(np.ptp(g, axis=0) / kb)) if len(rows) > 1 else 0.0
    return _report(cid, worst, slack, wit,
                   details={"max_rel_variation": variation, "min_dt_kappa_sqrt_t": float(np.min(np.diff(g, axis=0))) if len(rows) > 1 else 0.0,
                            "max_ratio_to_profile": float(np.max(g / kb))})


def check_blowdown(trace: FlowTrace) -> CheckReport:
    """``t^{-1/2} gamma(psi, t)`` approaches ``gamma_beta(psi)`` (soft check)."""
    cid = "blowdown"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    res, why = _psi_samples(trace)
    if res is None:
        if isinstance(why, tuple):
            return _inconclusive(cid, why[0], witness=why[1])
        return _inconclusive(cid, why)
    grid, rows = res
    prof = profile_for(_beta(trace))
    ref = prof.gamma_at(grid)
    dists = [float(np.max(np.hypot(*(pos / math.sqrt(t) - ref).T))) for t, _, pos in rows]
    tol = max(disc_slack(trace), 1e-3)
    target = max(0.5 * dists[0], tol)
    viol = dists[-1] - target
    wit = {"t": rows[-1][0]} if viol > 0 else None
    return _report(cid, max(viol, 0.0), 0.0, wit,
                   notes="pass iff the final distance is at most half the first (or below tolerance)",
                   details={"distances": dists, "times": [r[0] for r in rows], "tolerance": tol})


# ---------------------------------------------------------------------------
# ends


def end_graph_coordinates(curve: PlanarCurve, which: str, r_dep: float):
    """Graph coordinates ``(x, y)`` of one end over its ray, from the pin inwards.

    ``x`` is measured along the ray from the departure radius and ``y`` is
    the signed distance from the ray. Only the contiguous run of nodes with
    ``x >= 0`` next to the pin is returned.
    """
    em = curve.end_meta
    pts = curve.points if which == "a" else curve.points[::-1]
    ang = em.angle_a if which == "a" else em.angle_b
    e = np.array([math.cos(ang), math.sin(ang)])
    x = pts @ e - r_dep
    y = pts[:, 1] * e[0] - pts[:, 0] * e[1]
    stop = int(np.argmax(x < 0)) if np.any(x < 0) else len(x)
    return x[:stop], y[:stop]


def check_end_decay(trace: FlowTrace, rate_min: float = 0.95) -> CheckReport:
    """``|y| <= (pi/2) e^{t-x} (1 + 1e-2)`` along both ends, with the fitted decay rate."""
    cid = "end_decay"
    if not _radial(trace):
        return _inconclusive(cid, "needs initially radial ends")
    c0 = trace.snapshots[0].curve
    em0 = c0.end_meta
    r_a = float(np.hypot(*c0.points[em0.clamp_lo]))
    r_b = float(np.hypot(*c0.points[em0.clamp_hi]))
    R = trace.config.pin_radius
    worst, wit = 0.0, None
    rates = []
    for snap in trace.snapshots:
        if snap.t <= 0:
            continue
        t = snap.t
        for which, r_dep in (("a", r_a), ("b", r_b)):
            x, y = end_graph_coordinates(snap.curve, which, r_dep)
            if len(x) > 1 and np.any(np.diff(x) >= 0):
                return _inconclusive(cid, f"end {which} is not a graph over its ray at t={t:.6g}")
            sel = x >= t
            if sel.any():
                ratio = np.abs(y[sel]) / (0.5 * math.pi * np.exp(t - x[sel]))
                i = int(np.argmax(ratio))
                val = float(ratio[i] - 1.01)
                if val > worst:
                    worst, wit = val, {"end": which, "x": float(x[sel][i]), "t": t}
            fit = (x >= t) & (np.abs(y) > 1e-10) & (x + r_dep <= R - 1.0)
            if np.count_nonzero(fit) >= 5:
                slope = np.polyfit(x[fit], np.log(np.abs(y[fit])), 1)[0]
                rates.append((float(-slope), which, t))
    min_rate = min(rates)[0] if rates else None
    rate_viol = 0.0
    if min_rate is not None and min_rate < rate_min:
        rate_viol = rate_min - min_rate
        if rate_viol > worst:
            r = min(rates)
            worst, wit = rate_viol, {"end": r[1], "t": r[2], "case": "decay_rate"}
    return _report(cid, worst, 0.0, wit,
                   notes="violation is the excess of |y| / ((pi/2) e^{t-x}) over 1.01, or the rate shortfall",
                   details={"min_rate": min_rate, "rates": rates})


# ---------------------------------------------------------------------------
# heat residuals on fixed-label windows


def _window_region(window: FlowTrace, radius: float) -> np.ndarray:
    """Nodes within ``radius`` of the origin (any node of a closed curve), away from the first and last two."""
    curve = window.snapshots[0].curve
    pts = curve.points
    keep = np.hypot(pts[:, 0], pts[:, 1]) <= radius
    if curve.closed:
        keep[:] = True
    keep[:2] = False
    keep[-2:] = False
    return keep


def heat_residuals(window: FlowTrace, radius: float = 4.0) -> dict:
    """Sup residuals of the three heat-type equations on a fixed-label window.

    Time derivatives are centred differences at fixed node labels; space
    derivatives are the three-point arclength Laplacian at the same time.
    Closed curves are cut open at the first node, so the lift and the swept
    area need no periodic continuation.
    For the pair equations, ``A_t - Delta_v A - Delta_w A - Psi`` equals
    ``F[w] - F[v]`` for the nodal ``F = S_t - L S - psi``, so its sup over
    pairs in the region is ``max F - min F`` (likewise for ``H``).
    """
    snaps = window.snapshots
    if len(snaps) < 3:
        raise ValueError("window too short for centred time differences")
    keep = _window_region(window, radius)
    out = {"psi": 0.0, "area": 0.0, "harnack": 0.0}
    n = snaps[0].curve.n
    S = [swept_area_prefix(s.curve).S[:n] for s in snaps]
    P = [s.lift.psi for s in snaps]
    for k in range(1, len(snaps) - 1):
        dt2 = snaps[k + 1].t - snaps[k - 1].t
        t = snaps[k].t
        pts = snaps[k].curve.points
        psi_t = (P[k + 1] - P[k - 1]) / dt2
        lap_psi = apply_laplacian(P[k], pts)
        out["psi"] = max(out["psi"], float(np.max(np.abs(psi_t - lap_psi)[keep])))
        S_t = (S[k + 1] - S[k - 1]) / dt2
        F = S_t - apply_laplacian(S[k], pts) - P[k]
        out["area"] = max(out["area"], float(np.ptp(F[keep])))
        G = S_t - (P[k] + t * psi_t) - apply_laplacian(S[k] - t * P[k], pts)
        out["harnack"] = max(out["harnack"], float(np.ptp(G[keep])))
    return out


def refinement_windows(spec, t0: float = 0.5, steps: int = 8, levels=(501, 1001, 2001),
                       dt_factor: float = 1.0) -> list:
    """Fixed-label windows of the flow from ``spec`` at successively halved ``h``.

    Each level is integrated from scratch up to ``t0`` with ``dt = dt_factor h^2``
    and then continued without resampling for a common physical duration of
    ``steps`` coarse steps.
    """
    from dataclasses import replace

    from .curve import build_initial_curve
    from .flow import FlowConfig, fixed_label_window, run

    windows = []
    duration = None
    for n in levels:
        curve = build_initial_curve(replace(spec, n=n))
        h = float(np.median(curve.segment_lengths))
        dt = dt_factor * h * h
        if duration is None:
            duration = steps * dt
        cfg = FlowConfig(dt=dt, n_nodes=n, t_end=t0, pin_radius=spec.pin_radius)
        start = run(curve, cfg, monitor=False).snapshots[-1].curve
        windows.append(fixed_label_window(start, t0, duration, duration / round(duration / dt)))
    return windows


def convergence_order(hs, values) -> float:
    """Least-squares slope of ``log value`` against ``log h``."""
    return float(np.polyfit(np.log(hs), np.log(values), 1)[0])


def check_heat_residuals(windows, min_order: float = 1.5) -> CheckReport:
    """Residual decay order of the three heat equations across refinement levels.

    ``windows`` are fixed-label windows at successively halved ``h`` with
    ``dt`` proportional to ``h^2``. Every consecutive pair of levels must
    show an order of at least ``min_order``.
    """
    cid = "heat_residuals"
    if isinstance(windows, FlowTrace):
        windows = [windows]
    if len(windows) < 3:
        return _inconclusive(cid, "needs at least three refinement levels")
    try:
        res = [heat_residuals(w) for w in windows]
    except ValueError as exc:
        return _inconclusive(cid, str(exc))
    hs = [float(np.median(w.snapshots[0].curve.segment_lengths)) for w in windows]
    orders = {}
    worst, wit = 0.0, None
    for key in ("psi", "area", "harnack"):
        vals = [r[key] for r in res]
        if max(vals) <= 1e-13:
            orders[key] = [math.inf]
            continue
        pair_orders = [math.log(vals[i] / vals[i + 1]) / math.log(hs[i] / hs[i + 1])
                       for i in range(len(vals) - 1)]
        orders[key] = pair_orders
        short = min_order - min(pair_orders)
        if short > worst:
            worst, wit = short, {"equation": key, "level": int(np.argmin(pair_orders))}
    return _report(cid, worst, 0.0, wit, notes=f"violation is the shortfall of the observed order below {min_order}",
                   details={"h": hs, "residuals": res, "orders": orders})


# ---------------------------------------------------------------------------
# orchestration


CHECKS = {
    "harnack_bounds": check_harnack_bounds,
    "area_control": check_area_control,
    "turning_bounds": check_turning_bounds,
    "graphicality": check_graphicality,
    "total_area_law": check_total_area_law,
    "polar_harnack": check_polar_harnack,
    "extremal_turning": check_extremal_turning,
    "support_curvature": check_support_curvature,
    "hamilton": check_hamilton,
    "end_decay": check_end_decay,
    "blowdown": check_blowdown,
}


def thread_count() -> int:
    try:
        return max(1, int(os.environ.get("CSF_THREADS", "1")))
    except ValueError:
        return 1


def run_checks(trace: FlowTrace, check_ids=None, overrides: dict | None = None) -> list[CheckReport]:
    """Run the named checks (all trace checks by default), in parallel up to ``CSF_THREADS``.

    ``overrides`` maps a check id to a tolerance that replaces the computed one.
    """
    ids = list(check_ids) if check_ids is not None else list(CHECKS)
    unknown = [c for c in ids if c not in CHECKS]
    if unknown:
        raise KeyError(f"unknown checks: {unknown}")

    def one(cid):
        rep = CHECKS[cid](trace)
        if overrides and cid in overrides and rep.status != "inconclusive":
            rep.tolerance = float(overrides[cid])
            rep.status = "pass" if rep.max_violation <= rep.tolerance else "fail"
        return rep

    workers = min(thread_count(), len(ids)) or 1
    if workers == 1:
        return [one(c) for c in ids]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(one, ids))
