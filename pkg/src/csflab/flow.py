"""Time integration of curve shortening flow on polylines.

The flow is integrated in the form ``gamma_t = Laplacian_s gamma`` (normal
velocity equal to curvature, plus a tangential drift that vanishes on
equally spaced nodes). The default scheme is linearly implicit: the
three-point arclength Laplacian is assembled from the current segment
lengths and ``(I - dt L) gamma_new = gamma_old`` is solved as a tridiagonal
system for both coordinates at once. Far endpoints are pinned on the end
rays.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .curve import (
    MIN_SEGMENT,
    CurvatureField,
    CurveError,
    PlanarCurve,
    RadialEndSpec,
    TangentField,
    detect_clamps,
    discrete_curvature,
    embeddedness_check,
    resample_arclength,
    resample_points,
    tangent_lift,
)

GRAPH_MARGIN = 1e-6
SECTOR_RESOLUTION = 1e-3


class FlowError(RuntimeError):
    """A step could not be taken; ``trace`` holds the snapshots recorded so far."""

    def __init__(self, message: str, trace: FlowTrace | None = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class FlowConfig:
    dt: float
    n_nodes: int
    t_end: float
    pin_radius: float = 8.0
    scheme: str = "semi_implicit"
    resample_every: int = 25
    record_times: tuple = ()
    smooth_corner: bool = True
    accuracy: float = 0.05

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t_end < 0:
            raise ValueError("t_end must be non-negative")
        if self.scheme not in ("explicit", "semi_implicit"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.n_nodes < 3:
            raise ValueError("n_nodes must be at least 3")
        if self.resample_every < 0:
            raise ValueError("resample_every must be >= 0")
        if self.accuracy < 0:
            raise ValueError("accuracy must be >= 0")
        rt = tuple(float(t) for t in self.record_times)
        object.__setattr__(self, "record_times", rt)
        if any(b <= a for a, b in zip(rt, rt[1:])):
            raise ValueError("record_times must be strictly increasing")


def check_pin_radius(config: FlowConfig) -> None:
    """Pins must sit well inside the exponentially decaying region of the ends."""
    if config.pin_radius < config.t_end + 6:
        raise ValueError("pin_radius must be at least t_end + 6")


@dataclass(frozen=True, eq=False)
class Snapshot:
    t: float
    curve: PlanarCurve
    lift: TangentField
    curvature: CurvatureField


def make_snapshot(t: float, curve: PlanarCurve) -> Snapshot:
    lift = tangent_lift(curve)
    return Snapshot(float(t), curve, lift, discrete_curvature(curve, lift))


@dataclass(eq=False)
class FlowTrace:
    snapshots: list
    config: FlowConfig
    provenance: str = ""
    monitor_t: list = field(default_factory=list)
    monitor_sup_psi: list = field(default_factory=list)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])

    def at(self, t: float) -> Snapshot:
        i = int(np.argmin(np.abs(self.times - t)))
        return self.snapshots[i]


def spec_hash(obj) -> str:
    return hashlib.sha256(repr(obj).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# stencils


def laplacian_coefficients(points: np.ndarray, closed: bool):
    """Coefficients ``(a, c)`` of ``L g_i = a_i g_{i-1} - (a_i + c_i) g_i + c_i g_{i+1}``.

    For open curves the first and last entries are zero (pinned nodes).
    """
    if closed:
        d = np.roll(points, -1, axis=0) - points
        h = np.hypot(d[:, 0], d[:, 1])
        hp = np.roll(h, 1)
        if h.min() < MIN_SEGMENT:
            raise FlowError("node collision: segment shorter than 1e-12, resample the curve")
        w = 2.0 / (hp + h)
        return w / hp, w / h
    d = np.diff(points, axis=0)
    h = np.hypot(d[:, 0], d[:, 1])
    if h.min() < MIN_SEGMENT:
        raise FlowError("node collision: segment shorter than 1e-12, resample the curve")
    n = len(points)
    a = np.zeros(n)
    c = np.zeros(n)
    w = 2.0 / (h[:-1] + h[1:])
    a[1:-1] = w / h[:-1]
    c[1:-1] = w / h[1:]
    return a, c


def apply_laplacian(values: np.ndarray, points: np.ndarray, closed: bool = False) -> np.ndarray:
    """Three-point arclength Laplacian of nodal ``values`` (1-D or (n, k))."""
    a, c = laplacian_coefficients(points, closed)
    v = np.asarray(values, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
        squeeze = True
    else:
        squeeze = False
    if closed:
        out = a[:, None] * np.roll(v, 1, axis=0) - (a + c)[:, None] * v + c[:, None] * np.roll(v, -1, axis=0)
    else:
        out = np.zeros_like(v)
        out[1:-1] = a[1:-1, None] * v[:-2] - (a + c)[1:-1, None] * v[1:-1] + c[1:-1, None] * v[2:]
    return out[:, 0] if squeeze else out


def explicit_step(points: np.ndarray, dt: float, closed: bool = False) -> np.ndarray:
    return points + dt * apply_laplacian(points, points, closed)


def implicit_step(points: np.ndarray, dt: float, closed: bool = False) -> np.ndarray:
    """Solve ``(I - dt L(points)) new = points``; pinned ends for open curves."""
    a, c = laplacian_coefficients(points, closed)
    n = len(points)
    diag = 1.0 + dt * (a + c)
    lower = -dt * a
    upper = -dt * c
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    if not closed:
        new = solve_banded((1, 1), ab, points, check_finite=False)
    else:
        # cyclic tridiagonal system via Sherman-Morrison
        corner_lo = lower[0]   # entry (0, n-1)
        corner_hi = upper[-1]  # entry (n-1, 0)
        g = -diag[0]
        ab[1, 0] = diag[0] - g
        ab[1, -1] = diag[-1] - corner_lo * corner_hi / g
        u = np.zeros(n)
        u[0], u[-1] = g, corner_hi
        rhs = np.column_stack([points, u])
        sol = solve_banded((1, 1), ab, rhs, check_finite=False)
        y, z = sol[:, :2], sol[:, 2]
        fact = (y[0] + corner_lo * y[-1] / g) / (1.0 + z[0] + corner_lo * z[-1] / g)
        new = y - np.outer(z, fact)
    if not np.all(np.isfinite(new)):
        raise FlowError("tridiagonal solve broke down")
    return new


def step(snapshot: Snapshot, dt: float, scheme: str = "semi_implicit") -> Snapshot:
    """Advance one snapshot by ``dt``; end nodes of open curves stay fixed."""
    curve = snapshot.curve
    if scheme == "explicit":
        hmin = curve.segment_lengths.min()
        if dt > 0.25 * hmin ** 2 * (1 + 1e-12):
            raise FlowError("explicit step violates dt <= h_min^2 / 4")
        new = explicit_step(curve.points, dt, curve.closed)
    else:
        new = implicit_step(curve.points, dt, curve.closed)
    return make_snapshot(snapshot.t + dt, _rebuild(curve, new))


def _rebuild(curve: PlanarCurve, points: np.ndarray) -> PlanarCurve:
    em = curve.end_meta
    if em is not None:
        lo, hi = detect_clamps(points, em.angle_a, em.angle_b)
        em = RadialEndSpec(em.angle_a, em.angle_b, lo, hi, em.pin_radius)
    try:
        return PlanarCurve(points, curve.params, em, curve.closed)
    except CurveError as exc:
        raise FlowError(f"invalid curve after step: {exc}") from exc


# ---------------------------------------------------------------------------
# runs


def _sym_rotation(curve: PlanarCurve) -> float | None:
    em = curve.end_meta
    if em is None:
        return None
    return math.pi / 2 + em.beta / 2 - em.angle_a


def run(initial: PlanarCurve, config: FlowConfig, provenance: str = "", monitor: bool = True) -> FlowTrace:
    """Integrate from ``initial`` up to ``config.t_end``.

    Snapshots are recorded at ``t = 0`` and at every ``record_times`` entry
    in ``(0, t_end]`` (the step size is trimmed to land exactly on them).
    The first step is an explicit step of size ``h_min^2 / 8`` when
    ``smooth_corner`` is set, which rounds off polygonal corners before the
    implicit scheme takes over. When ``monitor`` is set and the curve has
    radial ends, ``sup |psi|`` in the symmetric frame is logged after every
    step so that the first graphical time is resolved to one step.

    With ``accuracy > 0`` the implicit step is capped at
    ``accuracy / kappa_max^2``, which resolves the fast collapse of tightly
    wound regions; ``config.dt`` is the step away from such regions.
    """
    if initial.end_meta is not None:
        check_pin_radius(config)
    if config.n_nodes != initial.n:
        initial = resample_arclength(initial, config.n_nodes)
    trace = FlowTrace([make_snapshot(0.0, initial)], config, provenance)
    targets = [t for t in config.record_times if 0 < t <= config.t_end + 1e-12]
    if config.t_end > 0 and (not targets or targets[-1] < config.t_end - 1e-12):
        targets.append(config.t_end)
    closed = initial.closed
    sym_start = None
    if monitor and initial.end_meta is not None:
        sym_start = initial.end_meta.beta / 2 - math.pi / 2

    def log(t: float, pts: np.ndarray):
        if sym_start is not None:
            trace.monitor_t.append(t)
            trace.monitor_sup_psi.append(_sup_abs_turn(pts, sym_start))

    pts = np.array(initial.points)
    curve = initial
    log(0.0, pts)
    t = 0.0
    k = 0
    first = config.smooth_corner
    try:
        for target in targets:
            while t < target - 1e-12:
                if first:
                    d = np.diff(pts, axis=0)
                    dt = min(0.125 * np.hypot(d[:, 0], d[:, 1]).min() ** 2, target - t)
                    pts = explicit_step(pts, dt, closed)
                    first = False
                else:
                    dt = min(config.dt, target - t)
                    if config.accuracy and config.scheme != "explicit":
                        dt = min(dt, config.accuracy / max(_max_curvature_sq(pts, closed), 1e-300))
                    if target - t - dt < 1e-3 * config.dt:
                        dt = target - t
                    if config.scheme == "explicit":
                        d = np.diff(pts, axis=0)
                        if dt > 0.25 * np.hypot(d[:, 0], d[:, 1]).min() ** 2 * (1 + 1e-12):
                            raise FlowError("explicit step violates dt <= h_min^2 / 4")
                        pts = explicit_step(pts, dt, closed)
                    else:
                        pts = implicit_step(pts, dt, closed)
                if not np.all(np.isfinite(pts)):
                    raise FlowError(f"non-finite positions at t={t + dt:.6g}")
                t += dt
                k += 1
                if config.resample_every and k % config.resample_every == 0:
                    pts = resample_points(pts, config.n_nodes, closed)
                log(t, pts)
            t = target
            curve = _rebuild(curve, pts)
            rep = embeddedness_check(curve)
            if not rep.ok:
                raise FlowError(f"curve lost embeddedness at t={t:.6g}: segments {rep.pair}")
            trace.snapshots.append(make_snapshot(t, curve))
    except (FlowError, CurveError) as exc:
        raise FlowError(str(exc), trace) from exc
    return trace


def _max_curvature_sq(pts: np.ndarray, closed: bool) -> float:
    """Largest squared discrete curvature (turning angle over dual length)."""
    d = np.diff(pts, axis=0) if not closed else np.roll(pts, -1, axis=0) - pts
    d0, d1 = (d[:-1], d[1:]) if not closed else (np.roll(d, 1, axis=0), d)
    cross = d0[:, 0] * d1[:, 1] - d0[:, 1] * d1[:, 0]
    dot = (d0 * d1).sum(axis=1)
    h = np.hypot(d[:, 0], d[:, 1])
    dual = 0.5 * (h[:-1] + h[1:]) if not closed else 0.5 * (np.roll(h, 1) + h)
    k = np.arctan2(cross, dot) / dual
    return float(np.max(k * k)) if len(k) else 0.0


def _sup_abs_turn(pts: np.ndarray, start: float) -> float:
    """``sup |psi|`` for the segment-angle lift that starts at ``start``."""
    d = np.diff(pts, axis=0)
    a = np.arctan2(d[:, 1], d[:, 0])
    turn = np.diff(a)
    turn = (turn + np.pi) % (2 * np.pi) - np.pi
    cum = np.concatenate([[0.0], np.cumsum(turn)])
    return float(max(abs(start + cum.max()), abs(start + cum.min())))


def fixed_label_window(start: PlanarCurve, t0: float, duration: float, dt: float,
                       warmup: int = 0, scheme: str = "semi_implicit") -> FlowTrace:
    """Dense sub-trace with no resampling, so node labels are material.

    Every step is recorded. ``warmup`` steps are taken (and discarded)
    before recording starts, which lets the node distribution settle after
    a resample.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    nsteps = int(round(duration / dt))
    if nsteps < 2:
        raise ValueError("window too short: need at least two steps")
    config = FlowConfig(dt=dt, n_nodes=start.n, t_end=t0 + duration, resample_every=0,
                        scheme=scheme, smooth_corner=False,
                        pin_radius=start.end_meta.pin_radius if start.end_meta else 8.0)
    snap = make_snapshot(t0, start)
    for _ in range(warmup):
        snap = step(snap, dt, scheme)
    snap = Snapshot(t0, snap.curve, snap.lift, snap.curvature)
    trace = FlowTrace([snap], config, "window")
    try:
        for i in range(nsteps):
            snap = step(snap, dt, scheme)
            snap = Snapshot(t0 + (i + 1) * dt, snap.curve, snap.lift, snap.curvature)
            trace.snapshots.append(snap)
    except FlowError as exc:
        raise FlowError(f"window unstable, use a shorter window or smaller dt: {exc}", trace) from exc
    return trace


# ---------------------------------------------------------------------------
# frames and detectors


def to_symmetric_frame(curve: PlanarCurve) -> PlanarCurve:
    """Rotate so the ends sit at ``pi/2 + beta/2`` (first) and ``pi/2 - beta/2`` (last)."""
    rot = _sym_rotation(curve)
    if rot is None:
        raise CurveError("symmetric frame needs radial ends")
    return curve.rotated(rot)


def to_canonical_frame(curve: PlanarCurve) -> PlanarCurve:
    """Rotate so the first end is ``L_pi`` and the second ``L_alpha``."""
    em = curve.end_meta
    if em is None:
        raise CurveError("canonical frame needs radial ends")
    return curve.rotated(math.pi - em.angle_a)


def sup_abs_psi_symmetric(snapshot: Snapshot) -> float:
    sym = to_symmetric_frame(snapshot.curve)
    return float(np.max(np.abs(tangent_lift(sym).psi)))


def is_graphical(snapshot: Snapshot) -> bool:
    """All tangents transversal to vertical lines in the symmetric frame."""
    return sup_abs_psi_symmetric(snapshot) < math.pi / 2 - GRAPH_MARGIN


def detect_graphical_time(trace: FlowTrace, use_monitor: bool = True) -> float | None:
    """Earliest positive time at which the flow is a graph over the x-axis.

    Uses the per-step monitor when available and otherwise the recorded
    snapshots. The monitored value is compared against the same margin.
    """
    if use_monitor and trace.monitor_t:
        for t, s in zip(trace.monitor_t, trace.monitor_sup_psi):
            if t > 0 and s < math.pi / 2 - GRAPH_MARGIN:
                return float(t)
        return None
    for snap in trace.snapshots:
        if snap.t > 0 and is_graphical(snap):
            return snap.t
    return None


def line_crossings(points: np.ndarray, thetas: np.ndarray) -> np.ndarray:
    """Number of times the polyline meets each line through the origin at angle theta.

    A node exactly on a line counts as a meeting of its own, so tangential
    contact along a ray never looks like a single transversal crossing.
    """
    s, c = np.sin(thetas)[:, None], np.cos(thetas)[:, None]
    f = -s * points[None, :, 0] + c * points[None, :, 1]
    scale = np.maximum(1.0, np.hypot(points[:, 0], points[:, 1]))[None, :]
    sg = np.where(np.abs(f) <= 1e-12 * scale, 0.0, np.sign(f))
    changes = np.count_nonzero(sg[:, :-1] * sg[:, 1:] < 0, axis=1)
    zeros = np.count_nonzero(sg == 0, axis=1)
    return changes + zeros


def detect_polar_sector(snapshot: Snapshot, resolution: float = SECTOR_RESOLUTION):
    """Largest interval of line angles whose lines meet the curve exactly once.

    Line angles are sampled on ``[0, pi)``; the longest cyclic run of
    samples with a single crossing is returned as ``(theta_lo, theta_hi)``
    (``theta_hi`` may exceed ``pi`` when the run wraps), or ``None``.
    """
    m = int(round(math.pi / resolution))
    thetas = np.arange(m) * (math.pi / m)
    good = np.empty(m, dtype=bool)
    pts = snapshot.curve.points
    for lo in range(0, m, 512):
        good[lo : lo + 512] = line_crossings(pts, thetas[lo : lo + 512]) == 1
    if not good.any():
        return None
    if good.all():
        return (0.0, math.pi)
    start = int(np.argmin(good))
    rolled = np.roll(good, -start)
    best_len, best_at, run_len = 0, 0, 0
    for i, g in enumerate(rolled):
        run_len = run_len + 1 if g else 0
        if run_len > best_len:
            best_len, best_at = run_len, i
    first = (best_at - best_len + 1 + start)
    lo = thetas[first % m] + (math.pi if first >= m else 0.0)
    hi = lo + (best_len - 1) * (math.pi / m)
    return (float(lo), float(hi))


def default_dt(h: float, factor: float = 1.0) -> float:
    """Time step proportional to ``h^2``, which keeps the scheme second order in space-time."""
    return factor * h * h
