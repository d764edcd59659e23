"""Discrete oriented planar curves with radial ends.

A curve is an ordered polyline. Index order fixes the orientation, and the
optional :class:`RadialEndSpec` records the two half-lines ``L_a`` and
``L_b`` that the curve follows beyond its clamp indices. All geometry in
this module is exact polyline geometry or three-point stencils with
second-order accuracy on smooth curves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.spatial import cKDTree

RAY_TOL = 1e-9
EMBED_TOL = 1e-12
UNWRAP_MARGIN = 1e-3
MIN_SEGMENT = 1e-12


class CurveError(ValueError):
    """Invalid curve data or an operation that cannot be carried out."""


class UnwrapError(CurveError):
    """Adjacent tangent directions jump by (almost) pi: the curve is under-resolved."""

    def __init__(self, index: int, jump: float):
        super().__init__(
            f"tangent direction jumps by {jump:.6g} rad at segment {index}; "
            "curve is under-resolved"
        )
        self.index = index
        self.jump = jump


class EmbeddingError(CurveError):
    def __init__(self, pair: tuple[int, int]):
        super().__init__(f"curve is not embedded: segments {pair[0]} and {pair[1]} intersect")
        self.pair = pair


def _frozen(a: Any) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


def _wrap(angle: float) -> float:
    """Map an angle to (-pi, pi]."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class RadialEndSpec:
    angle_a: float
    angle_b: float
    clamp_lo: int
    clamp_hi: int
    pin_radius: float

    def __post_init__(self):
        if not self.pin_radius > 0:
            raise CurveError("pin_radius must be positive")
        if self.clamp_lo >= self.clamp_hi:
            raise CurveError("clamp_lo must be smaller than clamp_hi")

    @property
    def canonical_alpha(self) -> float:
        """Second end angle after rotating the first end onto angle pi."""
        return _wrap(self.angle_b - self.angle_a + math.pi)

    @property
    def beta(self) -> float:
        """Opening of the sector between the ends, measured in the canonical frame."""
        return math.pi - self.canonical_alpha


@dataclass(frozen=True, eq=False)
class PlanarCurve:
    points: np.ndarray
    params: np.ndarray
    end_meta: RadialEndSpec | None = None
    closed: bool = False

    def __post_init__(self):
        pts = _frozen(self.points)
        prm = _frozen(self.params)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "params", prm)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise CurveError("points must have shape (n, 2)")
        n = len(pts)
        if n < 3:
            raise CurveError("a curve needs at least 3 points")
        if prm.shape != (n,):
            raise CurveError("params must have one value per point")
        if np.any(np.diff(prm) <= 0):
            raise CurveError("params must be strictly increasing")
        seg = self.segment_lengths
        if np.any(seg <= 0):
            i = int(np.argmin(seg))
            raise CurveError(f"consecutive points {i} and {(i + 1) % n} coincide")
        em = self.end_meta
        if em is not None:
            if self.closed:
                raise CurveError("closed curves cannot carry radial ends")
            if em.clamp_hi >= n or em.clamp_lo < 0:
                raise CurveError("clamp indices out of range")
            da = ray_offsets(pts[: em.clamp_lo + 1], em.angle_a)
            db = ray_offsets(pts[em.clamp_hi :], em.angle_b)
            if da.max() > RAY_TOL or db.max() > RAY_TOL:
                raise CurveError("points beyond the clamp indices must lie on the end rays")

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def segments(self) -> np.ndarray:
        p = self.points
        if self.closed:
            return np.roll(p, -1, axis=0) - p
        return np.diff(p, axis=0)

    @property
    def segment_lengths(self) -> np.ndarray:
        d = self.segments
        return np.hypot(d[:, 0], d[:, 1])

    @property
    def length(self) -> float:
        return float(self.segment_lengths.sum())

    def with_points(self, points: np.ndarray, end_meta: RadialEndSpec | None = None) -> PlanarCurve:
        return PlanarCurve(points, self.params, end_meta, self.closed)

    def rotated(self, angle: float) -> PlanarCurve:
        """Rotate about the origin; end angles rotate with the curve."""
        c, s = math.cos(angle), math.sin(angle)
        pts = self.points @ np.array([[c, s], [-s, c]])
        em = self.end_meta
        if em is not None:
            em = RadialEndSpec(_wrap(em.angle_a + angle), _wrap(em.angle_b + angle),
                               em.clamp_lo, em.clamp_hi, em.pin_radius)
        return PlanarCurve(pts, self.params, em, self.closed)

    def reflected(self) -> PlanarCurve:
        """Reflect across the x-axis."""
        pts = self.points * np.array([1.0, -1.0])
        em = self.end_meta
        if em is not None:
            em = RadialEndSpec(_wrap(-em.angle_a), _wrap(-em.angle_b),
                               em.clamp_lo, em.clamp_hi, em.pin_radius)
        return PlanarCurve(pts, self.params, em, self.closed)

    def reversed(self) -> PlanarCurve:
        """Traverse the same image backwards; parameter u maps to 1 - u."""
        pts = self.points[::-1]
        prm = (self.params[0] + self.params[-1]) - self.params[::-1]
        em = self.end_meta
        if em is not None:
            n = self.n
            em = RadialEndSpec(em.angle_b, em.angle_a, n - 1 - em.clamp_hi,
                               n - 1 - em.clamp_lo, em.pin_radius)
        return PlanarCurve(pts, prm, em, self.closed)


@dataclass(frozen=True, eq=False)
class TangentField:
    psi: np.ndarray
    normalization: int = 0

    def __post_init__(self):
        object.__setattr__(self, "psi", _frozen(self.psi))

    @property
    def tangents(self) -> np.ndarray:
        return np.column_stack([np.cos(self.psi), np.sin(self.psi)])


@dataclass(frozen=True, eq=False)
class CurvatureField:
    kappa: np.ndarray
    arclengths: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "kappa", _frozen(self.kappa))
        object.__setattr__(self, "arclengths", _frozen(self.arclengths))


def ray_offsets(points: np.ndarray, angle: float) -> np.ndarray:
    """Distance of each point from the closed half-line at ``angle``."""
    d = np.array([math.cos(angle), math.sin(angle)])
    along = points @ d
    perp = np.abs(points[:, 0] * d[1] - points[:, 1] * d[0])
    behind = np.hypot(points[:, 0], points[:, 1])
    return np.where(along >= 0, perp, behind)


def detect_clamps(points: np.ndarray, angle_a: float, angle_b: float,
                  tol: float = RAY_TOL) -> tuple[int, int]:
    """Largest leading run on ``L_a`` and trailing run on ``L_b``."""
    n = len(points)
    on_a = ray_offsets(points, angle_a) <= tol
    on_b = ray_offsets(points, angle_b) <= tol
    lo = int(np.argmin(on_a)) - 1 if not on_a.all() else n - 2
    hi = n - int(np.argmin(on_b[::-1])) if not on_b.all() else 1
    lo = max(lo, 0)
    hi = min(hi, n - 1)
    if lo >= hi:
        hi = min(lo + 1, n - 1)
        lo = hi - 1
    return lo, hi


def make_radial_curve(points: np.ndarray, angle_a: float, angle_b: float,
                      pin_radius: float | None = None, params: np.ndarray | None = None) -> PlanarCurve:
    """Wrap points whose first and last nodes sit on ``L_a`` and ``L_b``."""
    pts = np.asarray(points, dtype=float)
    if ray_offsets(pts[:1], angle_a)[0] > RAY_TOL or ray_offsets(pts[-1:], angle_b)[0] > RAY_TOL:
        raise CurveError("first and last points must lie on the end rays")
    lo, hi = detect_clamps(pts, angle_a, angle_b)
    if pin_radius is None:
        pin_radius = float(min(np.hypot(*pts[0]), np.hypot(*pts[-1])))
    if params is None:
        params = _chord_params(pts)
    return PlanarCurve(pts, params, RadialEndSpec(angle_a, angle_b, lo, hi, pin_radius))


def _chord_params(pts: np.ndarray, closed: bool = False) -> np.ndarray:
    d = np.hypot(*np.diff(pts, axis=0).T)
    s = np.concatenate([[0.0], np.cumsum(d)])
    if closed:
        s = s / (s[-1] + math.hypot(*(pts[0] - pts[-1])))
        return s
    return s / s[-1]


# ---------------------------------------------------------------------------
# initial data generators


GENERATORS = ("wedge", "bent_line", "spiral", "zigzag", "random_wiggle", "bump",
              "circle", "angenent_oval", "from_points")


@dataclass(frozen=True)
class InitialCurveSpec:
    """Recipe for initial data: a generator name, its parameters and the ends."""

    generator: str
    n: int = 2001
    angle_a: float = math.pi
    angle_b: float = math.pi / 2
    pin_radius: float = 8.0
    params: dict = field(default_factory=dict)
    seed: int | None = None


def _ray(angle: float, r0: float, r1: float, m: int) -> np.ndarray:
    r = np.linspace(r0, r1, m)
    return np.column_stack([r * math.cos(angle), r * math.sin(angle)])


def _chord_path(pa: np.ndarray, pb: np.ndarray, offset, m: int) -> np.ndarray:
    """Points pa + s (pb - pa) + offset(s) * normal for s in [0, 1]."""
    s = np.linspace(0.0, 1.0, m)
    d = pb - pa
    nrm = np.array([-d[1], d[0]]) / math.hypot(*d)
    return pa + np.outer(s, d) + np.outer(offset(s), nrm)


def _taper(s: np.ndarray, edge: float = 0.15) -> np.ndarray:
    x = np.clip(np.minimum(s, 1 - s) / edge, 0.0, 1.0)
    return x * x * (3 - 2 * x)


def _dense_canonical(name: str, alpha: float, R: float, p: dict, seed: int | None) -> np.ndarray:
    """Dense polyline from L_pi (radius R) to L_alpha (radius R), canonical frame."""
    m = 20000
    ua = np.array([-1.0, 0.0])
    ub = np.array([math.cos(alpha), math.sin(alpha)])
    beta = math.pi - alpha
    if name in ("wedge", "bent_line"):
        rho = float(p.get("round_radius", 0.0)) if name == "bent_line" else 0.0
        if rho <= 0 or beta >= math.pi:
            return np.vstack([_ray(math.pi, R, 0.0, m)[:-1], _ray(alpha, 0.0, R, m)])
        t = rho / math.tan(beta / 2)
        if t >= R:
            raise CurveError("round_radius too large for pin_radius")
        ca = t * ua
        center = ca + np.array([0.0, rho])
        th = -math.pi / 2 + np.linspace(0.0, alpha, m)
        arc = center + rho * np.column_stack([np.cos(th), np.sin(th)])
        return np.vstack([_ray(math.pi, R, t, m)[:-1], arc, _ray(alpha, t, R, m)[1:]])
    if name == "spiral":
        turns = float(p.get("turns", 3.0))
        r_out = float(p.get("r_out", 0.4))
        r_in = float(p.get("r_in", 0.04))
        if not 0 < r_in < r_out < R:
            raise CurveError("spiral needs 0 < r_in < r_out < pin_radius")
        r = np.concatenate([np.linspace(R, r_out, m, endpoint=False),
                            np.linspace(r_out, r_in, 4 * m, endpoint=False),
                            np.linspace(r_in, 0.0, m // 4)])
        x = np.clip((r_out - r) / (r_out - r_in), 0.0, 1.0)
        wind = 2 * math.pi * turns * x * x * (3 - 2 * x)
        arm_a = np.column_stack([r * np.cos(math.pi + wind), r * np.sin(math.pi + wind)])
        arm_b = np.column_stack([r * np.cos(alpha + wind), r * np.sin(alpha + wind)])[::-1]
        return np.vstack([arm_a[:-1], arm_b])
    if name in ("zigzag", "random_wiggle", "bump"):
        rc = float(p.get("radius", 1.0))
        pa, pb = rc * ua, rc * ub
        if name == "zigzag":
            k = int(p.get("k", 4))
            amp = float(p.get("amplitude", 0.15))

            def offset(s):
                tri = 2 * np.abs(((s * k * 2 + 1) % 2) - 1) - 1
                return amp * tri * _taper(s)
        elif name == "random_wiggle":
            rng = np.random.default_rng(seed)
            modes = int(p.get("modes", 6))
            amp = float(p.get("amplitude", 0.25))
            coef = rng.normal(size=modes) / np.arange(1, modes + 1)

            def offset(s):
                wave = sum(c * np.sin((j + 1) * math.pi * s) for j, c in enumerate(coef))
                return amp * wave * _taper(s)
        else:
            h = float(p.get("height", 0.3))

            def offset(s):
                return h * np.sin(math.pi * s) ** 2
        if name == "bump" and beta >= math.pi:
            # straight chord along the x-axis: raise the bump towards +y
            interior = _chord_path(pa, pb, lambda s: np.zeros_like(s), m)
            interior[:, 1] = float(p.get("height", 0.3)) * np.sin(math.pi * np.linspace(0, 1, m)) ** 2
        else:
            interior = _chord_path(pa, pb, offset, m)
        return np.vstack([_ray(math.pi, R, rc, m)[:-1], interior, _ray(alpha, rc, R, m)[1:]])
    raise CurveError(f"unknown generator {name!r}")


def _sample_dense(dense: np.ndarray, n: int) -> np.ndarray:
    d = np.hypot(*np.diff(dense, axis=0).T)
    keep = d > 0
    dense = np.vstack([dense[:1], dense[1:][keep]])
    s = np.concatenate([[0.0], np.cumsum(d[keep])])
    t = np.linspace(0.0, s[-1], n)
    return np.column_stack([np.interp(t, s, dense[:, 0]), np.interp(t, s, dense[:, 1])])


def build_initial_curve(spec: InitialCurveSpec) -> PlanarCurve:
    """Realize an :class:`InitialCurveSpec` as an embedded radial-end polyline.

    Generators are laid out in the canonical frame (first end on ``L_pi``)
    and rotated onto ``angle_a``. ``wedge`` and an unrounded ``bent_line``
    put a node exactly on the corner when ``n`` is odd. The closed
    generators ``circle`` and ``angenent_oval`` ignore the end angles.
    """
    if spec.n < 3:
        raise CurveError("n must be at least 3")
    if spec.generator in ("circle", "angenent_oval"):
        return _closed_generator(spec)
    if spec.generator == "from_points":
        pts = np.asarray(spec.params["points"], dtype=float)
        if spec.params.get("closed", False):
            curve = PlanarCurve(pts, _chord_params(pts, closed=True), None, True)
        else:
            curve = make_radial_curve(pts, spec.angle_a, spec.angle_b)
        rep = embeddedness_check(curve)
        if not rep.ok:
            raise EmbeddingError(rep.pair)
        return curve
    alpha = _wrap(spec.angle_b - spec.angle_a + math.pi)
    dense = _dense_canonical(spec.generator, alpha, spec.pin_radius, dict(spec.params), spec.seed)
    pts = _sample_dense(dense, spec.n)
    if spec.generator == "random_wiggle":
        amp = float(spec.params.get("amplitude", 0.25))
        for _ in range(20):
            trial = make_radial_curve(pts, math.pi, alpha, spec.pin_radius)
            if embeddedness_check(trial).ok:
                break
            amp *= 0.5
            p = dict(spec.params, amplitude=amp)
            pts = _sample_dense(_dense_canonical("random_wiggle", alpha, spec.pin_radius, p, spec.seed), spec.n)
    # snap the end nodes exactly onto the rays
    pts[0] = [-spec.pin_radius, 0.0]
    pts[-1] = [spec.pin_radius * math.cos(alpha), spec.pin_radius * math.sin(alpha)]
    rot = spec.angle_a - math.pi
    c, s = math.cos(rot), math.sin(rot)
    if rot != 0.0:
        pts = pts @ np.array([[c, s], [-s, c]])
    curve = make_radial_curve(pts, _wrap(spec.angle_a), _wrap(spec.angle_b), spec.pin_radius,
                              params=np.linspace(0.0, 1.0, spec.n))
    rep = embeddedness_check(curve)
    if not rep.ok:
        raise EmbeddingError(rep.pair)
    return curve


def _closed_generator(spec: InitialCurveSpec) -> PlanarCurve:
    p = spec.params
    if spec.generator == "circle":
        radius = float(p.get("radius", 1.0))
        if radius <= 0:
            raise CurveError("circle radius must be positive")
        return circle_curve(radius, spec.n, tuple(p.get("center", (0.0, 0.0))))
    from .exact import angenent_oval  # the exact module depends on this one

    return angenent_oval(float(p.get("a", 5.0)), float(p.get("t", 3.0)), spec.n)


def circle_curve(radius: float, n: int, center=(0.0, 0.0), start: float = 0.0) -> PlanarCurve:
    """Closed anticlockwise circle polyline starting at angle ``start``."""
    th = start + 2 * math.pi * np.arange(n) / n
    pts = np.column_stack([center[0] + radius * np.cos(th), center[1] + radius * np.sin(th)])
    return PlanarCurve(pts, np.arange(n) / n, None, True)


# ---------------------------------------------------------------------------
# tangents and curvature


def segment_angles(curve: PlanarCurve) -> np.ndarray:
    """Continuous lift of the segment direction angles.

    The first segment angle is taken in (-pi, pi]; raises :class:`UnwrapError`
    when adjacent segments turn by pi - 1e-3 or more.
    """
    d = curve.segments
    raw = np.arctan2(d[:, 1], d[:, 0])
    turn = np.diff(raw)
    turn = (turn + np.pi) % (2 * np.pi) - np.pi
    bad = np.abs(turn) >= np.pi - UNWRAP_MARGIN
    if bad.any():
        i = int(np.argmax(bad))
        raise UnwrapError(i + 1, float(abs(turn[i])))
    if curve.closed:
        closing = (raw[0] - raw[-1] + np.pi) % (2 * np.pi) - np.pi
        if abs(closing) >= np.pi - UNWRAP_MARGIN:
            raise UnwrapError(0, float(abs(closing)))
    return raw[0] + np.concatenate([[0.0], np.cumsum(turn)])


def tangent_lift(curve: PlanarCurve) -> TangentField:
    """Continuous tangent angle at every node.

    Interior nodes use the length-weighted average of the two adjacent
    segment angles (the tangent of the interpolating parabola); end nodes use
    their single segment. For closed curves the lift increases by the
    turning number times 2 pi around the loop and is reported for one period.
    """
    phi = segment_angles(curve)
    h = curve.segment_lengths
    if curve.closed:
        phi_prev = np.concatenate([[phi[-1] - 2 * np.pi * _turning_number(curve, phi)], phi[:-1]])
        h_prev = np.roll(h, 1)
        psi = (h * phi_prev + h_prev * phi) / (h + h_prev)
    else:
        psi = np.empty(curve.n)
        psi[0] = phi[0]
        psi[-1] = phi[-1]
        hl, hr = h[:-1], h[1:]
        psi[1:-1] = (hr * phi[:-1] + hl * phi[1:]) / (hl + hr)
    return TangentField(psi)


def _turning_number(curve: PlanarCurve, phi: np.ndarray) -> int:
    closing = (phi[0] - phi[-1] + np.pi) % (2 * np.pi) - np.pi
    total = phi[-1] - phi[0] + closing
    return int(round(total / (2 * np.pi)))


def arclengths(curve: PlanarCurve) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(curve.segment_lengths[: curve.n - 1])])


def discrete_curvature(curve: PlanarCurve, lift: TangentField | None = None) -> CurvatureField:
    """Signed curvature: turning of the tangent per unit length around each node.

    Interior nodes use the centred difference of the segment (half-node)
    angles over the dual length ``(h_{i-1} + h_i) / 2``. Open-curve end nodes
    take the one-sided difference of the node lift.
    """
    h = curve.segment_lengths
    if np.any(h < MIN_SEGMENT):
        raise CurveError("degenerate segment: arclength step is zero")
    phi = segment_angles(curve)
    s = arclengths(curve)
    if curve.closed:
        turn = np.diff(np.concatenate([[phi[-1] - 2 * np.pi * _turning_number(curve, phi)], phi]))
        kappa = turn / (0.5 * (h + np.roll(h, 1)))
        return CurvatureField(kappa, s)
    if lift is None:
        lift = tangent_lift(curve)
    kappa = np.empty(curve.n)
    kappa[1:-1] = np.diff(phi) / (0.5 * (h[:-1] + h[1:]))
    kappa[0] = (lift.psi[1] - lift.psi[0]) / h[0]
    kappa[-1] = (lift.psi[-1] - lift.psi[-2]) / h[-1]
    return CurvatureField(kappa, s)


# ---------------------------------------------------------------------------
# resampling


def resample_points(pts: np.ndarray, n: int, closed: bool = False) -> np.ndarray:
    """Array-level core of :func:`resample_arclength`."""
    d = np.roll(pts, -1, axis=0) - pts if closed else np.diff(pts, axis=0)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(d[:, 0], d[:, 1]))])
    if closed:
        spl = CubicSpline(s, np.vstack([pts, pts[:1]]), axis=0, bc_type="periodic")
        return spl(s[-1] * np.arange(n) / n)
    new = CubicSpline(s, pts, axis=0)(np.linspace(0.0, s[-1], n))
    new[0], new[-1] = pts[0], pts[-1]
    return new


def resample_arclength(curve: PlanarCurve, n: int) -> PlanarCurve:
    """Redistribute ``n`` nodes at equal spacing of the chord-length parameter.

    Coordinates are interpolated with a cubic spline in chord length
    (periodic for closed curves), so the image moves by O(h^4) on smooth
    curves. End nodes are kept; clamp indices are recomputed.
    """
    if n < 3:
        raise CurveError("n must be at least 3")
    new = resample_points(curve.points, n, curve.closed)
    if curve.closed:
        return PlanarCurve(new, np.arange(n) / n, None, True)
    em = curve.end_meta
    if em is None:
        return PlanarCurve(new, np.linspace(0.0, 1.0, n))
    lo, hi = detect_clamps(new, em.angle_a, em.angle_b)
    return PlanarCurve(new, np.linspace(0.0, 1.0, n),
                       RadialEndSpec(em.angle_a, em.angle_b, lo, hi, em.pin_radius))


# ---------------------------------------------------------------------------
# embeddedness


@dataclass(frozen=True)
class EmbeddingReport:
    ok: bool
    pair: tuple[int, int] | None = None


def _segment_distance(p1, p2, q1, q2):
    """Vectorized distance between segments p1p2 and q1q2 (rows)."""

    def pt_seg(p, a, b):
        ab = b - a
        t = np.clip(np.einsum("ij,ij->i", p - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
        proj = a + t[:, None] * ab
        return np.hypot(*(p - proj).T)

    def orient(a, b, c):
        return (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])

    o1, o2 = orient(p1, p2, q1), orient(p1, p2, q2)
    o3, o4 = orient(q1, q2, p1), orient(q1, q2, p2)
    crossing = (o1 * o2 < 0) & (o3 * o4 < 0)
    d = np.minimum.reduce([pt_seg(p1, q1, q2), pt_seg(p2, q1, q2), pt_seg(q1, p1, p2), pt_seg(q2, p1, p2)])
    return np.where(crossing, 0.0, d)


def embeddedness_check(curve: PlanarCurve, tol: float = EMBED_TOL) -> EmbeddingReport:
    """Sort-and-sweep segment intersection test over non-adjacent segments.

    Segments are swept in order of their left x-extent; only pairs whose
    x- and y-extents overlap (inflated by ``tol``) are tested exactly. The
    reported pair is the lexicographically first intersecting one.
    """
    p = curve.points
    q = np.roll(p, -1, axis=0) if curve.closed else p[1:]
    a = p if curve.closed else p[:-1]
    m = len(a)
    xlo = np.minimum(a[:, 0], q[:, 0]) - tol
    xhi = np.maximum(a[:, 0], q[:, 0]) + tol
    ylo = np.minimum(a[:, 1], q[:, 1]) - tol
    yhi = np.maximum(a[:, 1], q[:, 1]) + tol
    order = np.argsort(xlo, kind="stable")
    xs = xlo[order]
    stop = np.searchsorted(xs, xhi[order], side="right")
    start = np.arange(1, m + 1)
    counts = np.maximum(stop - start, 0)
    if counts.sum() == 0:
        return EmbeddingReport(True)
    ii = np.repeat(np.arange(m), counts)
    offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
    jj = start[ii] + offs
    i_seg, j_seg = order[ii], order[jj]
    lo_, hi_ = np.minimum(i_seg, j_seg), np.maximum(i_seg, j_seg)
    keep = (hi_ - lo_ > 1) & (ylo[lo_] <= yhi[hi_]) & (ylo[hi_] <= yhi[lo_])
    if curve.closed:
        keep &= ~((lo_ == 0) & (hi_ == m - 1))
    lo_, hi_ = lo_[keep], hi_[keep]
    if len(lo_) == 0:
        return EmbeddingReport(True)
    d = _segment_distance(a[lo_], q[lo_], a[hi_], q[hi_])
    hit = d <= tol
    if not hit.any():
        return EmbeddingReport(True)
    cand = np.lexsort((hi_[hit], lo_[hit]))[0]
    return EmbeddingReport(False, (int(lo_[hit][cand]), int(hi_[hit][cand])))


# ---------------------------------------------------------------------------
# distances between polylines


def point_polyline_distance(pts: np.ndarray, poly: np.ndarray, closed: bool = False, k: int = 6) -> np.ndarray:
    """Distance from each point to a polyline, via the segments at the k nearest vertices."""
    tree = cKDTree(poly)
    k = min(k, len(poly))
    _, idx = tree.query(pts, k=k)
    idx = np.atleast_2d(idx)
    if idx.shape[0] != len(pts):
        idx = idx.T
    m = len(poly)
    best = np.full(len(pts), np.inf)
    for col in range(idx.shape[1]):
        for shift in (-1, 0):
            j = idx[:, col] + shift
            if closed:
                j = j % m
                a, b = poly[j], poly[(j + 1) % m]
            else:
                j = np.clip(j, 0, m - 2)
                a, b = poly[j], poly[j + 1]
            ab = b - a
            t = np.clip(np.einsum("ij,ij->i", pts - a, ab) / np.einsum("ij,ij->i", ab, ab), 0.0, 1.0)
            d = np.hypot(*(pts - a - t[:, None] * ab).T)
            best = np.minimum(best, d)
    return best


def hausdorff_distance(a: np.ndarray, b: np.ndarray, closed_a: bool = False, closed_b: bool = False) -> float:
    """Symmetric Hausdorff distance between two polylines (vertex-to-polyline both ways)."""
    return float(max(point_polyline_distance(a, b, closed_b).max(),
                     point_polyline_distance(b, a, closed_a).max()))
