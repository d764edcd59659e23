"""Exact and semi-analytic solutions used as oracles.

* Angenent ovals ``sin y = 2 e^{t-a} cosh(x - a)`` (closed, ancient).
* The grim reaper ``sin y = e^{t-x}`` (translating graph).
* Shrinking circles of radius ``sqrt(R^2 - 2t)`` and static lines.
* The beta-wedge expander at time 1, from the profile ODE for the
  self-similar curvature ``kappa = t^{-1/2} k(psi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad, solve_ivp
from scipy.optimize import brentq

from .curve import (
    CurveError,
    InitialCurveSpec,
    PlanarCurve,
    _frozen,
    build_initial_curve,
    circle_curve,
    hausdorff_distance,
    point_polyline_distance,
)
from .flow import FlowConfig, apply_laplacian, run
from .functionals import polar_view, segment_areas


class OracleError(ValueError):
    """Invalid oracle parameters, or an oracle that failed its own checks."""


@dataclass(frozen=True)
class ExactSolutionSpec:
    kind: str
    a: float = 5.0
    beta: float = math.pi / 2
    t: float = 0.0
    n: int = 1000
    R: float = 1.0
    x_max: float = 10.0

    def __post_init__(self):
        if self.kind not in ("oval", "reaper", "circle", "line", "wedge"):
            raise OracleError(f"unknown exact solution {self.kind!r}")
        if self.kind == "oval" and not self.t < self.a - math.log(2):
            raise OracleError("oval needs t < a - ln 2")
        if self.kind == "wedge" and not 0 < self.beta < math.pi:
            raise OracleError("wedge needs beta in (0, pi)")
        if self.kind == "circle" and not self.R * self.R - 2 * self.t > 0:
            raise OracleError("circle has already become extinct")


# ---------------------------------------------------------------------------
# implicit closed solutions


class ImplicitSolution:
    """A closed exact solution given as the zero set of ``F(x, y, t)``, ``F > 0`` inside."""

    center: tuple[float, float]

    def F(self, p: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def grad(self, p: np.ndarray, t: float) -> np.ndarray:
        raise NotImplementedError

    def extent(self, t: float) -> float:
        """Radius of a disc about ``center`` containing the curve."""
        raise NotImplementedError

    def project(self, p: np.ndarray, t: float, iters: int = 6) -> np.ndarray:
        """Newton projection of points onto the zero set along the gradient."""
        p = np.array(p, dtype=float)
        for _ in range(iters):
            g = self.grad(p, t)
            p = p - (self.F(p, t) / np.einsum("ij,ij->i", g, g))[:, None] * g
        return p

    def dense(self, t: float, m: int = 20000) -> np.ndarray:
        """Dense star-shaped sampling about the centre by bisection along rays."""
        om = 2 * math.pi * np.arange(m) / m
        d = np.column_stack([np.cos(om), np.sin(om)])
        c = np.array(self.center)
        lo = np.zeros(m)
        hi = np.full(m, 1.01 * self.extent(t))
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            inside = self.F(c + mid[:, None] * d, t) > 0
            lo = np.where(inside, mid, lo)
            hi = np.where(inside, hi, mid)
        return self.project(c + (0.5 * (lo + hi))[:, None] * d, t)

    def curve(self, t: float, n: int) -> PlanarCurve:
        """``n`` nodes on the exact curve, equally spaced in arclength, anticlockwise."""
        dense = self.dense(t)
        ext = np.vstack([dense, dense[:1]])
        s = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(ext, axis=0).T))])
        u = s[-1] * np.arange(n) / n
        pts = np.column_stack([np.interp(u, s, ext[:, 0]), np.interp(u, s, ext[:, 1])])
        return PlanarCurve(self.project(pts, t), np.arange(n) / n, None, True)

    def distance(self, curve: PlanarCurve, t: float) -> float:
        """Hausdorff distance from a closed polyline to the exact curve at time ``t``."""
        return hausdorff_distance(curve.points, self.dense(t), closed_a=True, closed_b=True)


class AngenentOval(ImplicitSolution):
    def __init__(self, a: float):
        self.a = float(a)
        self.center = (self.a, math.pi / 2)

    def _c(self, t: float) -> float:
        if not t < self.a - math.log(2):
            raise OracleError("oval needs t < a - ln 2")
        return 2 * math.exp(t - self.a)

    def F(self, p, t):
        return np.sin(p[:, 1]) - self._c(t) * np.cosh(p[:, 0] - self.a)

    def grad(self, p, t):
        return np.column_stack([-self._c(t) * np.sinh(p[:, 0] - self.a), np.cos(p[:, 1])])

    def F_t(self, p, t):
        return -self._c(t) * np.cosh(p[:, 0] - self.a)

    def extent(self, t):
        c = self._c(t)
        return math.hypot(math.acosh(1 / c), math.pi / 2 - math.asin(c))

    def half_width(self, t: float) -> float:
        return math.acosh(1 / self._c(t))


class ShrinkingCircle(ImplicitSolution):
    def __init__(self, R: float, center=(0.0, 0.0)):
        self.R = float(R)
        self.center = tuple(center)

    def radius(self, t: float) -> float:
        r2 = self.R ** 2 - 2 * t
        if r2 <= 0:
            raise OracleError("circle has already become extinct")
        return math.sqrt(r2)

    def F(self, p, t):
        q = p - np.array(self.center)
        return self.radius(t) ** 2 - (q[:, 0] ** 2 + q[:, 1] ** 2)

    def grad(self, p, t):
        return -2 * (p - np.array(self.center))

    def F_t(self, p, t):
        return np.full(len(p), -2.0)

    def extent(self, t):
        return self.radius(t)

    def curve(self, t: float, n: int) -> PlanarCurve:
        return circle_curve(self.radius(t), n, self.center)


def angenent_oval(a: float, t: float, n: int) -> PlanarCurve:
    """Closed anticlockwise polyline of ``n`` nodes on the Angenent oval at time ``t``."""
    return AngenentOval(a).curve(t, n)


def circle_radius(R: float, t: float) -> float:
    return ShrinkingCircle(R).radius(t)


def static_line(angle: float, n: int, half_length: float = 8.0) -> PlanarCurve:
    """Straight line through the origin, traversed in direction ``angle``."""
    from .curve import make_radial_curve

    s = np.linspace(-half_length, half_length, n)
    pts = np.column_stack([s * math.cos(angle), s * math.sin(angle)])
    return make_radial_curve(pts, angle + math.pi, angle, half_length)


# ---------------------------------------------------------------------------
# grim reaper


def grim_reaper(t: float, x_max: float, n: int, x_min: float | None = None):
    """Samples ``(x, y)`` of ``y = arcsin(e^{t-x})`` on ``(t, x_max]``."""
    if x_min is None:
        x_min = t + 1e-9
    if x_min <= t:
        raise OracleError("grim reaper is only defined for x > t")
    if x_max <= x_min:
        raise OracleError("empty x range")
    x = np.linspace(x_min, x_max, n)
    return x, np.arcsin(np.exp(t - x))


def reaper_y(x, t):
    x = np.asarray(x, dtype=float)
    if np.any(x <= t):
        raise OracleError("grim reaper is only defined for x > t")
    return np.arcsin(np.exp(t - x))


def reaper_gcsf_residual(t: float, x_min: float, x_max: float, n: int) -> float:
    """Sup of ``y_t - y_xx / (1 + y_x^2)`` with centred differences in x and the exact ``y_t``."""
    x, y = grim_reaper(t, x_max, n, x_min)
    h = x[1] - x[0]
    e = np.exp(t - x)
    y_t = e / np.sqrt(1 - e * e)
    yx = (y[2:] - y[:-2]) / (2 * h)
    yxx = (y[2:] - 2 * y[1:-1] + y[:-2]) / (h * h)
    return float(np.max(np.abs(y_t[1:-1] - yxx / (1 + yx * yx))))


# ---------------------------------------------------------------------------
# residual harness


def csf_residual(solution, t: float, n: int, dt: float) -> float:
    """Sup residual of the discrete flow operator on exact samples.

    ``solution`` is an :class:`ImplicitSolution` (oval or circle) or the
    string ``"line"``. The exact normal speed ``-F_t / |grad F|`` is replaced
    by the forward difference ``-F(p, t + dt) / (dt |grad F|)`` and compared
    with the normal component of the three-point arclength Laplacian, so
    the residual is ``O(h^2 + dt)``.
    """
    if isinstance(solution, str):
        if solution != "line":
            raise OracleError(f"unknown residual target {solution!r}")
        pts = static_line(0.3, n).points
        return float(np.abs(apply_laplacian(pts, pts)).max())
    curve = solution.curve(t, n)
    p = curve.points
    g = solution.grad(p, t)
    gn = np.hypot(g[:, 0], g[:, 1])
    nrm = g / gn[:, None]
    speed = -solution.F(p, t + dt) / (dt * gn)
    lap = apply_laplacian(p, p, closed=True)
    return float(np.max(np.abs(speed - np.einsum("ij,ij->i", lap, nrm))))


# ---------------------------------------------------------------------------
# beta-wedge expander


def _phi(q: np.ndarray) -> np.ndarray:
    """``-ln(sin q) / cos(q)^2``, evaluated stably on (0, pi/2]."""
    q = np.asarray(q, dtype=float)
    c = np.cos(q)
    c2 = c * c
    with np.errstate(divide="ignore", invalid="ignore"):
        near = -np.log1p(-c2) / (2 * c2)
        far = -np.log(np.sin(q)) / c2
    out = np.where(q < math.pi / 4, far, near)
    return np.where(c2 < 1e-300, 0.5, out)


def half_width(K: float) -> float:
    """Tangent-angle span from an end to the peak for peak curvature ``K``."""
    val, _ = quad(lambda q: K / math.sqrt(K * K + float(_phi(q))), 0.0, math.pi / 2,
                  epsabs=1e-14, epsrel=1e-13, limit=400)
    return val


def solve_peak_curvature(beta: float, tol: float = 1e-12) -> float:
    """Bisect the peak curvature so that the profile spans ``pi - beta`` in tangent angle."""
    target = (math.pi - beta) / 2
    if not 0 < target < math.pi / 2:
        raise OracleError("wedge needs beta in (0, pi)")
    lo, hi = 1e-8, 1.0
    while half_width(hi) < target:
        hi *= 2
        if hi > 1e8:
            raise OracleError("could not bracket the peak curvature")
    if half_width(lo) > target:
        raise OracleError("could not bracket the peak curvature")
    return brentq(lambda K: half_width(K) - target, lo, hi, xtol=tol * 1e-3, rtol=1e-15)


@dataclass(frozen=True, eq=False)
class WedgeProfile:
    """The beta-wedge expander at ``t = 1``, ordered from the ``L_pi`` end to the ``L_alpha`` end.

    ``psis`` increases from near 0 to near ``alpha = pi - beta``. Table
    queries take node indices into these arrays.
    """

    beta: float
    kappa_max: float
    psis: np.ndarray
    kappa_beta: np.ndarray
    gamma_beta: np.ndarray
    D_beta: np.ndarray
    phis: np.ndarray
    V_prefix: np.ndarray
    S_prefix: np.ndarray

    def __post_init__(self):
        for name in ("psis", "kappa_beta", "gamma_beta", "D_beta", "phis", "V_prefix", "S_prefix"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def alpha(self) -> float:
        return math.pi - self.beta

    def Psi(self, i, j):
        return self.psis[j] - self.psis[i]

    def V(self, i, j):
        return self.V_prefix[j] - self.V_prefix[i]

    @property
    def total_V(self) -> float:
        return float(self.V_prefix[-1] - self.V_prefix[0])

    def kappa_at(self, psi):
        """``kappa_beta`` at arbitrary tangent angles in ``[0, alpha]`` (zero at the ends)."""
        xp = np.concatenate([[0.0], self.psis, [self.alpha]])
        fp = np.concatenate([[0.0], self.kappa_beta, [0.0]])
        return np.interp(psi, xp, fp)

    def gamma_at(self, psi):
        return np.column_stack([np.interp(psi, self.psis, self.gamma_beta[:, 0]),
                                np.interp(psi, self.psis, self.gamma_beta[:, 1])])

    def identity_errors(self) -> dict:
        """Sup errors of the three exact identities at ``t = 1``."""
        return {
            "total_V": abs(self.total_V - self.alpha),
            "V_minus_Psi": float(np.ptp(self.V_prefix - self.psis)),
            "kappa_minus_half_D": float(np.max(np.abs(self.kappa_beta - 0.5 * self.D_beta))),
        }


def _left_half(K: float, alpha: float, q_min: float, m: int):
    """Integrate the left half of the profile from the peak out to ``q = q_min``.

    The independent variable is ``tau = ln q``; the state is the tangent
    angle relative to the peak and the position relative to the peak.
    """

    def rhs(tau, z):
        q = math.exp(tau)
        root = math.sqrt(K * K + float(_phi(q)))
        speed = q / (math.sin(q) * root)
        psi = alpha / 2 + z[0]
        return [q * K / root, speed * math.cos(psi), speed * math.sin(psi)]

    tau0, tau1 = math.log(math.pi / 2), math.log(q_min)
    taus = np.linspace(tau0, tau1, m)
    sol = solve_ivp(rhs, (tau0, tau1), [0.0, 0.0, 0.0], method="DOP853", t_eval=taus,
                    rtol=1e-12, atol=1e-14)
    if not sol.success:
        raise OracleError(f"profile integration failed: {sol.message}")
    return np.exp(taus), sol.y[0], sol.y[1], sol.y[2]


def _expander_profile(beta: float, m: int = 6000, q_min: float = 1e-14) -> WedgeProfile:
    alpha = math.pi - beta
    K = solve_peak_curvature(beta)
    q, psi_rel, xr, yr = _left_half(K, alpha, q_min, m)
    psi_L = alpha / 2 + psi_rel  # psi_rel <= 0 as tau decreases
    # the tail beyond q_min contributes below 1e-15 to the asymptote integrals
    I = -yr[-1]
    P = np.array([-I * math.tan(alpha / 2), I])
    left = P + np.column_stack([xr, yr])
    b = (math.pi + alpha) / 2
    rot = np.array([[math.cos(2 * b), math.sin(2 * b)], [math.sin(2 * b), -math.cos(2 * b)]])
    right = left @ rot.T
    gamma = np.vstack([left[::-1], right[1:]])
    psis = np.concatenate([psi_L[::-1], (alpha - psi_L)[1:]])
    kap = K * np.sin(q)
    kappa = np.concatenate([kap[::-1], kap[1:]])
    D = -gamma[:, 0] * np.sin(psis) + gamma[:, 1] * np.cos(psis)
    S = np.concatenate([[0.0], np.cumsum(segment_areas(gamma))])
    pv = polar_view(PlanarCurve(gamma, np.arange(len(gamma), dtype=float)))
    if not hasattr(pv, "V"):
        raise OracleError("expander profile is not a polar graph: sign convention fault")
    return WedgeProfile(beta, K, psis, kappa, gamma, D, pv.phis, pv.V, S)


@lru_cache(maxsize=16)
def _simulated_wedge(beta: float, n: int = 1201) -> np.ndarray:
    """Time-1 snapshot of the flow from the unrounded bent line with opening ``beta``."""
    spec = InitialCurveSpec("bent_line", n=n, angle_a=math.pi, angle_b=math.pi - beta, pin_radius=8.0)
    init = build_initial_curve(spec)
    h = init.length / (n - 1)
    trace = run(init, FlowConfig(dt=h * h, n_nodes=n, t_end=1.0, pin_radius=8.0,
                                 record_times=(1.0,)), monitor=False)
    return np.array(trace.snapshots[-1].curve.points)


def cross_validation_distance(profile: WedgeProfile, radius: float = 4.0) -> float:
    """Sup distance between the ODE profile and the simulated wedge flow at ``t = 1``.

    Only profile points within ``radius`` of the origin are compared; the
    simulated polyline is used whole.
    """
    sim = _simulated_wedge(round(profile.beta, 12))
    g = profile.gamma_beta
    near = np.hypot(g[:, 0], g[:, 1]) <= radius
    d1 = point_polyline_distance(g[near], sim).max()
    s_near = sim[np.hypot(sim[:, 0], sim[:, 1]) <= radius]
    d2 = point_polyline_distance(s_near, g).max()
    return float(max(d1, d2))


@lru_cache(maxsize=32)
def wedge_profile(beta: float, tol: float = 1e-3, cross_validate: bool = True) -> WedgeProfile:
    """The time-1 beta-wedge expander and its tables.

    Substituting ``kappa = t^{-1/2} k(psi)`` into ``kappa_t = kappa^2
    kappa_psipsi + kappa^3`` gives ``k'' = -k - 1/(2k)`` with first integral
    ``k'^2 = K^2 + ln K - k^2 - ln k``. With ``k = K sin q`` the half-width
    in ``psi`` is a regular integral in ``q``; ``K`` is found by bisection.
    Positions come from ``d gamma / d psi = e^{i psi} / k`` integrated from
    the peak, translated so both ends are asymptotic to their rays.

    When ``cross_validate`` is set, the profile is compared with a simulated
    bent-line flow at ``t = 1`` and a mismatch above ``10 tol`` raises
    :class:`OracleError`.
    """
    if not 0 < beta < math.pi:
        raise OracleError("wedge needs beta in (0, pi)")
    profile = _expander_profile(beta)
    errs = profile.identity_errors()
    if max(errs.values()) > 10 * tol:
        raise OracleError(f"expander profile fails its identities: {errs}")
    if cross_validate:
        d = cross_validation_distance(profile)
        if d > 10 * tol:
            raise OracleError(
                f"profile and simulated bent-line flow differ by {d:.3g} at t=1: sign/convention fault"
            )
    return profile


def wedge_flow_curve(profile: WedgeProfile, t: float) -> np.ndarray:
    """Points of the self-similar wedge flow ``sqrt(t) gamma_beta`` at time ``t``."""
    if t <= 0:
        raise OracleError("the expander is only defined for t > 0")
    return math.sqrt(t) * np.asarray(profile.gamma_beta)


def oval_curve_error(curve: PlanarCurve, a: float, t: float) -> float:
    if not curve.closed:
        raise CurveError("oval comparison needs a closed curve")
    return AngenentOval(a).distance(curve, t)
