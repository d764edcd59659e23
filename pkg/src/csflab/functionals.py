"""Geometric functionals of polylines: swept area, turning, Harnack quantity,
winding functions, support function and polar-graph views.

Swept area is evaluated exactly per segment, so additivity and the reflection
symmetries hold to rounding error rather than to a discretization tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .curve import CurveError, PlanarCurve, TangentField, _frozen, arclengths, tangent_lift

PAIR_GRID_SIDE = 250


@dataclass(frozen=True, eq=False)
class SweptAreaPrefix:
    """Prefix values ``S[i] = A(0, i)``; for closed curves ``S`` has ``n + 1`` entries."""

    S: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "S", _frozen(self.S))

    def area(self, v, w):
        """``A(v, w) = S[w] - S[v]``; accepts scalars or index arrays."""
        return self.S[w] - self.S[v]

    @property
    def total(self) -> float:
        return float(self.S[-1])


@dataclass(frozen=True)
class ExtremaBounds:
    a_minus: float
    a_plus: float
    minus_pair: tuple[int, int]
    plus_pair: tuple[int, int]

    @property
    def spread(self) -> float:
        return self.a_plus - self.a_minus


def segment_areas(points: np.ndarray, closed: bool = False) -> np.ndarray:
    p = points
    q = np.roll(p, -1, axis=0) if closed else p[1:]
    if not closed:
        p = p[:-1]
    return 0.5 * (q[:, 0] * p[:, 1] - q[:, 1] * p[:, 0])


def swept_area_prefix(curve: PlanarCurve) -> SweptAreaPrefix:
    a = segment_areas(curve.points, curve.closed)
    return SweptAreaPrefix(np.concatenate([[0.0], np.cumsum(a)]))


def prefix_extrema(values: np.ndarray) -> tuple[float, tuple[int, int], float, tuple[int, int]]:
    """Max and min of ``values[w] - values[v]`` over ``v <= w`` in one pass.

    Returns ``(max, (v, w), min, (v, w))``. Ties resolve to the smallest ``w``
    and, for that ``w``, the earliest running extremum ``v``.
    """
    g = np.asarray(values, dtype=float)
    idx = np.arange(len(g))
    run_min = np.minimum.accumulate(g)
    run_max = np.maximum.accumulate(g)
    # index of the first node attaining the running extremum
    new_min = np.concatenate([[True], g[1:] < run_min[:-1]])
    new_max = np.concatenate([[True], g[1:] > run_max[:-1]])
    arg_min = np.maximum.accumulate(np.where(new_min, idx, 0))
    arg_max = np.maximum.accumulate(np.where(new_max, idx, 0))
    up = g - run_min
    down = g - run_max
    wp = int(np.argmax(up))
    wm = int(np.argmin(down))
    return float(up[wp]), (int(arg_min[wp]), wp), float(down[wm]), (int(arg_max[wm]), wm)


def extrema_bounds(prefix: SweptAreaPrefix) -> ExtremaBounds:
    """A_+ and A_- of the swept area over all ordered node pairs, with witnesses."""
    hi, hp, lo, lp = prefix_extrema(prefix.S)
    return ExtremaBounds(lo, hi, lp, hp)


def brute_force_extrema(S: np.ndarray) -> tuple[float, float]:
    """O(n^2) reference for :func:`prefix_extrema` (tests only)."""
    S = np.asarray(S, dtype=float)
    diff = S[None, :] - S[:, None]
    mask = np.triu(np.ones_like(diff, dtype=bool))
    return float(diff[mask].min()), float(diff[mask].max())


def turning(lift: TangentField, v, w):
    """``Psi(v, w) = psi(w) - psi(v)`` for ``v <= w``."""
    v_arr, w_arr = np.asarray(v), np.asarray(w)
    if np.any(v_arr > w_arr):
        raise ValueError("turning requires v <= w")
    return lift.psi[w] - lift.psi[v]


def harnack(prefix: SweptAreaPrefix, lift: TangentField, t: float, v, w):
    """``H(v, w, t) = A(v, w) - t Psi(v, w)``."""
    if t < 0:
        raise ValueError("t must be non-negative")
    return prefix.area(v, w) - t * turning(lift, v, w)


def harnack_extrema(prefix: SweptAreaPrefix, lift: TangentField, t: float):
    """Exact extremes of H over all ordered pairs, via prefix extrema of ``S - t psi``."""
    return prefix_extrema(prefix.S[: len(lift.psi)] - t * lift.psi)


# ---------------------------------------------------------------------------
# winding functions


@dataclass(frozen=True, eq=False)
class WindingTrace:
    """``theta`` with the value 0 adopted at the base from both sides.

    ``limit_gap`` is the difference between the two one-sided limits at the
    base, each extrapolated linearly in arclength from its two nearest
    nodes. It is ``O(h^2)`` on a smooth curve and of order one at a corner,
    where the zero convention is not justified; ``nan`` if a side has fewer
    than two nodes.
    """

    base: int
    theta: np.ndarray
    limit_gap: float = math.nan

    def __post_init__(self):
        object.__setattr__(self, "theta", _frozen(self.theta))


def _unwrap_from(raw: np.ndarray, start: int) -> np.ndarray:
    """Continuous version of ``raw`` with ``out[start] = raw[start]``, unwrapped outward."""
    out = np.empty_like(raw)
    out[start] = raw[start]
    fwd = np.diff(raw[start:])
    fwd = (fwd + np.pi) % (2 * np.pi) - np.pi
    out[start + 1:] = raw[start] + np.cumsum(fwd)
    back = np.diff(raw[: start + 1][::-1])
    back = (back + np.pi) % (2 * np.pi) - np.pi
    out[:start][::-1] = raw[start] + np.cumsum(back)
    return out


def winding_trace(curve: PlanarCurve, base: int, lift: TangentField | None = None) -> WindingTrace:
    """Winding function based at node ``base``.

    ``theta[u]`` is the continuous angle from the tangent at ``base`` to the
    chord towards ``u`` (negated chord for ``u < base``), with
    ``theta[base] = 0``. At the base itself the chord is replaced by the
    tangent, which is the common limit from both sides.
    """
    if lift is None:
        lift = tangent_lift(curve)
    p = curve.points
    c = p - p[base]
    dist = np.hypot(c[:, 0], c[:, 1])
    others = np.arange(curve.n) != base
    if np.any(dist[others] == 0):
        raise CurveError("coincident points: winding function undefined")
    sign = np.where(np.arange(curve.n) < base, -1.0, 1.0)
    raw = np.arctan2(sign * c[:, 1], sign * c[:, 0]) - lift.psi[base]
    raw[base] = 0.0
    raw = (raw + np.pi) % (2 * np.pi) - np.pi
    theta = _unwrap_from(raw, base)
    gap = math.nan
    if 2 <= base <= curve.n - 3:
        s = arclengths(curve)
        lo, hi = (base - 1, base - 2), (base + 1, base + 2)
        lim = [theta[a] + (theta[a] - theta[b]) * (s[base] - s[a]) / (s[a] - s[b]) for a, b in (lo, hi)]
        gap = abs(lim[1] - lim[0])
    return WindingTrace(base, theta, gap)


def winding_identity_check(curve: PlanarCurve, c: int, d: int, lift: TangentField | None = None) -> float:
    """``|Psi(c, d) - (theta_c(d) - theta_d(c))|`` on the sub-arc between c and d."""
    if not c < d:
        raise ValueError("need c < d")
    if lift is None:
        lift = tangent_lift(curve)
    sub = PlanarCurve(curve.points[c : d + 1], curve.params[c : d + 1])
    sub_lift = TangentField(lift.psi[c : d + 1])
    th_c = winding_trace(sub, 0, sub_lift).theta[-1]
    th_d = winding_trace(sub, d - c, sub_lift).theta[0]
    psi = float(lift.psi[d] - lift.psi[c])
    return abs(psi - (th_c - th_d))


# ---------------------------------------------------------------------------
# support function and polar graphs


@dataclass(frozen=True, eq=False)
class SupportField:
    D: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "D", _frozen(self.D))


def support_function(curve: PlanarCurve, lift: TangentField | None = None) -> SupportField:
    """``D = <gamma, -nu>`` with ``-nu = *T = (-sin psi, cos psi)``."""
    if lift is None:
        lift = tangent_lift(curve)
    x, y = curve.points[:, 0], curve.points[:, 1]
    return SupportField(-x * np.sin(lift.psi) + y * np.cos(lift.psi))


@dataclass(frozen=True, eq=False)
class PolarGraphView:
    phis: np.ndarray
    rs: np.ndarray
    V: np.ndarray

    def __post_init__(self):
        for name in ("phis", "rs", "V"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    def area(self, i, j):
        return self.V[j] - self.V[i]


@dataclass(frozen=True)
class PolarFailure:
    witness_angle: float
    index: int


PHI_FLAT = 1e-12


def polar_view(curve: PlanarCurve) -> PolarGraphView | PolarFailure:
    """View the curve as ``r(phi)`` with ``phi = pi - theta``.

    The polar angle is unwrapped continuously from the first node, whose
    angle is taken in ``(-pi, pi]`` (so ``phi`` starts at 0 on ``L_pi``). Nodes on
    the far radial ends may share a polar angle (the ends are the limits
    ``phi -> 0`` and ``phi -> beta``); any decrease in ``phi``, or a flat
    step away from both extreme angles, is a failure reported with the
    angle that is met twice. ``V`` is the trapezoid quadrature of ``r^2/2``
    in ``phi``.
    """
    p = curve.points
    r = np.hypot(p[:, 0], p[:, 1])
    if np.any(r == 0):
        raise CurveError("a node sits at the origin: polar angle undefined")
    theta = np.unwrap(np.arctan2(p[:, 1], p[:, 0]))
    phi = math.pi - theta
    phi -= 2 * math.pi * math.floor((phi[0] + math.pi) / (2 * math.pi))
    step = np.diff(phi)
    lo, hi = phi[0], phi[-1]
    interior = (np.minimum(phi[:-1], phi[1:]) > lo + PHI_FLAT) & (np.maximum(phi[:-1], phi[1:]) < hi - PHI_FLAT)
    bad = (step < -PHI_FLAT) | ((step <= 0) & interior)
    if bad.any():
        i = int(np.argmax(bad))
        return PolarFailure(float(phi[i + 1]), i + 1)
    V = np.concatenate([[0.0], np.cumsum(0.25 * (r[:-1] ** 2 + r[1:] ** 2) * step)])
    return PolarGraphView(phi, r, V)


# ---------------------------------------------------------------------------
# pair grids


def pair_grid(n: int, extra: list[tuple[int, int]] | None = None, side: int = PAIR_GRID_SIDE):
    """Ordered pairs ``v <= w`` on a strided index set of at most ``side`` nodes.

    The index set always holds the first and last node; ``extra`` pairs
    (prefix-extremal witnesses) are appended. Returns two index arrays.
    """
    if n <= side:
        idx = np.arange(n)
    else:
        idx = np.unique(np.linspace(0, n - 1, side).round().astype(int))
    vv, ww = np.triu_indices(len(idx))
    v, w = idx[vv], idx[ww]
    if extra:
        ev = np.array([min(a, b) for a, b in extra], dtype=int)
        ew = np.array([max(a, b) for a, b in extra], dtype=int)
        v, w = np.concatenate([v, ev]), np.concatenate([w, ew])
    return v, w
