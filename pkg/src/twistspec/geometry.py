"""Cross-sections, twist profiles and the twisted-tube map.

A twisted tube is the image of the straight tube R x omega under

    (x1, x2, x3) -> (x1, x2 cos th(x1) + x3 sin th(x1), -x2 sin th(x1) + x3 cos th(x1))

so each slice is omega turned clockwise by th(x1). Membership of an ambient
point is decided by turning its transverse part back (counter-clockwise) and
asking omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence, Union

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError, NotInside

DEFAULT_HORIZON = 1.0e4


def rotate(t, phi):
    """Counter-clockwise rotation of planar points ``t[..., 2]`` by ``phi``."""
    t = np.asarray(t, dtype=float)
    c, s = np.cos(phi), np.sin(phi)
    return np.stack([c * t[..., 0] - s * t[..., 1], s * t[..., 0] + c * t[..., 1]], axis=-1)


def _segment_distance(pts, a, b):
    """Distance from ``pts[m, 2]`` to every segment ``a[k] -> b[k]``; shape (m, k)."""
    d = b - a
    rel = pts[:, None, :] - a[None, :, :]
    len2 = np.einsum("kj,kj->k", d, d)
    u = np.clip(np.einsum("mkj,kj->mk", rel, d) / len2, 0.0, 1.0)
    diff = rel - u[..., None] * d[None, :, :]
    return np.sqrt(np.einsum("mkj,mkj->mk", diff, diff))


# --------------------------------------------------------------------------- #
# Cross-sections
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class Ellipse:
    """Axis-aligned ellipse with center ``(cx, cy)`` and semi-axes ``a``, ``b``."""

    cx: float
    cy: float
    a: float
    b: float

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ConfigError(f"ellipse semi-axes must be positive, got a={self.a}, b={self.b}")

    @property
    def bbox(self):
        return (self.cx - self.a, self.cy - self.b, self.cx + self.a, self.cy + self.b)

    def contains_points(self, t):
        t = np.asarray(t, dtype=float)
        u = (t[..., 0] - self.cx) / self.a
        v = (t[..., 1] - self.cy) / self.b
        return u * u + v * v < 1.0

    def boundary_distance(self, t):
        t = np.asarray(t, dtype=float)
        y0 = np.abs(t[..., 0] - self.cx)
        y1 = np.abs(t[..., 1] - self.cy)
        if self.a >= self.b:
            return _ellipse_distance(self.a, self.b, y0, y1)
        return _ellipse_distance(self.b, self.a, y1, y0)

    def boundary_points(self, n):
        phi = 2.0 * np.pi * np.arange(n) / n
        return np.stack([self.cx + self.a * np.cos(phi), self.cy + self.b * np.sin(phi)], axis=-1)

    def circumradius(self):
        def negnorm(phi):
            return -math.hypot(self.cx + self.a * math.cos(phi), self.cy + self.b * math.sin(phi))

        phis = np.linspace(0.0, 2.0 * np.pi, 721)
        vals = [negnorm(p) for p in phis]
        i = int(np.argmin(vals))
        res = minimize_scalar(
            negnorm, bounds=(phis[max(i - 1, 0)], phis[min(i + 1, 720)]),
            method="bounded", options={"xatol": 1e-13},
        )
        return max(-res.fun, -vals[i])

    def half_plane_margin(self):
        return self.cx - self.a


def _ellipse_root(r0, z0, z1, g, max_iter=1100):
    """Vectorised bisection for the ellipse-distance root function."""
    n0 = r0 * z0
    s0 = z1 - 1.0
    s1 = np.where(g < 0, 0.0, np.hypot(n0, z1) - 1.0)
    s = 0.5 * (s0 + s1)
    active = np.ones_like(s, dtype=bool)
    for _ in range(max_iter):
        s = np.where(active, 0.5 * (s0 + s1), s)
        done = (s == s0) | (s == s1)
        active &= ~done
        if not active.any():
            break
        gs = (n0 / (s + r0)) ** 2 + (z1 / (s + 1.0)) ** 2 - 1.0
        s0 = np.where(active & (gs > 0), s, s0)
        s1 = np.where(active & (gs < 0), s, s1)
        active &= gs != 0
    return s


def _ellipse_distance(e0, e1, y0, y1):
    """Distance from first-quadrant points to the ellipse with semi-axes e0 >= e1."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    shape = np.broadcast(y0, y1).shape
    y0 = np.broadcast_to(y0, shape).ravel()
    y1 = np.broadcast_to(y1, shape).ravel()
    out = np.empty(y0.shape)

    # within rounding of an axis the on-axis formulas are exact to that rounding
    y0 = np.where(y0 < 1e-13 * e0, 0.0, y0)
    y1 = np.where(y1 < 1e-13 * e1, 0.0, y1)
    gen = (y1 > 0) & (y0 > 0)
    if gen.any():
        z0 = y0[gen] / e0
        z1 = y1[gen] / e1
        g = z0 * z0 + z1 * z1 - 1.0
        r0 = (e0 / e1) ** 2
        sbar = _ellipse_root(r0, z0, z1, g)
        x0 = r0 * y0[gen] / (sbar + r0)
        x1 = y1[gen] / (sbar + 1.0)
        out[gen] = np.where(g == 0, 0.0, np.hypot(x0 - y0[gen], x1 - y1[gen]))

    on_minor = (y1 > 0) & (y0 == 0)
    out[on_minor] = np.abs(y1[on_minor] - e1)

    on_major = y1 == 0
    if on_major.any():
        yy = y0[on_major]
        numer = e0 * yy
        denom = e0 * e0 - e1 * e1
        inner = numer < denom
        xde0 = np.where(inner, numer / denom if denom > 0 else 0.0, 1.0)
        x0 = e0 * xde0
        x1 = e1 * np.sqrt(np.clip(1.0 - xde0 * xde0, 0.0, None))
        out[on_major] = np.where(inner, np.hypot(x0 - yy, x1), np.abs(yy - e0))
    return out.reshape(shape)


@dataclass(frozen=True)
class Rectangle:
    x0: float
    y0: float
    x1: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ConfigError("rectangle max corner must strictly dominate min corner")

    @property
    def bbox(self):
        return (self.x0, self.y0, self.x1, self.y1)

    def contains_points(self, t):
        t = np.asarray(t, dtype=float)
        return (t[..., 0] > self.x0) & (t[..., 0] < self.x1) & (t[..., 1] > self.y0) & (t[..., 1] < self.y1)

    def _polygon(self):
        return Polygon(((self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)))

    def boundary_distance(self, t):
        t = np.asarray(t, dtype=float)
        dx = np.minimum(t[..., 0] - self.x0, self.x1 - t[..., 0])
        dy = np.minimum(t[..., 1] - self.y0, self.y1 - t[..., 1])
        inside = (dx >= 0) & (dy >= 0)
        outside = self._polygon().boundary_distance(t)
        return np.where(inside, np.minimum(dx, dy), outside)

    def boundary_points(self, n):
        return self._polygon().boundary_points(n)

    def circumradius(self):
        return max(math.hypot(x, y) for x in (self.x0, self.x1) for y in (self.y0, self.y1))

    def half_plane_margin(self):
        return self.x0


def _segments_cross(p1, p2, q1, q2):
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(q1, q2, p1), orient(q1, q2, p2)
    d3, d4 = orient(p1, p2, q1), orient(p1, p2, q2)
    if ((d1 > 0) != (d2 > 0)) and ((d3 > 0) != (d4 > 0)) and 0 not in (d1, d2, d3, d4):
        return True
    # collinear overlaps
    for d, a, b, c in ((d1, q1, q2, p1), (d2, q1, q2, p2), (d3, p1, p2, q1), (d4, p1, p2, q2)):
        if d == 0 and min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[1] <= max(a[1], b[1]):
            return True
    return False


@dataclass(frozen=True)
class Polygon:
    """Simple polygon, vertices listed counter-clockwise."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if len(verts) < 3:
            raise ConfigError("polygon needs at least three vertices")
        if self.signed_area() <= 0:
            raise ConfigError("polygon must be counter-clockwise with positive area")
        n = len(verts)
        for i in range(n):
            for j in range(i + 1, n):
                if j == i + 1 or (i == 0 and j == n - 1):
                    continue
                if _segments_cross(verts[i], verts[(i + 1) % n], verts[j], verts[(j + 1) % n]):
                    raise ConfigError("polygon is not simple")

    def signed_area(self):
        v = np.asarray(self.vertices)
        x, y = v[:, 0], v[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    @property
    def bbox(self):
        v = np.asarray(self.vertices)
        return (v[:, 0].min(), v[:, 1].min(), v[:, 0].max(), v[:, 1].max())

    def _edges(self):
        a = np.asarray(self.vertices)
        return a, np.roll(a, -1, axis=0)

    def contains_points(self, t):
        t = np.asarray(t, dtype=float)
        shape = t.shape[:-1]
        pts = t.reshape(-1, 2)
        a, b = self._edges()
        px, py = pts[:, 0:1], pts[:, 1:2]
        ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
        straddle = (ay > py) != (by > py)
        with np.errstate(divide="ignore", invalid="ignore"):
            xcross = ax + (py - ay) * (bx - ax) / (by - ay)
        crossings = np.sum(straddle & (px < xcross), axis=1)
        inside = (crossings % 2 == 1) & (self._raw_distance(pts) > 0)
        return inside.reshape(shape)

    def _raw_distance(self, pts):
        a, b = self._edges()
        return _segment_distance(pts, a, b).min(axis=1)

    def boundary_distance(self, t):
        t = np.asarray(t, dtype=float)
        return self._raw_distance(t.reshape(-1, 2)).reshape(t.shape[:-1])

    def boundary_points(self, n):
        a, b = self._edges()
        lengths = np.hypot(*(b - a).T)
        cum = np.concatenate([[0.0], np.cumsum(lengths)])
        s = cum[-1] * np.arange(n) / n
        k = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(lengths) - 1)
        u = (s - cum[k]) / lengths[k]
        return a[k] + u[:, None] * (b[k] - a[k])

    def circumradius(self):
        return max(math.hypot(x, y) for x, y in self.vertices)

    def half_plane_margin(self):
        return min(x for x, _ in self.vertices)


CrossSection = Union[Ellipse, Rectangle, Polygon]


def disc(cx, cy, radius):
    return Ellipse(cx, cy, radius, radius)


@dataclass(frozen=True)
class GeometrySummary:
    contains_origin: bool
    r: float | None
    R: float
    m: float


def summary(omega):
    """Inradius from the origin, circumradius and half-plane margin of ``omega``."""
    inside = bool(omega.contains_points(np.zeros(2)))
    r = float(omega.boundary_distance(np.zeros(2))) if inside else None
    return GeometrySummary(inside, r, float(omega.circumradius()), float(omega.half_plane_margin()))


def interior_samples(omega, spacing):
    """Cell-centred lattice points of ``omega``'s bounding box that lie inside ``omega``."""
    x0, y0, x1, y1 = omega.bbox
    xs = np.arange(x0 + 0.5 * spacing, x1, spacing)
    ys = np.arange(y0 + 0.5 * spacing, y1, spacing)
    pts = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    pts = pts[omega.contains_points(pts)]
    if len(pts) == 0:
        c = np.array([0.5 * (x0 + x1), 0.5 * (y0 + y1)])
        pts = c[None, :] if omega.contains_points(c) else pts
    return pts


# --------------------------------------------------------------------------- #
# Twist profiles
# --------------------------------------------------------------------------- #


def adaptive_simpson(f, a, b, tol=1e-10, max_depth=50):
    """Adaptive Simpson quadrature of a scalar function on ``[a, b]``."""

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) * (fa + 4.0 * fm + fb) / 6.0

    def recurse(lo, hi, fa, fm, fb, whole, eps, depth):
        mid = 0.5 * (lo + hi)
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, lo, mid)
        right = simpson(fm, frm, fb, mid, hi)
        if depth <= 0 or abs(left + right - whole) <= 15.0 * eps:
            return left + right + (left + right - whole) / 15.0
        return (recurse(lo, mid, fa, flm, fm, left, 0.5 * eps, depth - 1)
                + recurse(mid, hi, fm, frm, fb, right, 0.5 * eps, depth - 1))

    if a == b:
        return 0.0
    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return recurse(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, max_depth)


@dataclass(frozen=True)
class Constant:
    beta: float

    diverges = False

    def rate(self, x):
        return np.full(np.shape(x), float(self.beta))

    def angle(self, x):
        return self.beta * np.asarray(x, dtype=float)

    def max_abs_rate(self, a, b):
        return abs(self.beta)


@dataclass(frozen=True)
class LinearRate:
    alpha: float

    @property
    def diverges(self):
        return self.alpha != 0

    def rate(self, x):
        return self.alpha * np.asarray(x, dtype=float)

    def angle(self, x):
        x = np.asarray(x, dtype=float)
        return 0.5 * self.alpha * x * x

    def max_abs_rate(self, a, b):
        return abs(self.alpha) * max(abs(a), abs(b))


@dataclass(frozen=True)
class PowerRate:
    alpha: float
    p: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.p > 0):
            raise ConfigError("power profile needs alpha > 0 and p > 0")

    diverges = True

    def rate(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * np.sign(x) * np.abs(x) ** self.p

    def angle(self, x):
        x = np.asarray(x, dtype=float)
        return self.alpha * np.abs(x) ** (self.p + 1.0) / (self.p + 1.0)

    def max_abs_rate(self, a, b):
        return self.alpha * max(abs(a), abs(b)) ** self.p


@dataclass(frozen=True)
class TabulatedRate:
    """Piecewise-linear rate through ``(xs, rates)``, extended linearly with ``slope``."""

    xs: tuple
    rates: tuple
    slope: float = 0.0
    _knot_angle: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        xs = tuple(float(v) for v in self.xs)
        rates = tuple(float(v) for v in self.rates)
        if len(xs) < 2 or len(xs) != len(rates):
            raise ConfigError("tabulated profile needs at least two (x, rate) samples")
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ConfigError("tabulated profile samples must be strictly increasing in x")
        object.__setattr__(self, "xs", xs)
        object.__setattr__(self, "rates", rates)
        # primitive at the knots, anchored so that angle(0) == 0
        prim = [0.0]
        for a, b in zip(xs, xs[1:]):
            prim.append(prim[-1] + adaptive_simpson(self._rate_scalar, a, b, tol=1e-10))
        offset = self._partial(np.array(prim), 0.0)
        object.__setattr__(self, "_knot_angle", tuple(p - offset for p in prim))

    @property
    def diverges(self):
        return self.slope != 0

    def _rate_scalar(self, x):
        return float(self.rate(x))

    def rate(self, x):
        x = np.asarray(x, dtype=float)
        xs, rs = np.asarray(self.xs), np.asarray(self.rates)
        inner = np.interp(x, xs, rs)
        left = rs[0] + self.slope * (x - xs[0])
        right = rs[-1] + self.slope * (x - xs[-1])
        return np.where(x < xs[0], left, np.where(x > xs[-1], right, inner))

    def _partial(self, prim, x):
        x = np.asarray(x, dtype=float)
        xs = np.asarray(self.xs)
        k = np.clip(np.searchsorted(xs, x, side="right") - 1, 0, len(xs) - 1)
        # Simpson is exact on each linear piece
        a = xs[k]
        fa, fm, fx = self.rate(a), self.rate(0.5 * (a + x)), self.rate(x)
        return prim[k] + (x - a) * (fa + 4.0 * fm + fx) / 6.0

    def angle(self, x):
        return self._partial(np.asarray(self._knot_angle), x)

    def max_abs_rate(self, a, b):
        lo, hi = min(a, b), max(a, b)
        pts = [lo, hi] + [x for x in self.xs if lo < x < hi]
        return float(np.max(np.abs(self.rate(np.array(pts)))))


TwistProfile = Union[Constant, LinearRate, PowerRate, TabulatedRate]


def load_tabulated(path, slope=None):
    """Read a two-column ``x rate`` file; a ``# slope = s`` comment sets the extrapolation slope."""
    xs, rates = [], []
    file_slope = 0.0
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].partition("=")
                if key.strip().lower() == "slope":
                    file_slope = float(val)
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 2:
                raise ConfigError(f"{path}: expected two columns, got {line!r}")
            xs.append(float(parts[0]))
            rates.append(float(parts[1]))
    return TabulatedRate(tuple(xs), tuple(rates), file_slope if slope is None else slope)


# --------------------------------------------------------------------------- #
# Tube map and queries
# --------------------------------------------------------------------------- #


def map_point(profile, x):
    """Image of straight coordinates ``x[..., 3]`` under the tube map."""
    x = np.asarray(x, dtype=float)
    th = profile.angle(x[..., 0])
    c, s = np.cos(th), np.sin(th)
    return np.stack([x[..., 0], x[..., 1] * c + x[..., 2] * s, -x[..., 1] * s + x[..., 2] * c], axis=-1)


def to_straight(profile, p):
    """Inverse of :func:`map_point`."""
    p = np.asarray(p, dtype=float)
    t = rotate(p[..., 1:], profile.angle(p[..., 0]))
    return np.concatenate([p[..., :1], t], axis=-1)


def contains(omega, profile, p):
    """Whether ambient point(s) ``p[..., 3]`` lie inside the twisted tube."""
    p = np.asarray(p, dtype=float)
    return omega.contains_points(rotate(p[..., 1:], profile.angle(p[..., 0])))


@dataclass(frozen=True)
class FreeSegment:
    """Maximal longitudinal in-tube interval; endpoints are first points found outside."""

    lower: float
    upper: float

    @property
    def length(self):
        return self.upper - self.lower


@lru_cache(maxsize=64)
def _inradius(omega):
    return summary(omega).r or 0.0


def _ray_inside(omega, profile, y, s):
    s = np.asarray(s, dtype=float)
    return omega.contains_points(rotate(np.broadcast_to(y, s.shape + (2,)), profile.angle(s)))


def _exit(omega, profile, y, x1, direction, tol, horizon, chunk=512):
    last_in = x1
    while abs(last_in - x1) < horizon:
        reach = min(0.1 * chunk, horizon - abs(last_in - x1))
        a, b = sorted((last_in, last_in + direction * reach))
        rate = profile.max_abs_rate(a, b)
        step = 0.1 if rate == 0 else min(0.1, math.pi / (10.0 * rate))
        count = max(1, min(chunk, int(math.ceil(reach / step))))
        s = last_in + direction * step * np.arange(1, count + 1)
        inside = _ray_inside(omega, profile, y, s)
        out = np.flatnonzero(~inside)
        if len(out):
            j = out[0]
            lo = last_in if j == 0 else s[j - 1]
            hi = s[j]
            while abs(hi - lo) > tol:
                mid = 0.5 * (lo + hi)
                if _ray_inside(omega, profile, y, mid):
                    lo = mid
                else:
                    hi = mid
            return float(hi)
        last_in = float(s[-1])
    return direction * math.inf


def free_segment(omega, profile, y, x1, tol=1e-8, horizon=DEFAULT_HORIZON):
    """Maximal interval of ``s`` around ``x1`` with ``(s, y)`` inside the tube.

    ``y`` is the transverse ambient pair. Endpoints are located to within
    ``tol`` on their outer side; a side with no exit inside ``horizon`` is
    reported as infinite.
    """
    y = np.asarray(y, dtype=float)
    if not _ray_inside(omega, profile, y, x1):
        raise NotInside(f"point ({x1}, {y[0]}, {y[1]}) is not inside the tube")
    if _inradius(omega) > math.hypot(y[0], y[1]):
        # the orbit of y stays in the disc of radius r about 0, inside omega
        return FreeSegment(-math.inf, math.inf)
    hi =_exit(omega, profile, y, x1, +1.0, tol, horizon)
    lo = _exit(omega, profile, y, x1, -1.0, tol, horizon)
    return FreeSegment(lo, hi)


def max_free_segment(omega, profile, window, density=10.0, tol=1e-8, stations=None,
                     horizon=DEFAULT_HORIZON):
    """Largest free segment over a deterministic sample of rays starting in ``window``.

    Rays start at slice points of ``omega`` on a lattice of spacing
    ``1/density`` at evenly spaced stations. This is a sampled lower estimate
    of the true supremum.
    """
    a, b = window
    if not b > a:
        raise ValueError("window must be nonempty")
    if stations is None:
        stations = max(8, int(math.ceil(density * (b - a))) + 1)
    pts = interior_samples(omega, 1.0 / density)
    best = 0.0
    for x1 in np.linspace(a, b, stations):
        ys = rotate(pts, -profile.angle(x1))
        for y in ys:
            seg = free_segment(omega, profile, y, float(x1), tol, horizon)
            best = max(best, seg.length)
            if math.isinf(best):
                return best
    return best


def quasibounded_probe(omega, profile, stations, density=10.0, tol=1e-8, horizon=DEFAULT_HORIZON):
    """Upper bounds on the largest boundary distance found in each slice.

    For each sampled point the bound is the smaller of its in-slice distance
    to the boundary and half its free-segment length; both are distances to
    boundary points of the tube.
    """
    pts = interior_samples(omega, 1.0 / density)
    transverse = omega.boundary_distance(pts)
    out = []
    for x1 in stations:
        ys = rotate(pts, -profile.angle(x1))
        best = 0.0
        for y, d in zip(ys, transverse):
            if d <= best:
                continue
            seg = free_segment(omega, profile, y, float(x1), tol, horizon)
            best = max(best, min(d, 0.5 * seg.length))
        out.append(best)
    return out


def jacobian_det(profile, x, h=1e-4):
    """Central-difference Jacobian determinant of the tube map at ``x``."""
    if not h > 0:
        raise ValueError("step must be positive")
    x = np.asarray(x, dtype=float)
    jac = np.empty((3, 3))
    for j in range(3):
        e = np.zeros(3)
        e[j] = h
        jac[:, j] = (map_point(profile, x + e) - map_point(profile, x - e)) / (2.0 * h)
    return float(np.linalg.det(jac))
