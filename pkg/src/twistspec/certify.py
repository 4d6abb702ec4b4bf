"""Theorem-level certificates for twisted tubes.

* If the origin lies in omega, the tube contains the straight cylinder over
  the disc of radius ``r = dist(0, boundary)``, so the spectrum contains
  ``[(j01/r)^2, inf)``.
* If omega lies in the open half-plane ``t1 > 0`` and the twist rate
  diverges, then beyond ``s_n`` (where ``|rate| > n``) every longitudinal ray
  leaves the tube within ``pi/n`` in each direction. A 1D Poincare inequality
  on segments of length ``2 pi / n`` bounds the exterior part below by
  ``n^2/4``; ``n`` being arbitrary, the essential spectrum is empty.

The exterior bound is a proof step, not recomputed numerically: the ray
sweep here is sampled evidence for its geometric premise. Lower eigenvalue
bounds from Neumann cuts are therefore conditional on it.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import geometry as geo
from .errors import HalfPlaneViolated, NoOrigin, NotDiverging
from .special import bessel_j0_zero
from .tube import DIRICHLET, NEUMANN, LongitudinalGrid, assemble_tube, eigs_tube
from .xsection import assemble_xsection, build_grid, eigs_xsection

THM1_CLAIM = "spectrum contains [mu1, inf)"
CONDITIONAL_NOTE = (
    "lower bounds hold for the continuum operator only together with the exterior estimate "
    "inf sigma(exterior part) >= n^2/4, which the ray sweep supports but does not prove"
)


@dataclass(frozen=True)
class Thm1Window:
    r: float
    mu1: float
    claim: str = THM1_CLAIM


def thm1_window(summary):
    """Essential-spectrum window ``[(j01/r)^2, inf)`` for cross-sections containing 0."""
    if not summary.contains_origin:
        raise NoOrigin("the origin is not inside the cross-section")
    return Thm1Window(summary.r, (bessel_j0_zero() / summary.r) ** 2)


def find_sn(profile, n, search_cap=1e6):
    """Smallest ``s`` with ``|rate(x)| > n`` for all ``|x| > s``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    if isinstance(profile, geo.Constant):
        raise NotDiverging(f"constant twist rate {profile.beta} never exceeds every n")
    if isinstance(profile, geo.LinearRate):
        if profile.alpha == 0:
            raise NotDiverging("zero linear twist rate")
        s = n / abs(profile.alpha)
    elif isinstance(profile, geo.PowerRate):
        s = (n / profile.alpha) ** (1.0 / profile.p)
    elif isinstance(profile, geo.TabulatedRate):
        s = _tabulated_sn(profile, n)
    else:
        raise TypeError(f"unsupported profile {profile!r}")
    if not s <= search_cap:
        raise NotDiverging(f"|rate| does not stay above {n} within {search_cap}")
    return s


def _tabulated_sn(profile, n):
    xs = np.asarray(profile.xs)
    pieces = [(-math.inf, xs[0])] + list(zip(xs[:-1], xs[1:])) + [(xs[-1], math.inf)]
    worst = 0.0
    for a, b in pieces:
        # on a linear piece {|rate| <= n} is an interval; find its extent
        ref = b if math.isinf(a) else a
        r0 = float(profile.rate(ref))
        slope = profile.slope if math.isinf(a) or math.isinf(b) else (float(profile.rate(b)) - r0) / (b - a)
        if slope == 0:
            if abs(r0) > n:
                continue
            lo, hi = a, b
        else:
            u1, u2 = sorted(((-n - r0) / slope + ref, (n - r0) / slope + ref))
            lo, hi = max(a, u1), min(b, u2)
            if lo > hi:
                continue
        worst = max(worst, abs(lo), abs(hi))
    return worst


@dataclass(frozen=True)
class EssentialBound:
    n: int
    s_n: float
    bound: float
    ray_verified: bool
    max_observed_segment: float
    segment_limit: float
    windows: tuple
    density: float
    stations: int
    essential_spectrum_empty: bool

    def to_dict(self):
        return asdict(self)


def _require_half_plane(omega):
    summ = geo.summary(omega)
    if summ.contains_origin or not summ.m > 0:
        raise HalfPlaneViolated(
            f"cross-section is not inside the half-plane t1 > 0 (margin {summ.m:g}, "
            f"contains origin: {summ.contains_origin})"
        )
    return summ


def essential_lower_bound(omega, profile, n, density=10.0, tol=1e-8, stations=None):
    """Certificate ``inf sigma_ess >= n^2/4`` with a sampled ray check beyond ``s_n``."""
    _require_half_plane(omega)
    n = int(n)
    s_n = find_sn(profile, n)
    half_turn = math.pi / n
    right = (s_n + half_turn, s_n + 3.0 * half_turn)
    left = (-right[1], -right[0])
    if stations is None:
        stations = max(8, int(math.ceil(density * (right[1] - right[0]))) + 1)
    observed = max(
        geo.max_free_segment(omega, profile, w, density=density, tol=tol, stations=stations)
        for w in (left, right)
    )
    limit = 2.0 * math.pi / n
    return EssentialBound(
        n=n, s_n=s_n, bound=n * n / 4, ray_verified=bool(observed <= limit),
        max_observed_segment=observed, segment_limit=limit, windows=(left, right),
        density=density, stations=stations, essential_spectrum_empty=bool(profile.diverges),
    )


@dataclass(frozen=True)
class BracketReport:
    n: int
    bound: float
    L: float
    s_n: float
    h: float
    h1: float
    lower: tuple
    upper: tuple
    valid: tuple
    lower_residuals: tuple
    upper_residuals: tuple
    converged: bool
    note: str = CONDITIONAL_NOTE
    certificate: EssentialBound | None = None

    @property
    def widths(self):
        return tuple(u - lo for lo, u in zip(self.lower, self.upper))

    def to_dict(self):
        out = asdict(self)
        out["widths"] = list(self.widths)
        return out


def bracket_eigenvalues(omega, profile, h, h1, L, n, K, tol=1e-8, seed=0, density=10.0, certificate=None):
    """Neumann-cut lower and Dirichlet-truncation upper eigenvalues on ``(-L, L)``.

    A bracket is marked valid when its upper value lies below ``n^2/4`` and
    ``L >= s_n``.
    """
    cert = certificate or essential_lower_bound(omega, profile, n, density=density)
    tgrid = build_grid(omega, h)
    lgrid = LongitudinalGrid.from_spacing(L, h1)
    results = {}
    for end in (NEUMANN, DIRICHLET):
        op = assemble_tube(tgrid, lgrid.with_end(end), profile)
        results[end] = eigs_tube(op, K, tol=tol, seed=seed)
    lo, up = results[NEUMANN], results[DIRICHLET]
    valid = tuple(bool(u < cert.bound and L >= cert.s_n) for u in up.eigenvalues)
    return BracketReport(
        n=cert.n, bound=cert.bound, L=float(L), s_n=cert.s_n, h=float(h), h1=float(lgrid.h1),
        lower=tuple(map(float, lo.eigenvalues)), upper=tuple(map(float, up.eigenvalues)),
        valid=valid, lower_residuals=tuple(map(float, lo.residuals)),
        upper_residuals=tuple(map(float, up.residuals)),
        converged=lo.all_converged and up.all_converged, certificate=cert,
    )


@dataclass(frozen=True)
class GapPoint:
    L: float
    lambda1: float
    E1: float

    @property
    def gap(self):
        return self.lambda1 - self.E1


def poincare_gap_probe(omega, profile, lengths, h, h1, tol=1e-8, seed=0):
    """``lambda_1(L) - E_1`` along Dirichlet truncations of increasing length."""
    tgrid = build_grid(omega, h)
    e1 = eigs_xsection(assemble_xsection(tgrid, 0.0), 1, tol=tol, seed=seed).lowest
    out = []
    for L in lengths:
        op = assemble_tube(tgrid, LongitudinalGrid.from_spacing(L, h1), profile)
        lam = float(eigs_tube(op, 1, tol=tol, seed=seed).eigenvalues[0])
        out.append(GapPoint(float(L), lam, e1))
    return out
