import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twistspec import geometry as geo
from twistspec.certify import (
    CONDITIONAL_NOTE, bracket_eigenvalues, essential_lower_bound, find_sn, poincare_gap_probe, thm1_window,
)
from twistspec.errors import HalfPlaneViolated, NoOrigin, NotDiverging
from twistspec.special import bessel_j0_zero

OFF_SQUARE = geo.Rectangle(0.5, -0.5, 1.5, 0.5)
ELLIPSE = geo.Ellipse(0.0, 0.0, 1.0, 0.5)


def test_bessel_zero():
    assert bessel_j0_zero() == pytest.approx(2.404825557695773, abs=1e-12)


def test_thm1_window():
    w = thm1_window(geo.summary(geo.disc(0, 0, 1)))
    assert w.mu1 == pytest.approx(5.7832, abs=1e-4) and w.claim == "spectrum contains [mu1, inf)"
    w = thm1_window(geo.summary(ELLIPSE))
    assert w.r == pytest.approx(0.5) and w.mu1 == pytest.approx(23.13274, abs=1e-5)
    with pytest.raises(NoOrigin):
        thm1_window(geo.summary(OFF_SQUARE))


def test_find_sn_families():
    assert find_sn(geo.LinearRate(1.0), 4) == 4
    assert find_sn(geo.LinearRate(-2.0), 4) == 2
    assert find_sn(geo.PowerRate(2.0, 2.0), 8) == pytest.approx(2.0)
    with pytest.raises(NotDiverging):
        find_sn(geo.Constant(5.0), 4)
    with pytest.raises(NotDiverging):
        find_sn(geo.LinearRate(0.0), 4)


def test_find_sn_tabulated():
    prof = geo.TabulatedRate((-1.0, 0.0, 1.0), (-1.0, 0.0, 3.0), 2.0)
    s = find_sn(prof, 4)
    # right: 3 + 2 (x - 1) = 4 at x = 1.5; left: -1 + 2 (x + 1) = -4 at x = -2.5
    assert s == pytest.approx(2.5)
    xs = np.linspace(-10, 10, 20001)
    beyond = np.abs(xs) > s + 1e-9
    assert np.all(np.abs(prof.rate(xs[beyond])) > 4)
    with pytest.raises(NotDiverging):
        find_sn(geo.TabulatedRate((0.0, 1.0), (0.0, 1.0), 0.0), 4)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 10 ** 6))
def test_bound_formula_exact(n):
    b = essential_lower_bound(OFF_SQUARE, geo.LinearRate(1.0), n, density=2)
    assert Fraction(b.bound) == Fraction(n * n, 4)


def test_essential_bound_examples():
    b4 = essential_lower_bound(OFF_SQUARE, geo.LinearRate(1.0), 4)
    assert (b4.s_n, b4.bound, b4.ray_verified) == (4.0, 4.0, True)
    assert b4.max_observed_segment <= 2 * math.pi / 4 == b4.segment_limit
    assert b4.essential_spectrum_empty
    lo, hi = b4.windows[1]
    assert lo == pytest.approx(4 + math.pi / 4) and hi == pytest.approx(4 + 3 * math.pi / 4)
    assert b4.windows[0] == (-hi, -lo)
    b10 = essential_lower_bound(OFF_SQUARE, geo.LinearRate(1.0), 10)
    assert b10.bound == 25 and b10.ray_verified


def test_essential_bound_refusals():
    with pytest.raises(HalfPlaneViolated):
        essential_lower_bound(ELLIPSE, geo.LinearRate(1.0), 4)
    touching = geo.Rectangle(0.0, -0.5, 1.0, 0.5)
    with pytest.raises(HalfPlaneViolated):
        essential_lower_bound(touching, geo.LinearRate(1.0), 4)
    with pytest.raises(NotDiverging):
        essential_lower_bound(OFF_SQUARE, geo.Constant(2.0), 4)


@pytest.mark.parametrize("n", [2, 4, 8])
def test_ray_verification_stable_under_doubled_density(n):
    b = essential_lower_bound(OFF_SQUARE, geo.LinearRate(1.0), n, density=5)
    assert b.ray_verified
    assert essential_lower_bound(OFF_SQUARE, geo.LinearRate(1.0), n, density=10).ray_verified


SHAPES = [
    ELLIPSE, OFF_SQUARE, geo.disc(2.0, 0.0, 1.0), geo.Rectangle(-1.0, 0.2, 1.0, 1.0),
    geo.Rectangle(0.0, -1.0, 1.0, 1.0), geo.Polygon(((-1, -1), (1, -1), (0, 1))),
]


@pytest.mark.parametrize("omega", SHAPES)
def test_hypothesis_exclusivity(omega):
    s = geo.summary(omega)
    thm1 = s.contains_origin
    half = s.m > 0
    assert thm1 + half <= 1
    if thm1:
        assert thm1_window(s).mu1 > 0
        with pytest.raises(HalfPlaneViolated):
            essential_lower_bound(omega, geo.LinearRate(1.0), 2)


def test_brackets_small():
    cert = essential_lower_bound(OFF_SQUARE, geo.LinearRate(1.0), 4)
    br = bracket_eigenvalues(OFF_SQUARE, geo.LinearRate(1.0), 1 / 8, 1 / 8, 4.0, 4, 3,
                             tol=1e-8, certificate=cert)
    assert br.converged and br.note == CONDITIONAL_NOTE and br.certificate is cert
    assert all(lo <= up + 2e-8 for lo, up in zip(br.lower, br.upper))
    # every upper value here exceeds n^2/4 = 4, so no bracket may be valid
    assert all(u >= 4 for u in br.upper) and not any(br.valid)
    d = br.to_dict()
    assert d["widths"] == list(br.widths) and d["bound"] == 4


def test_brackets_valid_below_bound():
    cert = essential_lower_bound(OFF_SQUARE, geo.LinearRate(1.0), 12)
    br = bracket_eigenvalues(OFF_SQUARE, geo.LinearRate(1.0), 1 / 6, 1 / 6, 12.0, 12, 2, certificate=cert)
    assert br.bound == 36 and all(u < 36 for u in br.upper)
    assert all(br.valid)
    short = bracket_eigenvalues(OFF_SQUARE, geo.LinearRate(1.0), 1 / 6, 1 / 6, 6.0, 12, 2, certificate=cert)
    assert not any(short.valid)  # L < s_n


def test_poincare_gap_probe():
    pts = poincare_gap_probe(OFF_SQUARE, geo.Constant(1.0), [1.0, 2.0, 4.0], 1 / 8, 1 / 8)
    assert all(p.gap > 0 for p in pts)
    gaps = [p.gap for p in pts]
    assert gaps[0] > gaps[1] > gaps[2]
    flat = poincare_gap_probe(OFF_SQUARE, geo.Constant(0.0), [1.0, 2.0, 4.0], 1 / 8, 1 / 8)
    flat_gaps = [p.gap for p in flat]
    # untwisted: the gap is the 1D stencil eigenvalue, decaying like L^-2
    assert flat_gaps[2] < flat_gaps[0] / 10
    assert flat_gaps[2] < gaps[2]
    disc = poincare_gap_probe(geo.disc(0, 0, 1), geo.Constant(2.0), [1.0, 4.0], 1 / 8, 1 / 8)
    assert disc[1].gap < disc[0].gap / 10
