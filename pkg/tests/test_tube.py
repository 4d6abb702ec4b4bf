import math

import numpy as np
import pytest
import scipy.sparse as sp

from twistspec import geometry as geo
from twistspec.eigensolve import dense_eig
from twistspec.errors import NoInradius, ZeroVector
from twistspec.special import bessel_j0_zero, j0_series
from twistspec.tube import (
    DIRICHLET, NEUMANN, LongitudinalGrid, TensorPreconditioner, assemble_tube, eigs_tube,
    rayleigh_quotient, stencil_eigenvalues, trial_cylinder_mode,
)
from twistspec.xsection import assemble_xsection, build_grid, eigs_xsection, laplacian

OFF_SQUARE = geo.Rectangle(0.5, -0.5, 1.5, 0.5)
ELLIPSE = geo.Ellipse(0.0, 0.0, 1.0, 0.5)


def _dirichlet_stencil(n, h1):
    return sp.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1]) / h1 ** 2


def test_longitudinal_grid():
    g = LongitudinalGrid.from_spacing(2.0, 0.25)
    assert g.n == 15 and g.h1 == 0.25
    assert g.x[0] > -2.0 and g.x[-1] < 2.0
    np.testing.assert_allclose(np.diff(g.x), 0.25)
    with pytest.raises(ValueError):
        LongitudinalGrid(1.0, 0)
    with pytest.raises(ValueError):
        LongitudinalGrid(1.0, 3, "robin")


def test_untwisted_tensor_identity():
    tgrid = build_grid(OFF_SQUARE, 1 / 8)
    lgrid = LongitudinalGrid.from_spacing(1.0, 1 / 8)
    op = assemble_tube(tgrid, lgrid, geo.Constant(0.0))
    ref = (sp.kron(_dirichlet_stencil(lgrid.n, lgrid.h1), sp.identity(tgrid.size))
           + sp.kron(sp.identity(lgrid.n), laplacian(tgrid)))
    diff = (op.matrix.to_scipy() - ref).tocsr()
    assert diff.nnz == 0 or abs(diff).max() <= 1e-12


@pytest.mark.parametrize("omega, h, L, h1", [
    (OFF_SQUARE, 1 / 8, 1.0, 1 / 8),
    (ELLIPSE, 1 / 6, 0.75, 1 / 8),
])
def test_separation_dense(omega, h, L, h1):
    tgrid = build_grid(omega, h)
    lgrid = LongitudinalGrid.from_spacing(L, h1)
    lam3 = dense_eig(assemble_tube(tgrid, lgrid, geo.Constant(0.0)).matrix)[0]
    lam_t = dense_eig(assemble_xsection(tgrid, 0.0).matrix)[0]
    lam_1d = stencil_eigenvalues(lgrid.n, lgrid.h1)[0]
    assert lam3 == pytest.approx(lam_1d + lam_t, rel=1e-9)


def test_stencil_eigenvalues_match_matrices():
    n, h1 = 9, 0.2
    np.testing.assert_allclose(stencil_eigenvalues(n, h1), dense_eig(_dirichlet_stencil(n, h1).toarray()),
                               atol=1e-10)
    neu = _dirichlet_stencil(n, h1).tolil()
    neu[0, 0] = neu[-1, -1] = 1 / h1 ** 2
    np.testing.assert_allclose(stencil_eigenvalues(n, h1, NEUMANN), dense_eig(neu.toarray()), atol=1e-10)


def test_neumann_ground_state_equals_cross_section():
    tgrid = build_grid(OFF_SQUARE, 1 / 8)
    lgrid = LongitudinalGrid.from_spacing(1.0, 1 / 8, NEUMANN)
    lam3 = dense_eig(assemble_tube(tgrid, lgrid, geo.Constant(0.0)).matrix)[0]
    assert lam3 == pytest.approx(dense_eig(assemble_xsection(tgrid, 0.0).matrix)[0], rel=1e-12)


@pytest.mark.parametrize("profile", [geo.Constant(1.0), geo.LinearRate(1.0), geo.PowerRate(2.0, 2.0)])
def test_symmetric_psd_and_end_monotonicity(profile):
    tgrid = build_grid(OFF_SQUARE, 1 / 6)
    lgrid = LongitudinalGrid.from_spacing(1.5, 1 / 6)
    dir_op = assemble_tube(tgrid, lgrid, profile)
    neu_op = assemble_tube(tgrid, lgrid.with_end(NEUMANN), profile)
    a = dir_op.matrix.to_dense()
    assert np.array_equal(a, a.T)
    d, n = dense_eig(dir_op.matrix), dense_eig(neu_op.matrix)
    assert n[0] >= -1e-10
    assert np.all(n[:10] <= d[:10] + 1e-10)


def test_constant_twist_is_gram_form():
    # with constant beta the form equals the quadratic form written slice by slice
    tgrid = build_grid(OFF_SQUARE, 1 / 4)
    lgrid = LongitudinalGrid.from_spacing(1.0, 1 / 4)
    beta = 0.7
    op = assemble_tube(tgrid, lgrid, geo.Constant(beta))
    xop = assemble_xsection(tgrid, 0.0)
    tau = xop.tau.toarray()
    rng = np.random.default_rng(0)
    psi = rng.standard_normal((lgrid.n, tgrid.size))
    padded = np.vstack([np.zeros(tgrid.size), psi, np.zeros(tgrid.size)])
    q = 0.0
    for i in range(lgrid.n + 1):
        a, b = padded[i], padded[i + 1]
        q += np.sum(((b - a) / lgrid.h1 + beta * tau @ (a + b) / 2) ** 2)
    q += sum(p @ (xop.laplacian @ p) for p in psi)
    v = psi.ravel()
    assert v @ (op.matrix @ v) == pytest.approx(q, rel=1e-12)


def test_gauge_shift_invariance():
    tgrid = build_grid(OFF_SQUARE, 1 / 6)
    lgrid = LongitudinalGrid.from_spacing(1.0, 1 / 6)
    base = geo.LinearRate(1.0)

    class Shifted:
        def rate(self, x):
            return base.rate(x)

        def angle(self, x):
            return base.angle(x) + 3.0

    a = assemble_tube(tgrid, lgrid, base).matrix.to_dense()
    b = assemble_tube(tgrid, lgrid, Shifted()).matrix.to_dense()
    assert np.array_equal(a, b)


def test_disc_constant_twist_invisible():
    omega = geo.disc(0.0, 0.0, 1.0)
    tgrid = build_grid(omega, 1 / 10)
    lgrid = LongitudinalGrid.from_spacing(1.0, 1 / 8)
    lam = eigs_tube(assemble_tube(tgrid, lgrid, geo.Constant(1.0)), 1).eigenvalues[0]
    e1 = eigs_xsection(assemble_xsection(tgrid, 0.0), 1).lowest
    ref = stencil_eigenvalues(lgrid.n, lgrid.h1)[0] + e1
    assert abs(lam - ref) / ref <= 0.02


def test_trial_mode_values():
    tgrid = build_grid(ELLIPSE, 1 / 8)
    lgrid = LongitudinalGrid(1.0, 3)  # slices at -0.5, 0, 0.5
    v = trial_cylinder_mode(tgrid, lgrid, 0.5).reshape(lgrid.n, tgrid.size)
    centre = tgrid.index(np.array(0), np.array(0))
    assert v[1, centre] == 1.0
    rho = np.hypot(*tgrid.coords.T)
    assert np.all(v[:, rho >= 0.5] == 0.0)
    assert j0_series(bessel_j0_zero()) == pytest.approx(0.0, abs=1e-14)


def test_trial_mode_requires_origin():
    tgrid = build_grid(OFF_SQUARE, 1 / 8)
    with pytest.raises(NoInradius):
        trial_cylinder_mode(tgrid, LongitudinalGrid(1.0, 3), None)


def test_rayleigh_quotient_bounds():
    tgrid = build_grid(ELLIPSE, 1 / 8)
    lgrid = LongitudinalGrid.from_spacing(1.5, 1 / 8)
    op = assemble_tube(tgrid, lgrid, geo.LinearRate(1.0))
    res = eigs_tube(op, 1, tol=1e-10)
    assert rayleigh_quotient(op, res.eigenvectors[:, 0]) == pytest.approx(res.eigenvalues[0], rel=1e-9)
    rng = np.random.default_rng(4)
    for _ in range(5):
        assert rayleigh_quotient(op, rng.standard_normal(op.order)) >= res.eigenvalues[0]
    trial = trial_cylinder_mode(tgrid, lgrid, 0.5)
    assert rayleigh_quotient(op, trial) >= res.eigenvalues[0]
    with pytest.raises(ZeroVector):
        rayleigh_quotient(op, np.zeros(op.order))


def test_trial_quotient_untwisted_close_to_separated_value():
    r = 0.5
    mu1 = (bessel_j0_zero() / r) ** 2
    L = 2.0
    ref = mu1 + (math.pi / (2 * L)) ** 2
    errs = []
    for h in (1 / 16, 1 / 32):
        tgrid = build_grid(ELLIPSE, h)
        lgrid = LongitudinalGrid.from_spacing(L, 2 * h)
        op = assemble_tube(tgrid, lgrid, geo.Constant(0.0))
        errs.append(abs(rayleigh_quotient(op, trial_cylinder_mode(tgrid, lgrid, r)) - ref))
    assert errs[1] < errs[0]
    assert errs[1] <= 5.0 * (1 / 32 + 1 / 16)


@pytest.mark.parametrize("profile", [geo.Constant(1.0), geo.LinearRate(1.0)])
def test_tensor_preconditioner_and_solver_agree_with_dense(profile):
    tgrid = build_grid(OFF_SQUARE, 1 / 8)
    lgrid = LongitudinalGrid.from_spacing(1.75, 1 / 8)
    op = assemble_tube(tgrid, lgrid, profile)
    pre = TensorPreconditioner(op)
    r = np.random.default_rng(0).standard_normal((op.order, 2))
    z = pre(r)
    assert z.shape == r.shape and np.all(np.einsum("ij,ij->j", r, z) > 0)
    modes = pre.lowest_modes(3)
    np.testing.assert_allclose(modes.T @ modes, np.eye(3), atol=1e-10)
    exact = dense_eig(op.matrix)[:4]
    for precond in ("tensor", "jacobi"):
        res = eigs_tube(op, 4, tol=1e-10, precond=precond)
        assert res.all_converged
        np.testing.assert_allclose(res.eigenvalues, exact, rtol=1e-8)


def test_dirichlet_truncation_monotone_in_length():
    tgrid = build_grid(OFF_SQUARE, 1 / 8)
    lams = [eigs_tube(assemble_tube(tgrid, LongitudinalGrid.from_spacing(L, 1 / 8), geo.Constant(1.0)),
                      1, tol=1e-10).eigenvalues[0] for L in (1.0, 2.0, 4.0)]
    assert lams[0] >= lams[1] * (1 - 1e-6) and lams[1] >= lams[2] * (1 - 1e-6)
