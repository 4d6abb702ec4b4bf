"""Small bundled operators cross-checked between LOBPCG and the dense solver."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import geometry as geo
from .eigensolve import DENSE_CAP, SparseSym, dense_eig, lobpcg
from .errors import AsymmetricMatrix, TooLarge
from .tube import DIRICHLET, NEUMANN, LongitudinalGrid, assemble_tube
from .xsection import assemble_xsection, build_grid


def _stencil(n):
    return sp.diags([-np.ones(n - 1), 2.0 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1])


def _random_spd(n, seed):
    rng = np.random.default_rng(seed)
    m = sp.random(n, n, density=0.02, random_state=rng)
    m = m + m.T
    return m + sp.diags(np.asarray(abs(m).sum(axis=1)).ravel() + 1.0)


def _xsection(omega, h, beta):
    return lambda: assemble_xsection(build_grid(omega, h), beta).matrix


def _tube(omega, h, L, h1, profile, end):
    def build():
        lgrid = LongitudinalGrid.from_spacing(L, h1, end)
        return assemble_tube(build_grid(omega, h), lgrid, profile).matrix
    return build


SQUARE = geo.Rectangle(0.0, 0.0, 1.0, 1.0)
OFF_SQUARE = geo.Rectangle(0.5, -0.5, 1.5, 0.5)
PENTAGON = geo.Polygon(((0.3, -0.6), (1.2, -0.5), (1.5, 0.2), (0.8, 0.8), (0.2, 0.3)))

BUNDLE = (
    ("stencil_1d_n400", "eigensolve", lambda: SparseSym.from_matrix(_stencil(400))),
    ("laplacian_2d_30x30", "eigensolve",
     lambda: SparseSym.from_matrix(sp.kron(_stencil(30), sp.identity(30)) + sp.kron(sp.identity(30), _stencil(30)))),
    ("random_spd_500", "eigensolve", lambda: SparseSym.from_matrix(_random_spd(500, 7))),
    ("xsection_unit_square_beta0", "xsection", _xsection(SQUARE, 1 / 24, 0.0)),
    ("xsection_offset_square_beta1", "xsection", _xsection(OFF_SQUARE, 1 / 24, 1.0)),
    ("xsection_disc_beta3", "xsection", _xsection(geo.disc(0.0, 0.0, 1.0), 1 / 14, 3.0)),
    ("xsection_offset_ellipse_beta2", "xsection", _xsection(geo.Ellipse(1.0, 0.2, 0.8, 0.4), 1 / 20, 2.0)),
    ("xsection_pentagon_beta1", "xsection", _xsection(PENTAGON, 1 / 20, 1.0)),
    ("tube_straight_dirichlet", "tube_operator", _tube(OFF_SQUARE, 1 / 8, 1.0, 1 / 8, geo.Constant(0.0), DIRICHLET)),
    ("tube_straight_neumann", "tube_operator", _tube(OFF_SQUARE, 1 / 8, 1.0, 1 / 8, geo.Constant(0.0), NEUMANN)),
    ("tube_constant_dirichlet", "tube_operator", _tube(OFF_SQUARE, 1 / 8, 1.0, 1 / 8, geo.Constant(1.0), DIRICHLET)),
    ("tube_linear_dirichlet", "tube_operator", _tube(OFF_SQUARE, 1 / 8, 1.75, 1 / 8, geo.LinearRate(1.0), DIRICHLET)),
    ("tube_linear_neumann", "tube_operator", _tube(OFF_SQUARE, 1 / 8, 1.75, 1 / 8, geo.LinearRate(1.0), NEUMANN)),
    ("tube_power_ellipse_dirichlet", "tube_operator",
     _tube(geo.Ellipse(0.0, 0.0, 1.0, 0.5), 1 / 6, 1.5, 1 / 8, geo.PowerRate(2.0, 2.0), DIRICHLET)),
)


def _asymmetric():
    m = sp.lil_matrix(_stencil(60))
    m[3, 7] = 1e-3
    return SparseSym.from_matrix(m.tocsr())


@dataclass(frozen=True)
class OracleRow:
    ident: str
    module: str
    order: int
    max_diff: float
    tolerance: float
    status: str
    detail: str = ""


def check_operator(ident, module, build, k=5, tol=1e-8, cap=DENSE_CAP, seed=0):
    """LOBPCG vs dense spectrum; passes when every ``|diff| <= tol (1 + |lam|)``."""
    try:
        a = build()
    except AsymmetricMatrix as exc:
        return OracleRow(ident, module, 0, float("nan"), tol, "FAIL", f"AsymmetricMatrix: {exc}")
    try:
        exact = dense_eig(a, cap=cap)[:k]
    except TooLarge as exc:
        return OracleRow(ident, module, a.order, float("nan"), tol, "TooLarge", str(exc))
    res = lobpcg(a, k, tol=1e-10, max_iter=5000, seed=seed)
    diff = np.abs(res.eigenvalues - exact)
    ok = bool(np.all(diff <= tol * (1.0 + np.abs(exact)))) and res.all_converged
    return OracleRow(ident, module, a.order, float(diff.max()), tol, "PASS" if ok else "FAIL",
                     "" if res.all_converged else "not converged")


def run_bundle(tol=1e-8, cap=DENSE_CAP, inject_asymmetry=False, seed=0):
    items = list(BUNDLE)
    if inject_asymmetry:
        items.append(("injected_asymmetry", "eigensolve", _asymmetric))
    return [check_operator(i, m, b, tol=tol, cap=cap, seed=seed) for i, m, b in items]
