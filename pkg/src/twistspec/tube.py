"""Straight-gauge twisted Laplacian on a truncated tube ``(-L, L) x omega``.

The matrix is the Gram form of

    Q(psi) = sum_i |(psi_{i+1} - psi_i)/h1 + rate_{i+1/2} T (psi_{i+1} + psi_i)/2|^2
             + sum_i psi_i^T A0 psi_i

with ``T`` the transverse angular derivative and ``A0`` the transverse
Laplacian. Dirichlet ends keep the two boundary differences against zero
ghost slices; Neumann ends drop them. Unknowns are ordered slice by slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.linalg import eigh_tridiagonal
from scipy.special import j0

from .eigensolve import SparseSym, lobpcg
from .errors import NoInradius, ZeroVector
from .special import bessel_j0_zero
from .xsection import angular_derivative, laplacian

DIRICHLET = "dirichlet"
NEUMANN = "neumann"


@dataclass(frozen=True)
class LongitudinalGrid:
    L: float
    n: int
    end: str = DIRICHLET

    def __post_init__(self):
        if not self.L > 0:
            raise ValueError("half-length must be positive")
        if self.n < 1:
            raise ValueError("need at least one slice")
        if self.end not in (DIRICHLET, NEUMANN):
            raise ValueError(f"unknown end condition {self.end!r}")

    @classmethod
    def from_spacing(cls, L, h1, end=DIRICHLET):
        n = int(round(2.0 * L / h1)) - 1
        return cls(float(L), n, end)

    @property
    def h1(self):
        return 2.0 * self.L / (self.n + 1)

    @property
    def x(self):
        return -self.L + self.h1 * np.arange(1, self.n + 1)

    def with_end(self, end):
        return LongitudinalGrid(self.L, self.n, end)


def _difference_terms(lgrid):
    """Difference operator ``D`` (terms x slices) and midpoint abscissae of its rows."""
    n = lgrid.n
    if lgrid.end == DIRICHLET:
        m = np.arange(n + 1)
    else:
        m = np.arange(1, n)
    rows, cols, vals = [], [], []
    for r, term in enumerate(m):
        if term - 1 >= 0:
            rows.append(r), cols.append(term - 1), vals.append(-1.0)
        if term < n:
            rows.append(r), cols.append(term), vals.append(1.0)
    d = sp.csr_matrix((vals, (rows, cols)), shape=(len(m), n))
    mid = -lgrid.L + (m + 0.5) * lgrid.h1
    return d, mid


@dataclass(frozen=True)
class TubeOperator:
    matrix: SparseSym
    tgrid: object
    lgrid: LongitudinalGrid
    profile: object
    midpoint_rates: np.ndarray

    @property
    def order(self):
        return self.matrix.order


def assemble_tube(tgrid, lgrid, profile):
    """Assemble the truncated-tube operator for the given grids and twist profile."""
    a0 = laplacian(tgrid)
    tau = angular_derivative(tgrid)
    eye_t = sp.identity(tgrid.size, format="csr")
    d, mid = _difference_terms(lgrid)
    rates = np.asarray(profile.rate(mid), dtype=float)
    h1 = lgrid.h1

    dtd = (d.T @ d) / (h1 * h1)
    blocks = sp.kron(dtd, eye_t) + sp.kron(sp.identity(lgrid.n), a0)
    if np.any(rates != 0):
        c = sp.diags(0.5 * rates) @ abs(d)
        cross = sp.kron((d.T @ c) / h1, tau)
        blocks = blocks + cross + cross.T + sp.kron(c.T @ c, (tau.T @ tau))
    return TubeOperator(SparseSym(sp.csr_matrix(blocks)), tgrid, lgrid, profile, rates)


def stencil_eigenvalues(n, h1, end=DIRICHLET):
    """Exact eigenvalues of the 1D second-difference matrix used for the ends."""
    k = np.arange(1, n + 1) if end == DIRICHLET else np.arange(n)
    if end == DIRICHLET:
        return 4.0 / h1 ** 2 * np.sin(k * np.pi / (2 * (n + 1))) ** 2
    return 4.0 / h1 ** 2 * np.sin(k * np.pi / (2 * n)) ** 2


def rayleigh_quotient(op, v):
    """``v^T H v / v^T v``; an upper bound for the lowest eigenvalue."""
    v = np.asarray(v, dtype=float).ravel()
    vv = float(v @ v)
    if vv == 0.0:
        raise ZeroVector("trial vector vanishes on every node")
    return float(v @ (op.matrix @ v)) / vv


def trial_cylinder_mode(tgrid, lgrid, r):
    """Radial Bessel ground mode of the embedded cylinder times a half-cosine.

    Supported where ``|t| < r``, so it is an admissible Dirichlet trial
    function whatever the twist.
    """
    if r is None or not r > 0:
        raise NoInradius("the origin is not inside the cross-section")
    rho = np.hypot(tgrid.coords[:, 0], tgrid.coords[:, 1])
    radial = np.where(rho < r, j0(bessel_j0_zero() * rho / r), 0.0)
    axial = np.cos(np.pi * lgrid.x / (2.0 * lgrid.L))
    return np.kron(axial, radial)


class TensorPreconditioner:
    """Approximate inverse of the tube operator in a transverse eigenbasis.

    With ``Q`` the eigenvectors of ``A0 + b^2 T^T T`` (``b`` the rate when it
    is constant, else 0), ``T^T T`` is replaced by its diagonal ``tau`` in
    that basis and the mixed longitudinal-angular terms are dropped. Each
    transverse mode then leaves a symmetric tridiagonal longitudinal operator

        K1 + (Lambda_k - b^2 tau_k) I + tau_k C^T C,

    which is inverted by a batched LDL^T sweep. For constant rate and
    ``tau`` exact this is the separable part of the operator.
    """

    def __init__(self, op):
        tgrid, lgrid = op.tgrid, op.lgrid
        rates = op.midpoint_rates
        beta = float(rates[0]) if np.all(rates == rates[0]) else 0.0
        a0 = laplacian(tgrid)
        tau = angular_derivative(tgrid)
        ttt = (tau.T @ tau).tocsr()
        lam, q = np.linalg.eigh((a0 + beta ** 2 * ttt).toarray())
        tau_diag = np.einsum("ij,ij->j", q, ttt @ q)
        base = lam - beta ** 2 * tau_diag

        d, _ = _difference_terms(lgrid)
        k1 = ((d.T @ d) / lgrid.h1 ** 2).tocsr()
        c = sp.diags(0.5 * rates) @ abs(d)
        cc = (c.T @ c).tocsr()
        self.diag = k1.diagonal()[:, None] + base[None, :] + cc.diagonal()[:, None] * tau_diag[None, :]
        self.off = k1.diagonal(1)[:, None] + cc.diagonal(1)[:, None] * tau_diag[None, :]
        n1 = lgrid.n
        self.pivot = np.empty_like(self.diag)
        self.mult = np.zeros_like(self.diag)
        self.pivot[0] = self.diag[0]
        for i in range(1, n1):
            self.mult[i] = self.off[i - 1] / self.pivot[i - 1]
            self.pivot[i] = self.diag[i] - self.mult[i] * self.off[i - 1]
        self.q = q
        self.shape = (n1, tgrid.size)

    def __call__(self, r):
        n1, nt = self.shape
        b = r.shape[1]
        v = (r.reshape(n1, nt, b).transpose(0, 2, 1).reshape(n1 * b, nt) @ self.q).reshape(n1, b, nt)
        for i in range(1, n1):
            v[i] -= self.mult[i] * v[i - 1]
        v /= self.pivot[:, None, :]
        for i in range(n1 - 2, -1, -1):
            v[i] -= self.mult[i + 1] * v[i + 1]
        v = v.reshape(n1 * b, nt) @ self.q.T
        return np.ascontiguousarray(v.reshape(n1, b, nt).transpose(0, 2, 1).reshape(n1 * nt, b))

    def lowest_modes(self, count):
        """The ``count`` lowest eigenvectors of the approximating operator."""
        n1, nt = self.shape
        candidates = np.argsort(self.diag.min(axis=0), kind="stable")[: min(nt, count)]
        found = []
        for kk in candidates:
            sel = min(count, n1) - 1
            if n1 == 1:
                vals, vecs = self.diag[:, kk], np.ones((1, 1))
            else:
                vals, vecs = eigh_tridiagonal(self.diag[:, kk], self.off[:, kk], select="i",
                                              select_range=(0, sel))
            for val, vec in zip(vals, vecs.T):
                found.append((float(val), int(kk), vec))
        found.sort(key=lambda item: (item[0], item[1]))
        return np.stack([np.kron(vec, self.q[:, kk]) for _, kk, vec in found[:count]], axis=1)


TENSOR_CAP = 4000


def eigs_tube(op, k=1, tol=1e-8, seed=0, max_iter=5000, x0=None, precond="tensor"):
    """``k`` lowest eigenpairs of a tube operator.

    The default ``"tensor"`` preconditioner (see :class:`TensorPreconditioner`)
    also seeds the initial block; it falls back to Jacobi above
    ``TENSOR_CAP`` transverse nodes. Other values are passed to
    :func:`twistspec.eigensolve.lobpcg`.
    """
    if precond == "tensor":
        if op.tgrid.size > TENSOR_CAP:
            precond = "jacobi"
        else:
            precond = TensorPreconditioner(op)
            if x0 is None:
                x0 = precond.lowest_modes(min(2 * k, k + 8, op.order))
    return lobpcg(op.matrix, k, tol=tol, max_iter=max_iter, seed=seed, x0=x0, precond=precond)
