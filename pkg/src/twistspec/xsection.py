"""Finite-difference cross-section operators.

The lattice is anchored at the origin: nodes are ``(i h, j h)`` strictly
inside omega, and Dirichlet data is imposed by dropping every other node
(staircase boundary). The angular derivative

    d_tau = t2 d/dt1 - t1 d/dt2

is discretised by centred differences with zero extension, so
``A(beta) = A(0) + beta^2 T^T T`` is symmetric positive definite by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .eigensolve import SparseSym, lobpcg
from .errors import EmptyGrid


@dataclass(frozen=True)
class TransverseGrid:
    h: float
    bbox: tuple
    ij: np.ndarray  # (N, 2) integer lattice indices, row-major order
    coords: np.ndarray  # (N, 2)
    lookup: np.ndarray  # dense index map over the lattice box, -1 outside
    offset: tuple  # lattice index of lookup[0, 0]

    @property
    def size(self):
        return len(self.coords)

    def index(self, i, j):
        """Node number of lattice point ``(i, j)``, or -1."""
        a, b = i - self.offset[0], j - self.offset[1]
        ni, nj = self.lookup.shape
        ok = (a >= 0) & (a < ni) & (b >= 0) & (b < nj)
        out = np.full(np.shape(a), -1, dtype=np.int64)
        out[ok] = self.lookup[a[ok], b[ok]]
        return out


def build_grid(omega, h):
    """Lattice nodes of spacing ``h`` strictly inside ``omega``."""
    if not h > 0:
        raise ValueError("grid spacing must be positive")
    x0, y0, x1, y1 = omega.bbox
    i = np.arange(math.ceil(x0 / h), math.floor(x1 / h) + 1)
    j = np.arange(math.ceil(y0 / h), math.floor(y1 / h) + 1)
    if len(i) == 0 or len(j) == 0:
        raise EmptyGrid(f"no lattice node of spacing {h} inside the cross-section")
    ii, jj = np.meshgrid(i, j, indexing="ij")
    pts = np.stack([ii * h, jj * h], axis=-1)
    inside = omega.contains_points(pts)
    if not inside.any():
        raise EmptyGrid(f"no lattice node of spacing {h} inside the cross-section")
    lookup = np.full(inside.shape, -1, dtype=np.int64)
    lookup[inside] = np.arange(int(inside.sum()))
    ij = np.stack([ii[inside], jj[inside]], axis=-1)
    return TransverseGrid(float(h), tuple(omega.bbox), ij, pts[inside], lookup, (int(i[0]), int(j[0])))


def laplacian(grid):
    """Five-point Dirichlet Laplacian (positive) on the grid."""
    n, h = grid.size, grid.h
    rows, cols = [np.arange(n)], [np.arange(n)]
    vals = [np.full(n, 4.0 / (h * h))]
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        nb = grid.index(grid.ij[:, 0] + di, grid.ij[:, 1] + dj)
        ok = nb >= 0
        rows.append(np.flatnonzero(ok))
        cols.append(nb[ok])
        vals.append(np.full(int(ok.sum()), -1.0 / (h * h)))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


def angular_derivative(grid):
    """Centred-difference matrix of ``t2 d/dt1 - t1 d/dt2`` with zero extension."""
    n, h = grid.size, grid.h
    t1, t2 = grid.coords[:, 0], grid.coords[:, 1]
    rows, cols, vals = [], [], []
    for di, dj, coef in ((1, 0, t2), (-1, 0, -t2), (0, 1, -t1), (0, -1, t1)):
        nb = grid.index(grid.ij[:, 0] + di, grid.ij[:, 1] + dj)
        ok = (nb >= 0) & (coef != 0)
        rows.append(np.flatnonzero(ok))
        cols.append(nb[ok])
        vals.append(coef[ok] / (2.0 * h))
    return sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))


@dataclass(frozen=True)
class XSectionOperator:
    grid: TransverseGrid
    beta: float
    laplacian: sp.csr_matrix
    tau: sp.csr_matrix

    @property
    def twist_term(self):
        return (self.tau.T @ self.tau).tocsr()

    @property
    def matrix(self):
        return SparseSym(self.laplacian + self.beta ** 2 * self.twist_term)


def assemble_xsection(grid, beta):
    return XSectionOperator(grid, float(beta), laplacian(grid), angular_derivative(grid))


@dataclass(frozen=True)
class CrossSectionSpectrum:
    beta: float
    eigenvalues: np.ndarray
    residuals: np.ndarray
    h: float
    nodes: int
    iterations: int
    converged: np.ndarray
    eigenvectors: np.ndarray

    @property
    def lowest(self):
        return float(self.eigenvalues[0])


def eigs_xsection(op, k=1, tol=1e-8, seed=0, max_iter=5000, x0=None):
    """``k`` lowest eigenpairs of the cross-section operator.

    Unconverged pairs are flagged in ``converged``; see
    :meth:`twistspec.eigensolve.EigResult.check`.
    """
    res = lobpcg(op.matrix, k, tol=tol, max_iter=max_iter, seed=seed, x0=x0)
    return CrossSectionSpectrum(op.beta, res.eigenvalues, res.residuals, op.grid.h, op.grid.size,
                                res.iterations, res.converged, res.eigenvectors)


def lowest_eigenvalue(omega, beta, h, k=1, tol=1e-8, seed=0):
    spec = eigs_xsection(assemble_xsection(build_grid(omega, h), beta), k, tol, seed)
    return spec


def richardson(coarse, fine, order=1):
    """Extrapolate values computed at spacings ``2h`` (coarse) and ``h`` (fine)."""
    f = 2.0 ** order
    return (f * fine - coarse) / (f - 1.0)
