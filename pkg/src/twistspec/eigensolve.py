"""Symmetric sparse matrices and a block LOBPCG eigensolver with a dense oracle.

Randomness: initial blocks are drawn from numpy's ``default_rng(seed)``
(PCG64 bit generator), standard normal entries, column-major fill.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from .errors import AsymmetricMatrix, NotConverged, TooLarge

DENSE_CAP = 2000


class SparseSym:
    """Symmetric matrix stored as the CSR lower triangle.

    The full matrix used for products is the lower triangle mirrored, so its
    entries are exactly symmetric.
    """

    def __init__(self, lower):
        lower = sp.csr_matrix(sp.tril(lower), dtype=float)
        lower.sum_duplicates()
        lower.sort_indices()
        self.lower = lower
        strict = sp.tril(lower, k=-1)
        full = (lower + strict.T).tocsr()
        full.sort_indices()
        self._full = full

    @classmethod
    def from_matrix(cls, m, atol=0.0):
        """Wrap a symmetric matrix, rejecting it if ``|M - M^T|`` exceeds ``atol``."""
        m = sp.csr_matrix(m, dtype=float)
        if m.shape[0] != m.shape[1]:
            raise AsymmetricMatrix(f"matrix is not square: {m.shape}")
        diff = abs(m - m.T)
        worst = diff.max() if diff.nnz else 0.0
        if worst > atol:
            raise AsymmetricMatrix(f"matrix is not symmetric (max |A - A^T| = {worst:.3e})")
        return cls(m)

    @property
    def order(self):
        return self.lower.shape[0]

    @property
    def indptr(self):
        return self.lower.indptr

    @property
    def indices(self):
        return self.lower.indices

    @property
    def data(self):
        return self.lower.data

    @property
    def nnz(self):
        return self._full.nnz

    def to_scipy(self):
        return self._full

    def diagonal(self):
        return self._full.diagonal()

    def to_dense(self):
        return self._full.toarray()

    def matvec(self, v):
        return self._full @ v

    __matmul__ = matvec

    def shifted(self, c):
        return SparseSym(self.lower + c * sp.identity(self.order, format="csr"))


@dataclass
class EigResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    iterations: int
    converged: np.ndarray
    warnings: tuple = field(default_factory=tuple)

    @property
    def all_converged(self):
        return bool(np.all(self.converged))

    def check(self):
        """Return self, or raise :class:`NotConverged` carrying this result."""
        if not self.all_converged:
            bad = np.flatnonzero(~self.converged).tolist()
            raise NotConverged(f"eigenpairs {bad} did not converge in {self.iterations} iterations", self)
        return self


def dense_eig(a, cap=DENSE_CAP):
    """Full ascending spectrum by tridiagonal reduction and implicit QL/QR."""
    n = a.order if isinstance(a, SparseSym) else a.shape[0]
    if n > cap:
        raise TooLarge(f"order {n} exceeds dense cap {cap}")
    dense = a.to_dense() if isinstance(a, SparseSym) else np.asarray(a.toarray() if sp.issparse(a) else a, float)
    return sla.eigh(dense, eigvals_only=True, driver="ev")


def _normalise_signs(v):
    idx = np.argmax(np.abs(v) > 1e-8 * np.abs(v).max(axis=0), axis=0)
    signs = np.sign(v[idx, np.arange(v.shape[1])])
    signs[signs == 0] = 1.0
    return v * signs


def _project_out(v, bases):
    for b in bases:
        if b is not None and b.shape[1] and v.shape[1]:
            v = v - b @ (b.T @ v)
    return v


def _orthonormalise(v, bases=(), drop=1e-7):
    """Orthonormalise the columns of ``v`` against ``bases`` and each other.

    Directions whose component outside ``bases`` is below ``drop`` of the
    original (unit-normalised) columns are discarded.
    """
    if v is None or v.shape[1] == 0:
        return v
    norms = np.linalg.norm(v, axis=0)
    norms[norms == 0] = 1.0
    v = _project_out(_project_out(v / norms, bases), bases)
    g = v.T @ v
    ev, u = np.linalg.eigh(0.5 * (g + g.T))
    keep = ev > drop * drop
    if not keep.any():
        return v[:, :0]
    v = v @ (u[:, keep] / np.sqrt(ev[keep]))
    v = _project_out(v, bases)
    g = v.T @ v
    try:
        chol = np.linalg.cholesky(0.5 * (g + g.T))
    except np.linalg.LinAlgError:
        q, _ = np.linalg.qr(v)
        return q
    return sla.solve_triangular(chol, v.T, lower=True).T


def _rayleigh_ritz(s, a_s):
    g = s.T @ a_s
    g = 0.5 * (g + g.T)
    return np.linalg.eigh(g)


def lobpcg(a, k, tol=1e-8, max_iter=1000, seed=0, x0=None, precond="jacobi", block=None):
    """The ``k`` smallest eigenpairs of ``a`` by block LOBPCG with soft locking.

    ``precond`` is ``"jacobi"``, ``None`` (identity) or a callable acting on a
    block of residuals. A pair counts as converged once its residual satisfies
    ``|A v - lam v| <= tol (1 + |lam|)``. Unconverged pairs are flagged in the
    result, never raised; call :meth:`EigResult.check` to raise.
    """
    n = a.order
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= {n}, got k={k}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    m = min(2 * k, k + 8, n) if block is None else min(max(block, k), n)
    warnings = []

    if 3 * m >= n:
        vals, vecs = np.linalg.eigh(a.to_dense())
        vecs = _normalise_signs(vecs[:, :k])
        res = np.linalg.norm(a @ vecs - vecs * vals[:k], axis=0)
        return EigResult(vals[:k], vecs, res, 0, res <= tol * (1 + np.abs(vals[:k])), ())

    if precond == "jacobi":
        diag = a.diagonal()
        if np.any(diag <= 0):
            warnings.append("SingularPreconditioner: nonpositive diagonal, using identity")
            prec = None
        else:
            inv = 1.0 / diag

            def prec(r):
                return r * inv[:, None]
    elif precond is None or callable(precond):
        prec = precond
    else:
        raise ValueError(f"unknown preconditioner {precond!r}")

    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, m))
    if x0 is not None:
        x0 = np.asarray(x0, dtype=float).reshape(n, -1)[:, :m]
        x[:, : x0.shape[1]] = x0
    x = _orthonormalise(x)
    ax = a @ x
    theta, c = _rayleigh_ritz(x, ax)
    x, ax, lam = x @ c, ax @ c, theta
    p = None
    it = 0
    for it in range(1, max_iter + 1):
        r = ax - x * lam
        rnorm = np.linalg.norm(r, axis=0)
        conv = rnorm <= tol * (1.0 + np.abs(lam))
        if conv[:k].all():
            break
        active = ~conv
        w = r[:, active]
        if prec is not None:
            w = prec(w)
        if p is not None:
            p = p[:, active]
        w = _orthonormalise(w, (x,))
        p = _orthonormalise(p, (x, w)) if p is not None and p.shape[1] else None
        extra = w if p is None else np.hstack([w, p])
        if extra.shape[1] == 0:
            warnings.append("stagnation: search directions collapsed")
            break
        a_extra = a @ extra
        s = np.hstack([x, extra])
        a_s = np.hstack([ax, a_extra])
        theta, c = _rayleigh_ritz(s, a_s)
        c = c[:, :m]
        lam = theta[:m]
        x = s @ c
        ax = a_s @ c
        p = extra @ c[m:, :]
        if it % 25 == 0:
            x = _orthonormalise(x)
            ax = a @ x
            theta, c = _rayleigh_ritz(x, ax)
            x, ax, lam = x @ c, ax @ c, theta

    x = _normalise_signs(x[:, :k])
    vals = np.array([float(v @ (a @ v)) for v in x.T])
    res = np.linalg.norm(a @ x - x * vals, axis=0)
    conv = res <= tol * (1.0 + np.abs(vals))
    order = np.argsort(vals, kind="stable")
    return EigResult(vals[order], x[:, order], res[order], it, conv[order], tuple(warnings))
