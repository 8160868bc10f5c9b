"""Random SPD test matrices with known or cheaply computable log determinants."""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg

from .matio import CsrMatrix

__all__ = ["banded_spd", "banded_logdet", "diagonal", "random_sparse_spd", "wishart"]


def diagonal(values) -> CsrMatrix:
    values = np.asarray(values, dtype=float)
    n = values.size
    return CsrMatrix(n, np.arange(n + 1), np.arange(n), values)


def _extreme_eigs(s: sp.spmatrix) -> tuple[float, float]:
    lam = scipy.linalg.eigvalsh(s.toarray())
    return float(lam[0]), float(lam[-1])


def random_sparse_spd(n: int, cond: float, nnz_per_row: int = 10, rng=None) -> CsrMatrix:
    """Shifted random sparse symmetric matrix with condition number ``cond``.

    Off-diagonal entries are standard normal at random positions; the
    diagonal shift is chosen from the dense spectrum so that
    lambda_max / lambda_min equals ``cond`` up to round-off.
    """
    rng = np.random.default_rng(rng)
    k = n * nnz_per_row // 2
    rows = rng.integers(0, n, size=k)
    cols = rng.integers(0, n, size=k)
    keep = rows != cols
    upper = sp.coo_matrix((rng.standard_normal(keep.sum()), (rows[keep], cols[keep])), shape=(n, n))
    s = (upper + upper.T).tocsr()
    lo, hi = _extreme_eigs(s)
    shift = (hi - lo) / (cond - 1.0) - lo
    return CsrMatrix.from_scipy(s + shift * sp.identity(n, format="csr"))


def wishart(n: int, dof: int | None = None, ridge: float = 0.1, rng=None) -> CsrMatrix:
    """G^T G / dof + ridge I with G a dof x n standard normal matrix (dense)."""
    rng = np.random.default_rng(rng)
    dof = dof or n
    g = rng.standard_normal((dof, n))
    return CsrMatrix.from_dense(g.T @ g / dof + ridge * np.eye(n))


def banded_spd(n: int, bandwidth: int = 3, cond: float = 1e3, rng=None) -> tuple[CsrMatrix, np.ndarray]:
    """Random symmetric banded SPD matrix and its LAPACK upper band storage.

    Band entries are standard normal; the diagonal is shifted so that the
    smallest eigenvalue is lambda_max / cond, with the extremes of the
    unshifted band found by Lanczos.
    """
    rng = np.random.default_rng(rng)
    band = np.zeros((bandwidth + 1, n))
    diags, offsets = [], []
    for k in range(1, bandwidth + 1):
        band[bandwidth - k, k:] = rng.standard_normal(n - k)
        diags += [band[bandwidth - k, k:], band[bandwidth - k, k:]]
        offsets += [k, -k]
    off = sp.diags(diags, offsets, shape=(n, n), format="csr")
    lo = scipy.sparse.linalg.eigsh(off, k=1, which="SA", tol=1e-10, return_eigenvectors=False)[0]
    hi = scipy.sparse.linalg.eigsh(off, k=1, which="LA", tol=1e-10, return_eigenvectors=False)[0]
    shift = (hi - lo) / (cond - 1.0) - lo
    band[bandwidth] = shift
    a = off + shift * sp.identity(n, format="csr")
    return CsrMatrix.from_scipy(a), band


def banded_logdet(band: np.ndarray) -> float:
    """Exact log determinant from upper band storage via banded Cholesky."""
    factor = scipy.linalg.cholesky_banded(band)
    return float(2.0 * np.sum(np.log(factor[-1])))
