"""Dense reference computations for small matrices.

Everything here is O(n^3) and meant as ground truth in tests, never as part
of the estimation path.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import IO

import numpy as np
import scipy.linalg

from .maxent import Grid, GridDensity
from .matio import CsrMatrix

__all__ = [
    "DenseSpectrum",
    "MAX_DENSE_DIM",
    "exact_logdet",
    "exact_moments",
    "spectral_histogram",
    "cholesky_logdet",
]

MAX_DENSE_DIM = 5000


@dataclass(frozen=True, eq=False)
class DenseSpectrum:
    eigenvalues: np.ndarray
    logdet_exact: float

    @property
    def n(self) -> int:
        return self.eigenvalues.size

    @property
    def lambda_min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def lambda_max(self) -> float:
        return float(self.eigenvalues[-1])

    def mean_log(self, c: float = 1.0) -> float:
        """Exact spectral mean of log(lambda / c)."""
        return float(np.mean(np.log(self.eigenvalues / c)))

    def to_csv(self, stream: IO[str]):
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(["index", "eigenvalue"])
        for i, lam in enumerate(self.eigenvalues):
            writer.writerow([i, repr(float(lam))])


def _as_dense(a) -> np.ndarray:
    if isinstance(a, CsrMatrix):
        return a.to_dense()
    return np.asarray(a, dtype=float)


def exact_logdet(a) -> DenseSpectrum:
    """Full symmetric eigendecomposition; rejects nonpositive spectra."""
    dense = _as_dense(a)
    n = dense.shape[0]
    if dense.shape != (n, n):
        raise ValueError(f"matrix must be square, got {dense.shape}")
    if n > MAX_DENSE_DIM:
        raise ValueError(f"dense oracle is limited to n <= {MAX_DENSE_DIM}, got {n}")
    if not np.allclose(dense, dense.T, rtol=0, atol=1e-12 * np.abs(dense).max()):
        raise ValueError("matrix is not symmetric")
    lam = scipy.linalg.eigvalsh(dense)
    if lam[0] <= 0:
        raise ValueError(f"matrix is not positive definite (smallest eigenvalue {lam[0]:.3g})")
    return DenseSpectrum(lam, float(np.sum(np.log(lam))))


def cholesky_logdet(a) -> float:
    """2 sum log diag(L), an independent route to the log determinant."""
    factor = scipy.linalg.cholesky(_as_dense(a), lower=True)
    return float(2.0 * np.sum(np.log(np.diag(factor))))


def exact_moments(spectrum: DenseSpectrum, c: float, max_moment: int) -> np.ndarray:
    """mu_m = mean((lambda_i / c)^m) for m = 1..max_moment."""
    if c < spectrum.lambda_max * (1 - 1e-12):
        raise ValueError(f"scale {c} is below the largest eigenvalue {spectrum.lambda_max}")
    b = spectrum.eigenvalues / c
    return np.array([np.mean(b**m) for m in range(1, max_moment + 1)])


def spectral_histogram(spectrum: DenseSpectrum, grid: Grid, c: float = 1.0) -> GridDensity:
    """Normalized histogram of lambda / c on the grid cells (unit total mass).

    Eigenvalues exactly at 1 fall in the top cell.
    """
    if spectrum.n == 0:
        raise ValueError("empty spectrum")
    b = spectrum.eigenvalues / c
    if b[0] <= 0 or b[-1] > 1 + 1e-12:
        raise ValueError("normalized spectrum must lie in (0, 1]")
    cells = np.minimum((b / grid.dx).astype(np.int64), grid.size - 1)
    counts = np.bincount(cells, minlength=grid.size).astype(float)
    return GridDensity(counts / (spectrum.n * grid.dx), grid)
