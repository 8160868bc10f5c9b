"""Matrix Market ingest, compressed sparse row storage and spectral bounds.

Only real coordinate matrices are accepted. Symmetric files store one
triangle; it is mirrored on read so the resulting :class:`CsrMatrix` always
holds both triangles explicitly.
"""

from __future__ import annotations

import io
import os
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Literal

import numpy as np
import scipy.sparse as sp

__all__ = [
    "CsrMatrix",
    "MatrixMarketError",
    "NormalizationFactor",
    "gershgorin_bound",
    "matvec",
    "parse_matrix_market",
    "read_matrix_market",
    "write_matrix_market",
]

SYMMETRY_RTOL = 1e-12


class MatrixMarketError(ValueError):
    """Raised for malformed or unsupported Matrix Market input."""


@dataclass(frozen=True, eq=False)
class CsrMatrix:
    """Square real matrix in compressed sparse row form.

    Arrays are made read-only on construction; instances are safe to share.
    """

    n: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        row_ptr = np.ascontiguousarray(self.row_ptr, dtype=np.int64)
        col_idx = np.ascontiguousarray(self.col_idx, dtype=np.int64)
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        for arr in (row_ptr, col_idx, values):
            arr.flags.writeable = False
        object.__setattr__(self, "row_ptr", row_ptr)
        object.__setattr__(self, "col_idx", col_idx)
        object.__setattr__(self, "values", values)
        self._check_structure()

    def _check_structure(self):
        n = self.n
        if n < 1:
            raise ValueError(f"dimension must be positive, got {n}")
        if self.row_ptr.shape != (n + 1,):
            raise ValueError("row_ptr must have length n + 1")
        if self.row_ptr[0] != 0 or self.row_ptr[-1] != self.col_idx.size:
            raise ValueError("row_ptr must start at 0 and end at nnz")
        if self.col_idx.size != self.values.size:
            raise ValueError("col_idx and values differ in length")
        if np.any(np.diff(self.row_ptr) < 0):
            raise ValueError("row_ptr must be nondecreasing")
        if self.nnz and (self.col_idx.min() < 0 or self.col_idx.max() >= n):
            raise ValueError("column index out of range")
        # strictly increasing inside each row: a decrease is only allowed
        # where a new row begins
        steps = np.diff(self.col_idx)
        row_starts = np.zeros(self.nnz, dtype=bool)
        row_starts[self.row_ptr[1:-1][self.row_ptr[1:-1] < self.nnz]] = True
        if np.any((steps <= 0) & ~row_starts[1:]):
            raise ValueError("column indices must be strictly increasing within a row")

    @property
    def nnz(self) -> int:
        return int(self.col_idx.size)

    @cached_property
    def _scipy(self) -> sp.csr_matrix:
        m = sp.csr_matrix((self.values, self.col_idx, self.row_ptr), shape=(self.n, self.n))
        m.has_sorted_indices = True
        return m

    @classmethod
    def from_scipy(cls, m) -> "CsrMatrix":
        m = sp.csr_matrix(m)
        m.sum_duplicates()
        m.sort_indices()
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"matrix must be square, got shape {m.shape}")
        return cls(m.shape[0], m.indptr, m.indices, m.data)

    @classmethod
    def from_dense(cls, a: np.ndarray) -> "CsrMatrix":
        return cls.from_scipy(sp.csr_matrix(np.asarray(a, dtype=float)))

    @classmethod
    def from_triplets(cls, n: int, rows, cols, vals) -> "CsrMatrix":
        """Build from 0-based coordinates; duplicate coordinates are summed."""
        coo = sp.coo_matrix((np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))), shape=(n, n))
        return cls.from_scipy(coo.tocsr())

    def to_triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        rows = np.repeat(np.arange(self.n), np.diff(self.row_ptr))
        return rows, self.col_idx.copy(), self.values.copy()

    def to_scipy(self) -> sp.csr_matrix:
        return self._scipy.copy()

    def to_dense(self) -> np.ndarray:
        return self._scipy.toarray()

    def diagonal(self) -> np.ndarray:
        return self._scipy.diagonal()

    def scaled(self, factor: float) -> "CsrMatrix":
        return CsrMatrix(self.n, self.row_ptr, self.col_idx, self.values * factor)

    def trace(self) -> float:
        return float(self.diagonal().sum())

    def trace_of_square(self) -> float:
        """Tr(A^2) for symmetric A, i.e. the sum of squared stored entries."""
        return float(np.dot(self.values, self.values))

    def is_symmetric(self, rtol: float = SYMMETRY_RTOL) -> bool:
        m = self._scipy
        diff = abs(m - m.T)
        scale = np.abs(self.values).max() if self.nnz else 0.0
        return diff.nnz == 0 or diff.max() <= rtol * scale


@dataclass(frozen=True)
class NormalizationFactor:
    """Positive scale c used to map the spectrum of A into (0, 1]."""

    c: float
    method: Literal["gershgorin", "supplied"] = "supplied"

    def __post_init__(self):
        if not (np.isfinite(self.c) and self.c > 0):
            raise ValueError(f"normalization factor must be positive and finite, got {self.c}")


def gershgorin_bound(a: CsrMatrix) -> NormalizationFactor:
    """Largest Gershgorin disc edge, max_i(a_ii + sum_{j != i} |a_ij|)."""
    m = a._scipy
    diag = m.diagonal()
    abs_rows = np.asarray(abs(m).sum(axis=1)).ravel()
    edges = diag + (abs_rows - np.abs(diag))
    return NormalizationFactor(float(edges.max()), "gershgorin")


def matvec(a: CsrMatrix, x: np.ndarray) -> np.ndarray:
    """y = A x, accumulated row by row.

    ``x`` may also be an (n, k) block, in which case every column is
    multiplied independently.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[0] != a.n or x.ndim > 2:
        raise ValueError(f"dimension mismatch: matrix is {a.n}x{a.n}, vector has shape {x.shape}")
    return a._scipy @ x


def parse_matrix_market(stream: IO[str]) -> CsrMatrix:
    """Read a ``matrix coordinate real {general|symmetric}`` stream.

    General matrices must be numerically symmetric. Every diagonal entry must
    be strictly positive; positive definiteness itself is not checked.
    """
    header = stream.readline()
    tokens = header.strip().split()
    if len(tokens) != 5 or tokens[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(f"malformed header: {header.strip()!r}")
    obj, fmt, field_, symm = (t.lower() for t in tokens[1:])
    if obj != "matrix" or fmt != "coordinate":
        raise MatrixMarketError(f"only 'matrix coordinate' files are supported, got {obj} {fmt}")
    if field_ not in ("real", "double", "integer"):
        raise MatrixMarketError(f"unsupported field type {field_!r}")
    if symm not in ("general", "symmetric"):
        raise MatrixMarketError(f"unsupported symmetry {symm!r}")

    line = stream.readline()
    while line and (line.startswith("%") or not line.strip()):
        line = stream.readline()
    try:
        nrows, ncols, nent = (int(t) for t in line.split())
    except ValueError:
        raise MatrixMarketError(f"malformed size line: {line.strip()!r}") from None
    if nrows != ncols:
        raise MatrixMarketError(f"matrix must be square, got {nrows}x{ncols}")

    body = stream.read()
    if nent:
        try:
            data = np.loadtxt(io.StringIO(body), comments="%", ndmin=2)
        except ValueError as exc:
            raise MatrixMarketError(f"malformed entry: {exc}") from None
    else:
        data = np.empty((0, 3))
    if data.shape[0] != nent or (nent and data.shape[1] != 3):
        raise MatrixMarketError(f"expected {nent} entries with 3 columns, got array of shape {data.shape}")

    rows = data[:, 0].astype(np.int64) - 1
    cols = data[:, 1].astype(np.int64) - 1
    vals = data[:, 2]
    if nent and (rows.min() < 0 or cols.min() < 0 or rows.max() >= nrows or cols.max() >= ncols):
        raise MatrixMarketError("entry index out of range")

    if symm == "symmetric":
        off = rows != cols
        rows, cols, vals = (
            np.concatenate([rows, cols[off]]),
            np.concatenate([cols, rows[off]]),
            np.concatenate([vals, vals[off]]),
        )
    a = CsrMatrix.from_triplets(nrows, rows, cols, vals)
    if symm == "general" and not a.is_symmetric():
        raise MatrixMarketError("general matrix is not numerically symmetric")
    diag = a.diagonal()
    if np.any(diag <= 0):
        i = int(np.argmax(diag <= 0))
        raise MatrixMarketError(f"nonpositive diagonal entry at row {i + 1}: {diag[i]}")
    return a


def read_matrix_market(path: str | os.PathLike) -> CsrMatrix:
    with open(path) as fh:
        return parse_matrix_market(fh)


def write_matrix_market(a: CsrMatrix, stream: IO[str], symmetric: bool = True, comment: str | None = None):
    """Write ``a`` in coordinate form; ``symmetric`` stores the lower triangle only."""
    rows, cols, vals = a.to_triplets()
    if symmetric:
        keep = rows >= cols
        rows, cols, vals = rows[keep], cols[keep], vals[keep]
    stream.write(f"%%MatrixMarket matrix coordinate real {'symmetric' if symmetric else 'general'}\n")
    if comment:
        for line in comment.splitlines():
            stream.write(f"% {line}\n")
    stream.write(f"{a.n} {a.n} {rows.size}\n")
    table = np.column_stack([rows + 1, cols + 1, vals]) if rows.size else np.empty((0, 3))
    np.savetxt(stream, table, fmt=["%d", "%d", "%.17g"])
