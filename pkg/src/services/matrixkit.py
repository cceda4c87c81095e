"""Float and exact linear algebra used by the scaling and feasibility services.

Two arithmetic worlds live here: 64-bit ``numpy`` arrays for every iterative
computation, and ``Fraction`` matrices for rank and dimension statements that
decide a verdict. ``frobenius``, ``psd_sqrt_inv`` and ``logdet`` also accept
``mpmath`` matrices and then work at the current ``mpmath`` precision.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from math import lcm
from typing import List, Optional, Tuple

import mpmath
import numpy as np

from ..errors import DimensionMismatch, NonFinite, NonSymmetric, SingularMatrix
from ..models.matrices import PreciseMat, RationalMat, RealMat, SymEig, is_precise

LOGGER = logging.getLogger(__name__)

SYMMETRY_RTOL = 1e-10
SINGULAR_FLOOR_RTOL = 1e-12


# ----------------------------------------------------------------------
# Float side
# ----------------------------------------------------------------------
def as_real_mat(values, name: str = "matrix") -> RealMat:
    """Return ``values`` as a finite 2-D float64 array or raise ``NonFinite``."""

    array = np.array(values, dtype=np.float64)
    if array.ndim != 2:
        raise DimensionMismatch(f"{name} must be two-dimensional, got shape {array.shape}")
    if not np.all(np.isfinite(array)):
        raise NonFinite(f"{name} contains NaN or infinite entries")
    return array


def frobenius(matrix) -> float:
    if is_precise(matrix):
        return float(mpmath.mnorm(matrix, "f"))
    return float(np.linalg.norm(matrix, "fro"))


def _require_symmetric(matrix: RealMat, name: str) -> RealMat:
    if matrix.shape[0] != matrix.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {matrix.shape}")
    asymmetry = frobenius(matrix - matrix.T)
    if asymmetry > SYMMETRY_RTOL * max(1.0, frobenius(matrix)):
        raise NonSymmetric(f"{name} is not symmetric (asymmetry {asymmetry:.3e})")
    return 0.5 * (matrix + matrix.T)


def sym_eig(matrix) -> SymEig:
    """Spectral decomposition of a symmetric matrix, eigenvalues ascending.

    LAPACK's symmetric solver is deterministic on a fixed platform, so repeated
    runs give bit-identical scaling traces.
    """

    m = _require_symmetric(as_real_mat(matrix), "matrix")
    eigenvalues, eigenvectors = np.linalg.eigh(m)
    return SymEig(eigenvalues=eigenvalues, eigenvectors=eigenvectors)


def _positive_spectrum(matrix, floor: Optional[float], name: str) -> SymEig:
    eig = sym_eig(matrix)
    largest = float(np.max(np.abs(eig.eigenvalues))) if eig.eigenvalues.size else 0.0
    threshold = SINGULAR_FLOOR_RTOL * largest if floor is None else floor
    smallest = float(eig.eigenvalues[0]) if eig.eigenvalues.size else 0.0
    if largest == 0.0 or smallest <= threshold:
        raise SingularMatrix(
            f"{name} is singular: smallest eigenvalue {smallest:.3e} <= floor {threshold:.3e}"
        )
    return eig


def _precise_positive_spectrum(matrix: PreciseMat, floor: Optional[float]) -> Tuple[List, PreciseMat]:
    """Ascending eigenvalues and eigenvectors of an ``mpmath`` matrix, or ``SingularMatrix``."""

    if matrix.rows != matrix.cols:
        raise DimensionMismatch(f"matrix must be square, got shape {(matrix.rows, matrix.cols)}")
    asymmetry = mpmath.mnorm(matrix - matrix.T, "f")
    if asymmetry > SYMMETRY_RTOL * max(1, mpmath.mnorm(matrix, "f")):
        raise NonSymmetric(f"matrix is not symmetric (asymmetry {float(asymmetry):.3e})")
    eigenvalues, eigenvectors = mpmath.eigsy((matrix + matrix.T) / 2)
    values = [eigenvalues[i] for i in range(matrix.rows)]
    largest = max(abs(value) for value in values)
    threshold = SINGULAR_FLOOR_RTOL * largest if floor is None else floor
    if largest == 0 or values[0] <= threshold:
        raise SingularMatrix(
            f"matrix is singular: smallest eigenvalue {float(values[0]):.3e} <= floor {float(threshold):.3e}"
        )
    return values, eigenvectors


def psd_sqrt_inv(matrix, floor: Optional[float] = None) -> RealMat:
    """Return ``M^{-1/2}`` for a symmetric positive definite ``M``.

    ``floor`` defaults to ``1e-12`` times the largest eigenvalue; an eigenvalue
    at or below it raises ``SingularMatrix``.
    """

    if is_precise(matrix):
        values, q = _precise_positive_spectrum(matrix, floor)
        result = q * mpmath.diag([1 / mpmath.sqrt(value) for value in values]) * q.T
        return (result + result.T) / 2
    eig = _positive_spectrum(matrix, floor, "matrix")
    q = eig.eigenvectors
    result = (q / np.sqrt(eig.eigenvalues)) @ q.T
    return 0.5 * (result + result.T)


def psd_sqrt(matrix) -> RealMat:
    """Return the PSD square root of a symmetric PSD matrix (negative noise clipped)."""

    eig = sym_eig(matrix)
    q = eig.eigenvectors
    result = (q * np.sqrt(np.clip(eig.eigenvalues, 0.0, None))) @ q.T
    return 0.5 * (result + result.T)


def logdet(matrix) -> float:
    """Sum of the logs of the eigenvalues of a symmetric positive definite matrix."""

    if is_precise(matrix):
        if matrix.rows == 0:
            return 0.0
        values, _ = _precise_positive_spectrum(matrix, 0.0)
        return float(mpmath.fsum(mpmath.log(value) for value in values))
    eig = sym_eig(matrix)
    if eig.eigenvalues.size == 0:
        return 0.0
    if eig.eigenvalues[0] <= 0.0:
        raise SingularMatrix(
            f"matrix is not positive definite: smallest eigenvalue {eig.eigenvalues[0]:.3e}"
        )
    return float(np.sum(np.log(eig.eigenvalues)))


def log_abs_det(matrix) -> float:
    """``log|det G|`` for an invertible square ``G``, computed as ``logdet(G^T G)/2``."""

    g = as_real_mat(matrix)
    if g.shape[0] != g.shape[1]:
        raise DimensionMismatch(f"determinant needs a square matrix, got shape {g.shape}")
    return 0.5 * logdet(g.T @ g)


def numerical_rank(matrix, rtol: float = 1e-9) -> int:
    """SVD rank of a float matrix; the exact rank is authoritative where both exist."""

    m = as_real_mat(matrix)
    if m.size == 0:
        return 0
    singular = np.linalg.svd(m, compute_uv=False)
    if singular[0] == 0.0:
        return 0
    return int(np.sum(singular > rtol * singular[0]))


# ----------------------------------------------------------------------
# Exact side
# ----------------------------------------------------------------------
def _integer_rows(matrix: RationalMat) -> Tuple[List[List[int]], List[int]]:
    """Scale each row by the lcm of its denominators; return rows and the scalings."""

    rows: List[List[int]] = []
    scales: List[int] = []
    for row in matrix.entries:
        scale = 1
        for value in row:
            scale = lcm(scale, value.denominator)
        rows.append([int(value * scale) for value in row])
        scales.append(scale)
    return rows, scales


def _bareiss(rows: List[List[int]], ncols: int) -> Tuple[int, List[int], int]:
    """Fraction-free echelon form in place.

    Returns ``(rank, pivot_columns, sign)`` where ``sign`` tracks row swaps. The
    pivot is the first nonzero entry at or below the current row, so the result
    is deterministic.
    """

    nrows = len(rows)
    rank = 0
    previous = 1
    sign = 1
    pivots: List[int] = []
    for col in range(ncols):
        if rank == nrows:
            break
        pivot_row = next((r for r in range(rank, nrows) if rows[r][col] != 0), None)
        if pivot_row is None:
            continue
        if pivot_row != rank:
            rows[rank], rows[pivot_row] = rows[pivot_row], rows[rank]
            sign = -sign
        pivot = rows[rank][col]
        for r in range(rank + 1, nrows):
            factor = rows[r][col]
            for c in range(col + 1, ncols):
                rows[r][c] = (pivot * rows[r][c] - factor * rows[rank][c]) // previous
            rows[r][col] = 0
        previous = pivot
        pivots.append(col)
        rank += 1
    return rank, pivots, sign


def exact_rank(matrix: RationalMat) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination."""

    if matrix.rows == 0 or matrix.cols == 0:
        return 0
    rows, _ = _integer_rows(matrix)
    rank, _, _ = _bareiss(rows, matrix.cols)
    return rank


def exact_determinant(matrix: RationalMat) -> Fraction:
    """Exact determinant of a square rational matrix."""

    if matrix.rows != matrix.cols:
        raise DimensionMismatch(f"determinant needs a square matrix, got {matrix.shape}")
    n = matrix.rows
    if n == 0:
        return Fraction(1)
    rows, scales = _integer_rows(matrix)
    rank, _, sign = _bareiss(rows, n)
    if rank < n:
        return Fraction(0)
    denominator = 1
    for scale in scales:
        denominator *= scale
    return Fraction(sign * rows[n - 1][n - 1], denominator)


def exact_rref(matrix: RationalMat) -> Tuple[RationalMat, List[int]]:
    """Reduced row echelon form over the rationals and its pivot columns."""

    rows = [list(row) for row in matrix.entries]
    nrows, ncols = matrix.rows, matrix.cols
    pivots: List[int] = []
    r = 0
    for col in range(ncols):
        if r == nrows:
            break
        pivot_row = next((i for i in range(r, nrows) if rows[i][col] != 0), None)
        if pivot_row is None:
            continue
        rows[r], rows[pivot_row] = rows[pivot_row], rows[r]
        pivot = rows[r][col]
        rows[r] = [value / pivot for value in rows[r]]
        for i in range(nrows):
            if i != r and rows[i][col] != 0:
                factor = rows[i][col]
                rows[i] = [a - factor * b for a, b in zip(rows[i], rows[r])]
        pivots.append(col)
        r += 1
    return RationalMat(nrows, ncols, tuple(tuple(row) for row in rows)), pivots


def exact_kernel_basis(matrix: RationalMat) -> RationalMat:
    """Columns spanning the null space of ``matrix``; ``cols - rank`` of them."""

    rref, pivots = exact_rref(matrix)
    free = [c for c in range(matrix.cols) if c not in pivots]
    columns = []
    for f in free:
        vector = [Fraction(0)] * matrix.cols
        vector[f] = Fraction(1)
        for row_index, pivot_col in enumerate(pivots):
            vector[pivot_col] = -rref.entries[row_index][f]
        columns.append(vector)
    return RationalMat.from_columns(columns, matrix.cols)


def exact_column_basis(matrix: RationalMat) -> RationalMat:
    """Canonical basis of the column space: nonzero rows of ``rref(M^T)`` as columns.

    Two matrices with the same column space get the same basis, which makes it a
    dictionary key for subspaces.
    """

    rref, pivots = exact_rref(matrix.T)
    columns = [rref.entries[i] for i in range(len(pivots))]
    return RationalMat.from_columns(columns, matrix.rows)


def subspace_intersection(first: RationalMat, second: RationalMat) -> RationalMat:
    """Canonical basis of ``col(first) ∩ col(second)``."""

    if first.rows != second.rows:
        raise DimensionMismatch("subspaces live in different ambient spaces")
    if first.cols == 0 or second.cols == 0:
        return RationalMat(first.rows, 0, tuple(() for _ in range(first.rows)))
    # [U | -W] (a; b) = 0  ->  U a spans the intersection
    stacked = first.hstack(second.scale(-1))
    kernel = exact_kernel_basis(stacked)
    if kernel.cols == 0:
        return RationalMat(first.rows, 0, tuple(() for _ in range(first.rows)))
    coefficients = RationalMat(first.cols, kernel.cols, kernel.entries[: first.cols])
    return exact_column_basis(first @ coefficients)


def subspace_sum(first: RationalMat, second: RationalMat) -> RationalMat:
    """Canonical basis of ``col(first) + col(second)``."""

    if first.rows != second.rows:
        raise DimensionMismatch("subspaces live in different ambient spaces")
    return exact_column_basis(first.hstack(second))


def rationalize(value: float, max_denominator: int) -> Fraction:
    """Continued-fraction rounding of ``value`` to a denominator at most ``max_denominator``."""

    if not np.isfinite(value):
        raise NonFinite(f"cannot rationalize {value!r}")
    return Fraction(float(value)).limit_denominator(max_denominator)


def rationalize_subspace(basis: RealMat, max_denominator: int, rtol: float = 1e-9) -> Optional[RationalMat]:
    """Exact basis for the column span of a float basis, or ``None`` if it degenerates.

    The float basis is brought to reduced row echelon form of its transpose so
    that the rounded entries are those of a canonical representative.
    """

    basis = as_real_mat(basis)
    if basis.shape[1] == 0:
        return None
    rows = basis.T.copy()
    k, n = rows.shape
    scale = max(float(np.max(np.abs(rows))), 1e-300)
    r = 0
    for col in range(n):
        if r == k:
            break
        pivot_row = r + int(np.argmax(np.abs(rows[r:, col])))
        if abs(rows[pivot_row, col]) <= rtol * scale:
            continue
        rows[[r, pivot_row]] = rows[[pivot_row, r]]
        rows[r] /= rows[r, col]
        for i in range(k):
            if i != r:
                rows[i] -= rows[i, col] * rows[r]
        r += 1
    if r < k:
        return None
    exact_rows = [[rationalize(value, max_denominator) for value in row] for row in rows]
    candidate = RationalMat.from_rows(exact_rows).T
    if exact_rank(candidate) < k:
        return None
    return candidate


__all__ = [
    "as_real_mat",
    "exact_column_basis",
    "exact_determinant",
    "exact_kernel_basis",
    "exact_rank",
    "exact_rref",
    "frobenius",
    "log_abs_det",
    "logdet",
    "numerical_rank",
    "psd_sqrt",
    "psd_sqrt_inv",
    "rationalize",
    "rationalize_subspace",
    "subspace_intersection",
    "subspace_sum",
    "sym_eig",
]
