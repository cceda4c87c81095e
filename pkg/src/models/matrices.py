"""Matrix value types shared by every service.

Float matrices are plain ``numpy`` arrays (``RealMat``); exact matrices are
``RationalMat`` values holding canonical ``Fraction`` entries. High-precision
runs use ``mpmath`` matrices (``PreciseMat``) at the working precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Iterable, List, Sequence, Tuple, Union

import mpmath
import numpy as np
import numpy.typing as npt

from ..errors import DimensionMismatch, InputError

RealMat = npt.NDArray[np.float64]
PreciseMat = mpmath.matrix
RationalLike = Union[int, Fraction, str, float]


def to_fraction(value: RationalLike) -> Fraction:
    """Coerce ``value`` to an exact rational.

    Strings may be ``"p/q"``, integers or decimals; floats are read through
    their shortest decimal representation so ``0.1`` becomes ``1/10``.
    """

    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"boolean is not a matrix entry: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not np.isfinite(value):
            raise InputError(f"non-finite matrix entry: {value!r}")
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not an exact rational: {value!r}") from exc
    raise InputError(f"unsupported matrix entry type: {type(value).__name__}")


def fraction_to_str(value: Fraction) -> str:
    """Serialise ``value`` as ``"p/q"`` (or ``"p"`` for integers)."""

    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class RationalMat:
    """Dense matrix over the rationals, stored row-major."""

    rows: int
    cols: int
    entries: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise DimensionMismatch("matrix dimensions must be non-negative")
        if len(self.entries) != self.rows or any(len(row) != self.cols for row in self.entries):
            raise DimensionMismatch(
                f"entry layout does not match declared shape {self.rows}x{self.cols}"
            )
        canonical = tuple(tuple(to_fraction(value) for value in row) for row in self.entries)
        object.__setattr__(self, "entries", canonical)

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------
    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[RationalLike]], cols: int | None = None) -> "RationalMat":
        row_list = [tuple(to_fraction(value) for value in row) for row in rows]
        if cols is None:
            cols = len(row_list[0]) if row_list else 0
        return cls(len(row_list), cols, tuple(row_list))

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence[RationalLike]], rows: int) -> "RationalMat":
        cols = len(columns)
        if any(len(column) != rows for column in columns):
            raise DimensionMismatch("every column must have the declared number of rows")
        entries = tuple(
            tuple(to_fraction(columns[j][i]) for j in range(cols)) for i in range(rows)
        )
        return cls(rows, cols, entries)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMat":
        return cls(rows, cols, tuple(tuple(Fraction(0) for _ in range(cols)) for _ in range(rows)))

    @classmethod
    def identity(cls, n: int) -> "RationalMat":
        return cls(n, n, tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)))

    # ------------------------------------------------------------------
    # Views and conversions
    # ------------------------------------------------------------------
    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def T(self) -> "RationalMat":
        return RationalMat(
            self.cols,
            self.rows,
            tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)),
        )

    def columns(self) -> List[Tuple[Fraction, ...]]:
        return [tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)]

    def to_float(self) -> RealMat:
        if self.rows == 0 or self.cols == 0:
            return np.zeros((self.rows, self.cols), dtype=np.float64)
        return np.array([[float(value) for value in row] for row in self.entries], dtype=np.float64)

    def to_precise(self) -> PreciseMat:
        """Entries rounded once to the current ``mpmath`` working precision."""

        return mpmath.matrix(
            [[mpmath.mpf(value.numerator) / value.denominator for value in row] for row in self.entries]
        )

    def to_strings(self) -> List[List[str]]:
        return [[fraction_to_str(value) for value in row] for row in self.entries]

    @property
    def is_integer(self) -> bool:
        return all(value.denominator == 1 for row in self.entries for value in row)

    @property
    def common_denominator(self) -> int:
        """Least common multiple of all entry denominators (1 for integer matrices)."""

        result = 1
        for row in self.entries:
            for value in row:
                result = lcm(result, value.denominator)
        return result

    def is_zero(self) -> bool:
        return all(value == 0 for row in self.entries for value in row)

    # ------------------------------------------------------------------
    # Arithmetic
    # ------------------------------------------------------------------
    def __matmul__(self, other: "RationalMat") -> "RationalMat":
        if self.cols != other.rows:
            raise DimensionMismatch(f"cannot multiply {self.shape} by {other.shape}")
        other_columns = other.columns()
        entries = tuple(
            tuple(sum((a * b for a, b in zip(row, column)), Fraction(0)) for column in other_columns)
            for row in self.entries
        )
        return RationalMat(self.rows, other.cols, entries)

    def __add__(self, other: "RationalMat") -> "RationalMat":
        if self.shape != other.shape:
            raise DimensionMismatch(f"cannot add {self.shape} and {other.shape}")
        return RationalMat(
            self.rows,
            self.cols,
            tuple(tuple(a + b for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)),
        )

    def scale(self, factor: RationalLike) -> "RationalMat":
        f = to_fraction(factor)
        return RationalMat(self.rows, self.cols, tuple(tuple(f * v for v in row) for row in self.entries))

    def hstack(self, other: "RationalMat") -> "RationalMat":
        if self.rows != other.rows:
            raise DimensionMismatch("hstack needs equal row counts")
        return RationalMat(
            self.rows,
            self.cols + other.cols,
            tuple(a + b for a, b in zip(self.entries, other.entries)),
        )

    @staticmethod
    def vstack(blocks: Iterable["RationalMat"]) -> "RationalMat":
        blocks = list(blocks)
        if not blocks:
            raise DimensionMismatch("vstack needs at least one block")
        cols = blocks[0].cols
        if any(block.cols != cols for block in blocks):
            raise DimensionMismatch("vstack needs equal column counts")
        entries = tuple(row for block in blocks for row in block.entries)
        return RationalMat(len(entries), cols, entries)


@dataclass(frozen=True)
class SymEig:
    """Spectral decomposition ``M = Q diag(eigenvalues) Q^T`` with ascending eigenvalues."""

    eigenvalues: RealMat
    eigenvectors: RealMat

    def reconstruct(self) -> RealMat:
        q = self.eigenvectors
        return (q * self.eigenvalues) @ q.T


# ----------------------------------------------------------------------
# High-precision matrices
# ----------------------------------------------------------------------
def is_precise(matrix) -> bool:
    return isinstance(matrix, mpmath.matrix)


def to_precise(values) -> PreciseMat:
    """``mpmath`` copy of a float matrix; float entries convert without rounding."""

    if isinstance(values, RationalMat):
        return values.to_precise()
    if is_precise(values):
        return values.copy()
    return mpmath.matrix(np.asarray(values, dtype=np.float64).tolist())


def to_real(matrix) -> RealMat:
    """float64 copy of either kind of matrix."""

    if is_precise(matrix):
        return np.array(matrix.tolist(), dtype=np.float64)
    return np.asarray(matrix, dtype=np.float64)


def block_repeat(block, copies: int):
    """``I_copies (x) block`` in the arithmetic of ``block``."""

    if not is_precise(block):
        return np.kron(np.eye(copies), block)
    rows, cols = block.rows, block.cols
    result = mpmath.zeros(copies * rows, copies * cols)
    for c in range(copies):
        result[c * rows:(c + 1) * rows, c * cols:(c + 1) * cols] = block
    return result


__all__ = [
    "PreciseMat",
    "RationalLike",
    "RationalMat",
    "RealMat",
    "SymEig",
    "block_repeat",
    "fraction_to_str",
    "is_precise",
    "to_fraction",
    "to_precise",
    "to_real",
]
