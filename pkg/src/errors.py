"""Exceptions raised by the scaling, capacity and feasibility services."""

from __future__ import annotations

from typing import Any, Dict, Optional


class BLScaleError(RuntimeError):
    """Base class for every library failure."""


class NonFinite(BLScaleError):
    """Raised when a matrix contains NaN or infinite entries."""


class NonSymmetric(BLScaleError):
    """Raised when a matrix expected to be symmetric is not, within tolerance."""


class DimensionMismatch(BLScaleError):
    """Raised when operand shapes do not fit together."""


class SingularMatrix(BLScaleError):
    """Raised when a matrix that must be positive definite is (numerically) singular.

    ``index`` names the offending map or factor when there is one, ``step`` the
    scaling step at which it happened, and ``witness`` an exact subspace basis
    (``RationalMat`` columns) explaining the singularity when one is known.
    """

    def __init__(
        self,
        message: str,
        *,
        index: Optional[int] = None,
        step: Optional[int] = None,
        witness: Any = None,
    ) -> None:
        super().__init__(message)
        self.index = index
        self.step = step
        self.witness = witness


class DegenerateOperator(BLScaleError):
    """Raised for an empty Kraus list or one made only of zero matrices."""


class NonConvergence(BLScaleError):
    """Raised when a scaling run stalls or exhausts its budget without a verdict."""

    def __init__(
        self,
        message: str,
        *,
        steps: int = 0,
        last_value: Optional[float] = None,
        diagnostics: Optional[Dict[str, Any]] = None,
    ) -> None:
        super().__init__(message)
        self.steps = steps
        self.last_value = last_value
        self.diagnostics = diagnostics or {}


class ScalingViolation(BLScaleError):
    """Raised when a datum fails ``sum_j c_j n_j = d n``."""


class NormalizationViolated(BLScaleError):
    """Raised when a datum is not trace normalised (``sum_j p_j tr[B_j^T B_j] = n``)."""


class BudgetExceeded(BLScaleError):
    """Raised when a combinatorial enumeration would exceed its size guard."""


class InputError(BLScaleError):
    """Raised for malformed datum, operator or vector-family files."""

    def __init__(self, message: str, *, field: Optional[str] = None, line: Optional[int] = None) -> None:
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field {field}")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.field = field
        self.line = line


__all__ = [
    "BLScaleError",
    "BudgetExceeded",
    "DegenerateOperator",
    "DimensionMismatch",
    "InputError",
    "NonConvergence",
    "NonFinite",
    "NonSymmetric",
    "NormalizationViolated",
    "ScalingViolation",
    "SingularMatrix",
]
