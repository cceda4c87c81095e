"""Brascamp-Lieb data and the reports built around them."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import DimensionMismatch, NonFinite
from .matrices import RationalMat, RealMat, fraction_to_str, to_fraction
from .operator import ScalingTrace


def exponents_from_fractions(values: Sequence) -> Tuple[Tuple[int, ...], int]:
    """Write rational exponents as numerators over their least common denominator."""

    fractions = [to_fraction(value) for value in values]
    denominator = 1
    for value in fractions:
        denominator = lcm(denominator, value.denominator)
    return tuple(int(value * denominator) for value in fractions), denominator


@dataclass(frozen=True)
class BLDatum:
    """Maps ``B_j: R^n -> R^{n_j}`` with exponents ``p_j = c_j / d``.

    ``maps`` are always the float mirrors. ``exact`` holds the authoritative
    rational maps for data read from files; data produced by scaling are
    float only and have ``exact=None``.
    """

    n: int
    maps: Tuple[RealMat, ...]
    numerators: Tuple[int, ...]
    denominator: int
    exact: Optional[Tuple[RationalMat, ...]] = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionMismatch("ambient dimension must be at least 1")
        if not self.maps:
            raise DimensionMismatch("a datum needs at least one map")
        if len(self.numerators) != len(self.maps):
            raise DimensionMismatch(
                f"{len(self.maps)} maps but {len(self.numerators)} exponents"
            )
        if self.denominator < 1 or any(int(c) < 1 for c in self.numerators):
            raise ValueError("exponent numerators and denominator must be positive integers")
        maps = []
        for index, matrix in enumerate(self.maps):
            array = np.array(matrix, dtype=np.float64)
            if array.ndim != 2 or array.shape[1] != self.n:
                raise DimensionMismatch(f"map {index} must have {self.n} columns, got shape {array.shape}")
            if not np.all(np.isfinite(array)):
                raise NonFinite(f"map {index} contains NaN or infinite entries")
            array.setflags(write=False)
            maps.append(array)
        object.__setattr__(self, "maps", tuple(maps))
        object.__setattr__(self, "numerators", tuple(int(c) for c in self.numerators))
        if self.exact is not None:
            exact = tuple(self.exact)
            if len(exact) != len(maps) or any(e.shape != a.shape for e, a in zip(exact, maps)):
                raise DimensionMismatch("exact maps do not match the float mirrors")
            object.__setattr__(self, "exact", exact)

    # ------------------------------------------------------------------
    # Constructors
    # ------------------------------------------------------------------
    @classmethod
    def from_exact(
        cls, n: int, maps: Sequence[RationalMat], numerators: Sequence[int], denominator: int
    ) -> "BLDatum":
        maps = tuple(maps)
        return cls(
            n=n,
            maps=tuple(m.to_float() for m in maps),
            numerators=tuple(numerators),
            denominator=denominator,
            exact=maps,
        )

    @classmethod
    def from_rows(cls, n: int, maps: Sequence[Sequence[Sequence]], exponents: Sequence) -> "BLDatum":
        """Build an exact datum from nested row lists and rational exponents."""

        numerators, denominator = exponents_from_fractions(exponents)
        exact = [RationalMat.from_rows(rows, cols=n) for rows in maps]
        return cls.from_exact(n, exact, numerators, denominator)

    def with_maps(self, maps: Sequence[RealMat]) -> "BLDatum":
        """Float-only datum with the same exponents and new maps."""

        return BLDatum(self.n, tuple(maps), self.numerators, self.denominator)

    # ------------------------------------------------------------------
    # Derived quantities
    # ------------------------------------------------------------------
    @property
    def m(self) -> int:
        return len(self.maps)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(int(matrix.shape[0]) for matrix in self.maps)

    @property
    def exponents(self) -> Tuple[Fraction, ...]:
        return tuple(Fraction(c, self.denominator) for c in self.numerators)

    @property
    def weights(self) -> RealMat:
        return np.array([c / self.denominator for c in self.numerators], dtype=np.float64)

    @property
    def is_integer(self) -> bool:
        return self.exact is not None and all(matrix.is_integer for matrix in self.exact)

    @property
    def common_denominator(self) -> int:
        """Least common denominator of all exact map entries."""

        if self.exact is None:
            raise ValueError("float-only datum has no exact entries")
        result = 1
        for matrix in self.exact:
            result = lcm(result, matrix.common_denominator)
        return result

    @property
    def bit_size(self) -> int:
        """Largest bit length of any numerator or denominator in the exact maps."""

        if self.exact is None:
            raise ValueError("float-only datum has no exact entries")
        size = 1
        for matrix in self.exact:
            for row in matrix.entries:
                for value in row:
                    size = max(size, abs(value.numerator).bit_length(), value.denominator.bit_length())
        return size

    def reduced_exponents(self) -> Tuple[Tuple[int, ...], int]:
        """Numerators and denominator with their common factor removed."""

        common = self.denominator
        for c in self.numerators:
            common = gcd(common, c)
        return tuple(c // common for c in self.numerators), self.denominator // common

    def to_dict(self) -> Dict[str, Any]:
        if self.exact is not None:
            maps: List = [matrix.to_strings() for matrix in self.exact]
        else:
            maps = [matrix.tolist() for matrix in self.maps]
        return {
            "n": self.n,
            "maps": maps,
            "p": {"numerators": list(self.numerators), "denominator": self.denominator},
        }


@dataclass(frozen=True)
class DatumValidation:
    """Scaling condition ``sum_j c_j n_j = d n`` checked in integers."""

    ok: bool
    weighted_dims: int
    target: int

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "weighted_dims": self.weighted_dims, "target": self.target}


@dataclass(frozen=True)
class GeometricCheck:
    geometric: bool
    projection_residual: float
    isotropy_residual: float


@dataclass(frozen=True)
class GaussianCertificate:
    """Positive definite inputs ``X_j`` and the Lieb ratio they achieve."""

    xs: Tuple[RealMat, ...]
    ratio: float
    log_ratio: float

    def to_dict(self) -> Dict[str, Any]:
        return {"ratio": self.ratio, "xs": [x.tolist() for x in self.xs]}


@dataclass(frozen=True)
class WitnessCheck:
    """Both sides of ``dim V <= sum_j p_j dim(B_j V)`` for one subspace."""

    violated: bool
    lhs_dim: int
    rhs_value: Fraction
    image_dims: Tuple[int, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "violated": self.violated,
            "lhs_dim": self.lhs_dim,
            "rhs_value": fraction_to_str(self.rhs_value),
            "image_dims": list(self.image_dims),
        }


@dataclass(frozen=True)
class FeasibilityReport:
    """Verdict of the feasibility pipeline.

    ``verdict`` is ``"feasible"``, ``"infeasible"`` or ``"inconclusive"``.
    An infeasible verdict carries an exactly verified ``witness`` with
    ``lhs_dim > rhs_value``, unless the scaling condition itself failed; then
    ``witness``, ``lhs_dim`` and ``rhs_value`` are all ``None``.
    """

    verdict: str
    witness: Optional[RationalMat] = None
    lhs_dim: Optional[int] = None
    rhs_value: Optional[Fraction] = None
    diagnostics: str = ""
    details: Dict[str, Any] = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.verdict == "feasible"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "witness": [[fraction_to_str(v) for v in column] for column in self.witness.columns()]
            if self.witness is not None
            else None,
            "lhs_dim": self.lhs_dim,
            "rhs_value": fraction_to_str(self.rhs_value) if self.rhs_value is not None else None,
            "diagnostics": self.diagnostics,
            "details": dict(self.details),
        }


@dataclass(frozen=True)
class BLScalingTrace:
    """History of one BL scaling run.

    ``final_datum`` equals ``left_factors[j] @ B_j @ right_factor`` for the
    input maps ``B_j``. ``log_factors[k]`` is the log of the multiplicative
    change in the BL constant caused by step ``k + 1``.
    """

    steps: int
    g_history: Tuple[float, ...]
    final_datum: BLDatum
    right_factor: RealMat
    left_factors: Tuple[RealMat, ...]
    log_factors: Tuple[float, ...] = ()
    bl_estimates: Tuple[Tuple[int, float], ...] = ()
    converged: bool = False

    @property
    def final_g(self) -> float:
        return self.g_history[-1]

    @property
    def bl_estimate(self) -> Optional[float]:
        """BL constant of the input datum, available once the run converged."""

        if not self.converged:
            return None
        return float(np.exp(-sum(self.log_factors)))


@dataclass(frozen=True)
class BLConstantResult:
    """BL constant estimate. ``status`` is ``finite``, ``infinite`` or ``inconclusive``."""

    value: Optional[float]
    reverse: Optional[float]
    status: str
    upper_bound: float
    capacity: Optional[float] = None
    eps: float = 0.0
    trace: Optional[ScalingTrace] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "reverse": self.reverse,
            "status": self.status,
            "upper_bound": self.upper_bound,
            "capacity": self.capacity,
            "eps": self.eps,
            "steps": self.trace.steps if self.trace is not None else 0,
            "diagnostics": dict(self.diagnostics),
        }


@dataclass(frozen=True)
class NormalizationCheck:
    value: Optional[float]
    gap: Optional[float]
    lower_bound_holds: bool
    geometric: bool
    trace_sum: float

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "gap": self.gap,
            "lower_bound_holds": self.lower_bound_holds,
            "geometric": self.geometric,
            "trace_sum": self.trace_sum,
        }


@dataclass(frozen=True)
class DeterminantBound:
    """``Det(A)`` against ``exp(-eps/6)`` with ``eps = tr[(A - I)^2]``."""

    determinant: float
    eps: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.eps > 1.0 or self.determinant <= self.bound * (1.0 + 1e-12)


__all__ = [
    "BLConstantResult",
    "BLDatum",
    "BLScalingTrace",
    "DatumValidation",
    "DeterminantBound",
    "FeasibilityReport",
    "GaussianCertificate",
    "GeometricCheck",
    "NormalizationCheck",
    "WitnessCheck",
    "exponents_from_fractions",
]
