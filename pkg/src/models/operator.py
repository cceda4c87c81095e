"""Completely positive operators and the records produced by scaling them."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from math import lcm
from typing import Any, Dict, List, Optional, Sequence, Tuple

import mpmath
import numpy as np

from ..errors import DegenerateOperator, DimensionMismatch, NonFinite, SingularMatrix
from .matrices import PreciseMat, RationalMat, RealMat, block_repeat, is_precise, to_precise, to_real


def _pairwise_sum(parts: List[RealMat]) -> RealMat:
    """Reduce partial sums pairwise in a fixed order."""

    while len(parts) > 1:
        merged = [parts[i] + parts[i + 1] for i in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            merged.append(parts[-1])
        parts = merged
    return parts[0]


def _symmetrize(matrix: RealMat) -> RealMat:
    return 0.5 * (matrix + matrix.T)


def _shape(matrix) -> Tuple[int, int]:
    if is_precise(matrix):
        return (matrix.rows, matrix.cols)
    return tuple(np.shape(matrix))


def _norm(matrix) -> float:
    if is_precise(matrix):
        return float(mpmath.mnorm(matrix, "f"))
    return float(np.linalg.norm(matrix))


class CPOperator:
    """Rectangular completely positive map ``X -> sum_i A_i X A_i^T``.

    Kraus matrices are stored as one read-only array of shape ``(m, n2, n1)``.
    ``exact`` optionally carries the same Kraus list as ``RationalMat`` values;
    rank statements about the operator are only made from the exact mirror.
    """

    precise = False

    def __init__(self, kraus, exact: Optional[Sequence[RationalMat]] = None) -> None:
        array = np.array(kraus, dtype=np.float64)
        if array.ndim == 2:
            array = array[np.newaxis, :, :]
        if array.ndim != 3 or array.shape[0] == 0:
            raise DegenerateOperator("an operator needs at least one Kraus matrix")
        if not np.all(np.isfinite(array)):
            raise NonFinite("Kraus matrices contain NaN or infinite entries")
        if not np.any(array):
            raise DegenerateOperator("every Kraus matrix is zero")
        array.setflags(write=False)
        self._kraus = array

        if exact is not None:
            exact = tuple(exact)
            if len(exact) != array.shape[0]:
                raise DimensionMismatch("exact mirror has a different number of Kraus matrices")
            if any(mat.shape != array.shape[1:] for mat in exact):
                raise DimensionMismatch("exact mirror shapes do not match the Kraus matrices")
        self.exact: Optional[Tuple[RationalMat, ...]] = exact

    @classmethod
    def from_exact(cls, matrices: Sequence[RationalMat]) -> "CPOperator":
        matrices = list(matrices)
        if not matrices:
            raise DegenerateOperator("an operator needs at least one Kraus matrix")
        shape = matrices[0].shape
        if any(mat.shape != shape for mat in matrices):
            raise DimensionMismatch("all Kraus matrices must share dimensions")
        return cls(np.stack([mat.to_float() for mat in matrices]), exact=matrices)

    # ------------------------------------------------------------------
    # Shape
    # ------------------------------------------------------------------
    @property
    def kraus(self) -> RealMat:
        return self._kraus

    @property
    def m(self) -> int:
        return int(self.kraus.shape[0])

    @property
    def n1(self) -> int:
        return int(self.kraus.shape[2])

    @property
    def n2(self) -> int:
        return int(self.kraus.shape[1])

    @property
    def is_integer(self) -> bool:
        return self.exact is not None and all(mat.is_integer for mat in self.exact)

    @property
    def common_denominator(self) -> int:
        """Least common denominator of the exact Kraus entries."""

        if self.exact is None:
            raise ValueError("operator has no exact mirror")
        return lcm(*(mat.common_denominator for mat in self.exact))

    # ------------------------------------------------------------------
    # Maps
    # ------------------------------------------------------------------
    def _kraus_sum(self, left: RealMat, middle: RealMat, right: RealMat, threads: int) -> RealMat:
        if threads <= 1 or left.shape[0] < 2:
            return (left @ middle @ right).sum(axis=0)
        chunks = np.array_split(np.arange(left.shape[0]), min(threads, left.shape[0]))
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(lambda idx: (left[idx] @ middle @ right[idx]).sum(axis=0), chunks)
            )
        return _pairwise_sum(parts)

    def apply(self, x, threads: int = 1) -> RealMat:
        """``T(X) = sum_i A_i X A_i^T`` for a symmetric ``n1 x n1`` matrix."""

        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n1, self.n1):
            raise DimensionMismatch(f"apply expects a {self.n1}x{self.n1} matrix, got {x.shape}")
        kraus = self.kraus
        return _symmetrize(self._kraus_sum(kraus, x, kraus.transpose(0, 2, 1), threads))

    def dual_apply(self, y, threads: int = 1) -> RealMat:
        """``T*(Y) = sum_i A_i^T Y A_i`` for a symmetric ``n2 x n2`` matrix."""

        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.n2, self.n2):
            raise DimensionMismatch(f"dual_apply expects a {self.n2}x{self.n2} matrix, got {y.shape}")
        kraus = self.kraus
        return _symmetrize(self._kraus_sum(kraus.transpose(0, 2, 1), y, kraus, threads))

    def dual(self) -> "CPOperator":
        exact = tuple(mat.T for mat in self.exact) if self.exact is not None else None
        return CPOperator(self.kraus.transpose(0, 2, 1), exact=exact)

    def scaled(self, left: Optional[RealMat] = None, right: Optional[RealMat] = None) -> "CPOperator":
        """Operator with Kraus matrices ``left A_i right`` (float only)."""

        kraus = self.kraus
        if left is not None:
            kraus = np.asarray(left, dtype=np.float64) @ kraus
        if right is not None:
            kraus = kraus @ np.asarray(right, dtype=np.float64)
        return CPOperator(kraus)

    def exact_apply(self, x: RationalMat) -> RationalMat:
        """``T(X)`` in exact arithmetic; needs the exact mirror."""

        if self.exact is None:
            raise ValueError("operator has no exact mirror")
        if x.shape != (self.n1, self.n1):
            raise DimensionMismatch(f"apply expects a {self.n1}x{self.n1} matrix, got {x.shape}")
        total = RationalMat.zeros(self.n2, self.n2)
        for mat in self.exact:
            total = total + mat @ x @ mat.T
        return total

    def to_dict(self) -> Dict[str, Any]:
        if self.exact is not None:
            kraus = [mat.to_strings() for mat in self.exact]
        else:
            kraus = self.kraus.tolist()
        return {"n1": self.n1, "n2": self.n2, "kraus": kraus}

    def to_float(self) -> "CPOperator":
        return self


class SquareEmbedding(CPOperator):
    """Square operator on ``n1*n2`` dimensions with Kraus ``(1/sqrt(n1)) E_ij (x) A_k``.

    ``E_ij`` runs over the ``n1 x n2`` matrix units. The operator is kept in
    factored form: ``T~(X) = I_{n1} (x) (1/n1) sum_j T(X_jj)`` and
    ``T~*(Y) = I_{n2} (x) (1/n1) sum_i T*(Y_ii)``, where ``X_jj`` are the
    ``n1 x n1`` diagonal blocks of ``X`` and ``Y_ii`` the ``n2 x n2`` ones of
    ``Y``. Scaling by block-identity factors stays in factored form. The base
    may be a ``PreciseOperator``; the maps then work on ``mpmath`` matrices.
    """

    BLOCK_RTOL = 1e-10

    def __init__(self, base) -> None:
        self.base = base
        self.exact = None

    @property
    def precise(self) -> bool:
        return self.base.precise

    @property
    def m(self) -> int:
        return self.base.m * self.base.n1 * self.base.n2

    @property
    def n1(self) -> int:
        return self.base.n1 * self.base.n2

    @property
    def n2(self) -> int:
        return self.base.n1 * self.base.n2

    @property
    def is_integer(self) -> bool:
        return False

    @cached_property
    def _materialized(self) -> RealMat:
        base = self.base.to_float()
        a, b = base.n1, base.n2
        weight = 1.0 / np.sqrt(a)
        mats = []
        for i in range(a):
            for j in range(b):
                unit = np.zeros((a, b))
                unit[i, j] = 1.0
                for k in range(base.m):
                    mats.append(weight * np.kron(unit, base.kraus[k]))
        array = np.stack(mats)
        array.setflags(write=False)
        return array

    @property
    def kraus(self) -> RealMat:
        return self._materialized

    def _as_input(self, matrix, size: int, name: str):
        if not is_precise(matrix):
            matrix = np.asarray(matrix, dtype=np.float64)
        if _shape(matrix) != (size, size):
            raise DimensionMismatch(f"{name} expects a {size}x{size} matrix, got {_shape(matrix)}")
        return matrix

    def apply(self, x, threads: int = 1):
        x = self._as_input(x, self.n1, "apply")
        a, b = self.base.n1, self.base.n2
        inner = _pairwise_sum(
            [self.base.apply(x[j * a:(j + 1) * a, j * a:(j + 1) * a], threads) for j in range(b)]
        )
        return block_repeat(inner / a, a)

    def dual_apply(self, y, threads: int = 1):
        y = self._as_input(y, self.n2, "dual_apply")
        a, b = self.base.n1, self.base.n2
        inner = _pairwise_sum(
            [self.base.dual_apply(y[i * b:(i + 1) * b, i * b:(i + 1) * b], threads) for i in range(a)]
        )
        return block_repeat(inner / a, b)

    def dual(self) -> CPOperator:
        return CPOperator(self.kraus.transpose(0, 2, 1))

    def _block_factor(self, factor, copies: int, size: int):
        block = factor[:size, :size]
        reference = block_repeat(block, copies)
        if _norm(factor - reference) <= self.BLOCK_RTOL * max(1.0, _norm(factor)):
            return block
        return None

    def scaled(self, left=None, right=None) -> CPOperator:
        a, b = self.base.n1, self.base.n2
        if left is not None and not is_precise(left):
            left = np.asarray(left, dtype=np.float64)
        if right is not None and not is_precise(right):
            right = np.asarray(right, dtype=np.float64)
        left_block = None if left is None else self._block_factor(left, a, b)
        right_block = None if right is None else self._block_factor(right, b, a)
        if (left is None or left_block is not None) and (right is None or right_block is not None):
            return SquareEmbedding(self.base.scaled(left_block, right_block))
        if self.precise:
            raise DimensionMismatch("a precise square embedding only scales by block-identity factors")
        return CPOperator(self.kraus).scaled(left, right)

    def to_float(self) -> "SquareEmbedding":
        return SquareEmbedding(self.base.to_float()) if self.precise else self

    def to_dict(self) -> Dict[str, Any]:
        return {"n1": self.n1, "n2": self.n2, "kraus": self.kraus.tolist()}


class PreciseOperator:
    """Kraus list held as ``mpmath`` matrices at the working precision.

    Provides the maps alternating scaling needs. Build and use it inside
    ``mpmath.workprec``; ``threads`` is accepted and ignored.
    """

    precise = True
    exact = None
    is_integer = False

    def __init__(self, kraus: Sequence[PreciseMat]) -> None:
        kraus = tuple(kraus)
        if not kraus:
            raise DegenerateOperator("an operator needs at least one Kraus matrix")
        if any(_shape(mat) != _shape(kraus[0]) for mat in kraus):
            raise DimensionMismatch("all Kraus matrices must share dimensions")
        self.kraus = kraus

    @classmethod
    def lift(cls, operator: CPOperator):
        """Same operator in ``mpmath`` arithmetic, from the exact mirror when there is one."""

        if isinstance(operator, SquareEmbedding):
            return SquareEmbedding(cls.lift(operator.base))
        if operator.exact is not None:
            return cls([mat.to_precise() for mat in operator.exact])
        return cls([to_precise(mat) for mat in operator.kraus])

    @property
    def m(self) -> int:
        return len(self.kraus)

    @property
    def n1(self) -> int:
        return self.kraus[0].cols

    @property
    def n2(self) -> int:
        return self.kraus[0].rows

    def apply(self, x: PreciseMat, threads: int = 1) -> PreciseMat:
        if _shape(x) != (self.n1, self.n1):
            raise DimensionMismatch(f"apply expects a {self.n1}x{self.n1} matrix, got {_shape(x)}")
        total = _pairwise_sum([mat * x * mat.T for mat in self.kraus])
        return (total + total.T) / 2

    def dual_apply(self, y: PreciseMat, threads: int = 1) -> PreciseMat:
        if _shape(y) != (self.n2, self.n2):
            raise DimensionMismatch(f"dual_apply expects a {self.n2}x{self.n2} matrix, got {_shape(y)}")
        total = _pairwise_sum([mat.T * y * mat for mat in self.kraus])
        return (total + total.T) / 2

    def scaled(self, left: Optional[PreciseMat] = None, right: Optional[PreciseMat] = None) -> "PreciseOperator":
        kraus = self.kraus
        if left is not None:
            kraus = [left * mat for mat in kraus]
        if right is not None:
            kraus = [mat * right for mat in kraus]
        return PreciseOperator(kraus)

    def to_float(self) -> CPOperator:
        return CPOperator(np.stack([to_real(mat) for mat in self.kraus]))


@dataclass(frozen=True)
class OperatorScaling:
    """Left factor ``B`` (``n2 x n2``) and right factor ``C`` (``n1 x n1``)."""

    left: RealMat
    right: RealMat
    log_abs_det_left: float = 0.0
    log_abs_det_right: float = 0.0

    def __post_init__(self) -> None:
        for name, factor in (("left", self.left), ("right", self.right)):
            gram = np.asarray(factor).T @ np.asarray(factor)
            if gram.size and np.linalg.eigvalsh(gram)[0] <= 0.0:
                raise SingularMatrix(f"{name} scaling factor is not invertible")

    @classmethod
    def identity(cls, n2: int, n1: int) -> "OperatorScaling":
        return cls(left=np.eye(n2), right=np.eye(n1))

    def apply_to(self, operator: CPOperator) -> CPOperator:
        return operator.scaled(self.left, self.right)


@dataclass(frozen=True)
class ScalingTrace:
    """History of one alternating-scaling run.

    ``capacity_bound`` is the capacity objective of the input operator at the
    accumulated right scaling, an upper bound on its capacity (0.0 when the
    final operator has a singular ``T(I)``).
    """

    steps: int
    ds_history: Tuple[float, ...]
    accumulated: OperatorScaling
    final_operator: CPOperator
    capacity_checkpoints: Tuple[Tuple[int, float], ...] = ()
    capacity_bound: float = 0.0
    converged: bool = False

    @property
    def final_ds(self) -> float:
        return self.ds_history[-1]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "steps": self.steps,
            "ds_history": list(self.ds_history),
            "capacity_checkpoints": [list(point) for point in self.capacity_checkpoints],
            "capacity_bound": self.capacity_bound,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class CapacityObjective:
    """``Det((n2/n1) T(X)) / Det(X)^{n2/n1}`` at one ``X``.

    ``singular`` is set when ``T(X)`` is singular; ``value`` is then exactly
    0.0 and ``log_value`` is ``-inf``.
    """

    value: float
    log_value: float
    singular: bool = False

    def to_dict(self) -> Dict[str, Any]:
        return {"value": self.value, "log_value": self.log_value, "singular": self.singular}


@dataclass(frozen=True)
class CapacityEstimate:
    """Capacity of an operator with the run that produced it.

    ``value`` is exactly 0.0 when the operator was shown to have zero capacity.
    ``converged`` is False when the run reached the feasibility threshold but
    not the accuracy target.
    """

    value: float
    trace: Optional[ScalingTrace]
    converged: bool = True
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    def to_dict(self) -> Dict[str, Any]:
        payload: Dict[str, Any] = {
            "capacity": self.value,
            "converged": self.converged,
            "diagnostics": dict(self.diagnostics),
        }
        if self.trace is not None:
            payload["steps"] = self.trace.steps
            payload["final_ds"] = self.trace.final_ds
        return payload


@dataclass(frozen=True)
class RankVerdict:
    """Outcome of the rank non-decreasing test.

    ``verdict`` is ``"yes"``, ``"no"`` or ``"inconclusive"``. A ``"no"`` may
    carry an exact PSD ``witness`` with ``rank(T(X))/n2 < rank(X)/n1``.
    """

    verdict: str
    witness: Optional[RationalMat] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    trace: Optional[ScalingTrace] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "witness": self.witness.to_strings() if self.witness is not None else None,
            "diagnostics": dict(self.diagnostics),
        }


__all__ = [
    "CPOperator",
    "CapacityEstimate",
    "CapacityObjective",
    "OperatorScaling",
    "PreciseOperator",
    "RankVerdict",
    "ScalingTrace",
    "SquareEmbedding",
]
