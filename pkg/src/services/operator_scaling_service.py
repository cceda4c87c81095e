"""Operator scaling: normalizations, alternating scaling and capacity estimation."""

from __future__ import annotations

import logging
import math
from typing import Dict, List, Optional, Tuple

import mpmath
import numpy as np

from ..errors import NonConvergence, SingularMatrix
from ..models.matrices import RationalMat, RealMat, block_repeat, to_real
from ..models.operator import (
    CapacityEstimate,
    CapacityObjective,
    CPOperator,
    OperatorScaling,
    PreciseOperator,
    RankVerdict,
    ScalingTrace,
    SquareEmbedding,
)
from .matrixkit import exact_kernel_basis, exact_rank, frobenius, logdet, psd_sqrt_inv

STAGNATION_RTOL = 1e-14
LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max)


def _exp(value: float) -> float:
    return math.exp(value) if value < LOG_FLOAT_MAX else math.inf


def capacity_lower_bound_integer(n: int, d: int) -> float:
    """``exp(-2 n log(n^2 d))``: capacity floor for operators built from integer data."""

    if n < 1 or d < 1:
        raise ValueError("n and d must be positive")
    return math.exp(log_capacity_lower_bound_integer(n, d))


def log_capacity_lower_bound_integer(n: int, d: int) -> float:
    return -2.0 * n * math.log(n * n * d)


def iteration_budget(n: int, M: float, eps: float) -> int:
    """Worst-case alternating-scaling step count ``4 n^3 / eps^2 * (1 + 10 n^2 log(M n))``."""

    if n < 1 or M < 1 or not 0.0 < eps <= 1.0:
        raise ValueError("iteration_budget needs n >= 1, M >= 1 and 0 < eps <= 1")
    return math.ceil(4 * n**3 / eps**2 * (1 + 10 * n**2 * math.log(M * n)))


class OperatorScalingService:
    """Alternating left/right normalization of completely positive operators.

    With ``precision`` set (in bits), alternating scaling runs on ``mpmath``
    matrices at that precision and converts its results back to float64.
    """

    def __init__(
        self,
        *,
        max_steps: int = 20000,
        ds_target: float = 1e-10,
        checkpoint_every: int = 10,
        stagnation_window: int = 50,
        threads: int = 1,
        precision: Optional[int] = None,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        self.max_steps = max_steps
        self.ds_target = ds_target
        self.checkpoint_every = checkpoint_every
        self.stagnation_window = stagnation_window
        self.threads = threads
        self.precision = precision
        self.logger = logger or logging.getLogger(__name__)

    # ------------------------------------------------------------------
    # Public API
    # ------------------------------------------------------------------
    def apply(self, operator: CPOperator, x) -> RealMat:
        return operator.apply(x, threads=self.threads)

    def dual_apply(self, operator: CPOperator, y) -> RealMat:
        return operator.dual_apply(y, threads=self.threads)

    def ds_parts(self, operator: CPOperator) -> Tuple[float, float]:
        """Primal ``tr[(T((n2/n1) I) - I)^2]`` and dual ``tr[(T*(I) - I)^2]`` terms."""

        n1, n2 = operator.n1, operator.n2
        eye1, eye2 = self._eye(operator, n1), self._eye(operator, n2)
        primal = self.apply(operator, eye1 * self._ratio(operator, n2, n1)) - eye2
        dual = self.dual_apply(operator, eye2) - eye1
        return frobenius(primal) ** 2, frobenius(dual) ** 2

    def ds(self, operator: CPOperator) -> float:
        primal, dual = self.ds_parts(operator)
        return primal + dual

    def right_normalize(self, operator: CPOperator) -> Tuple[CPOperator, RealMat]:
        """Scale so that ``T*(I) = I``; the factor is ``T*(I)^{-1/2}``."""

        scaled, factor, _ = self._right_step(operator)
        return scaled, factor

    def left_normalize(self, operator: CPOperator) -> Tuple[CPOperator, RealMat]:
        """Scale so that ``T((n2/n1) I) = I``; the factor is ``sqrt(n1/n2) T(I)^{-1/2}``."""

        scaled, factor, _ = self._left_step(operator)
        return scaled, factor

    def algorithm_g(
        self,
        operator: CPOperator,
        max_steps: Optional[int] = None,
        ds_target: Optional[float] = None,
    ) -> ScalingTrace:
        """Alternate right (odd steps) and left (even steps) normalizations.

        Stops as soon as ``ds <= ds_target`` or after ``max_steps`` steps.
        ``SingularMatrix`` is re-raised with the step at which it happened;
        ``NonConvergence`` is raised when ds stops improving.
        """

        max_steps = self.max_steps if max_steps is None else max_steps
        ds_target = self.ds_target if ds_target is None else ds_target
        if max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.precision is None:
            return self._alternate(operator, max_steps, ds_target)
        with mpmath.workprec(self.precision):
            return self._alternate(PreciseOperator.lift(operator), max_steps, ds_target)

    def _alternate(self, operator, max_steps: int, ds_target: float) -> ScalingTrace:
        n1, n2 = operator.n1, operator.n2
        current = operator
        left, right = self._eye(operator, n2), self._eye(operator, n1)
        log_left = log_right = 0.0
        history: List[float] = [self.ds(current)]
        checkpoints: List[Tuple[int, float]] = []
        step = 0
        converged = history[0] <= ds_target

        while not converged and step < max_steps:
            step += 1
            try:
                if step % 2 == 1:
                    current, factor, log_factor = self._right_step(current)
                    right = right @ factor
                    log_right += log_factor
                else:
                    current, factor, log_factor = self._left_step(current)
                    left = factor @ left
                    log_left += log_factor
            except SingularMatrix as exc:
                self.logger.warning("Singular normalization at step %d: %s", step, exc)
                raise SingularMatrix(
                    f"normalization failed at step {step}: {exc}",
                    index=exc.index,
                    step=step,
                    witness=exc.witness,
                ) from exc

            value = self.ds(current)
            history.append(value)
            if step % self.checkpoint_every == 0:
                bound = self._capacity_bound(current, log_left, log_right)
                checkpoints.append((step, bound))
                self.logger.debug("step %d ds %.6e capacity bound %.6e", step, value, bound)
            converged = value <= ds_target

            if not converged and self._stagnated(history):
                bound = self._capacity_bound(current, log_left, log_right)
                self.logger.warning("ds stagnated at %.6e after %d steps", value, step)
                raise NonConvergence(
                    f"ds stagnated at {value:.6e} after {step} steps",
                    steps=step,
                    last_value=value,
                    diagnostics={"capacity_bound": bound, "ds_tail": history[-3:]},
                )

        if converged:
            self.logger.info("alternating scaling reached ds %.3e in %d steps", history[-1], step)
        return ScalingTrace(
            steps=step,
            ds_history=tuple(history),
            accumulated=OperatorScaling(
                left=to_real(left),
                right=to_real(right),
                log_abs_det_left=log_left,
                log_abs_det_right=log_right,
            ),
            final_operator=current.to_float(),
            capacity_checkpoints=tuple(checkpoints),
            capacity_bound=self._capacity_bound(current, log_left, log_right),
            converged=converged,
        )

    def capacity_objective(self, operator: CPOperator, x) -> CapacityObjective:
        """``Det((n2/n1) T(X)) / Det(X)^{n2/n1}``, flagged singular with value 0.0 when ``T(X)`` is."""

        n1, n2 = operator.n1, operator.n2
        ratio = n2 / n1
        log_det_x = logdet(x)
        try:
            log_det_image = logdet(ratio * self.apply(operator, x))
        except SingularMatrix:
            self.logger.debug("T(X) is singular; capacity objective is zero")
            return CapacityObjective(value=0.0, log_value=-math.inf, singular=True)
        log_value = log_det_image - ratio * log_det_x
        return CapacityObjective(value=_exp(log_value), log_value=log_value)

    def capacity_estimate(
        self,
        operator: CPOperator,
        eps: float,
        max_steps: Optional[int] = None,
        log_floor: Optional[float] = None,
    ) -> CapacityEstimate:
        """Estimate ``cap(T)`` through the determinants of the accumulated scaling.

        ``log_floor`` is the log of a known positive lower bound on the capacity
        of operators of this kind; it defaults to the integer-data floor, scaled
        down for rational entries, when the operator has an exact mirror. A capacity upper bound below
        the floor proves the capacity is zero.
        """

        if not 0.0 < eps < 1.0:
            raise ValueError("eps must lie strictly between 0 and 1")
        if log_floor is None:
            log_floor = self._default_log_floor(operator)
        size = operator.n2
        target = min(self.ds_target, eps**2 / size)
        threshold = 1.0 / (size + 1)

        try:
            trace = self.algorithm_g(operator, max_steps=max_steps, ds_target=target)
        except SingularMatrix as exc:
            return CapacityEstimate(
                value=0.0,
                trace=None,
                diagnostics={"reason": "singular normalization", "step": exc.step},
            )
        except NonConvergence as exc:
            bound = exc.diagnostics.get("capacity_bound")
            if self._below_floor(bound, log_floor):
                return CapacityEstimate(
                    value=0.0, trace=None, diagnostics={"reason": "below capacity floor", "steps": exc.steps}
                )
            if exc.last_value is not None and exc.last_value < threshold and bound:
                return CapacityEstimate(
                    value=bound,
                    trace=None,
                    converged=False,
                    diagnostics={"reason": "stagnated below feasibility threshold", "steps": exc.steps},
                )
            raise

        if trace.converged:
            return CapacityEstimate(value=trace.capacity_bound, trace=trace)
        if trace.final_ds < threshold:
            self.logger.info("capacity estimate did not reach ds target %.3e", target)
            return CapacityEstimate(
                value=trace.capacity_bound,
                trace=trace,
                converged=False,
                diagnostics={"reason": "ds target not reached", "final_ds": trace.final_ds},
            )
        if self._below_floor(trace.capacity_bound, log_floor):
            return CapacityEstimate(
                value=0.0, trace=trace, diagnostics={"reason": "below capacity floor"}
            )
        raise NonConvergence(
            f"ds stayed at {trace.final_ds:.6e} above the feasibility threshold for {trace.steps} steps",
            steps=trace.steps,
            last_value=trace.final_ds,
            diagnostics={"capacity_bound": trace.capacity_bound},
        )

    def square_embed(self, operator: CPOperator) -> SquareEmbedding:
        """Square operator on ``n1*n2`` dimensions with ``cap = cap(T)^{n1}``."""

        return SquareEmbedding(operator)

    def is_rank_nondecreasing(self, operator: CPOperator, budget: Optional[int] = None) -> RankVerdict:
        """Decide whether ``T`` is fractional-rank non-decreasing.

        Exact structural failures are checked first when the operator has an
        exact mirror; then alternating scaling runs on the square embedding until ds
        drops below ``1/(N+1)``.
        """

        if operator.exact is not None:
            witness = self.exact_rank_witness(operator)
            if witness is not None:
                return RankVerdict("no", witness=witness, diagnostics={"reason": "exact rank drop"})

        embedded = self.square_embed(operator)
        threshold = 1.0 / (embedded.n2 + 1)
        trace: Optional[ScalingTrace] = None
        try:
            trace = self.algorithm_g(embedded, max_steps=budget, ds_target=threshold)
        except SingularMatrix as exc:
            return RankVerdict(
                "no", diagnostics={"reason": "singular normalization", "step": exc.step}
            )
        except NonConvergence as exc:
            bound = exc.diagnostics.get("capacity_bound")
            diagnostics: Dict[str, object] = {"reason": "stagnated", "steps": exc.steps}
        else:
            if trace.final_ds < threshold:
                return RankVerdict("yes", diagnostics={"steps": trace.steps}, trace=trace)
            bound = trace.capacity_bound
            diagnostics = {"reason": "budget exhausted", "steps": trace.steps}

        log_floor = self._default_log_floor(operator)
        if log_floor is not None and bound is not None:
            if bound <= 0.0 or math.log(bound) / operator.n1 < log_floor:
                diagnostics["reason"] = "capacity below exact-data floor"
                return RankVerdict("no", diagnostics=diagnostics, trace=trace)
        return RankVerdict("inconclusive", diagnostics=diagnostics, trace=trace)

    def exact_rank_witness(self, operator: CPOperator) -> Optional[RationalMat]:
        """PSD ``X`` with ``rank(T(X))/n2 < rank(X)/n1`` from structural rank drops.

        ``X = I`` when the Kraus matrices side by side have rank below ``n2``;
        ``X = v v^T`` for a vector ``v`` killed by every Kraus matrix.
        """

        if operator.exact is None:
            return None
        side_by_side = operator.exact[0]
        for matrix in operator.exact[1:]:
            side_by_side = side_by_side.hstack(matrix)
        if exact_rank(side_by_side) < operator.n2:
            return RationalMat.identity(operator.n1)
        kernel = exact_kernel_basis(RationalMat.vstack(operator.exact))
        if kernel.cols:
            vector = RationalMat.from_columns([kernel.columns()[0]], operator.n1)
            return vector @ vector.T
        return None

    def fractional_rank_check(self, operator: CPOperator, x: RationalMat) -> bool:
        """True when ``rank(T(X))/n2 < rank(X)/n1`` in exact arithmetic."""

        image_rank = exact_rank(operator.exact_apply(x))
        return operator.n1 * image_rank < operator.n2 * exact_rank(x)

    def capacity_duality_gap(self, operator: CPOperator, eps: float) -> Dict[str, float]:
        """Both sides of ``cap(T)^{1/n2} = (n2/n1) cap(T*)^{1/n1}``."""

        n1, n2 = operator.n1, operator.n2
        primal = self.capacity_estimate(operator, eps).value
        dual = self.capacity_estimate(operator.dual(), eps).value
        lhs = primal ** (1.0 / n2)
        rhs = (n2 / n1) * dual ** (1.0 / n1)
        gap = abs(lhs - rhs) / max(abs(lhs), abs(rhs)) if max(lhs, rhs) > 0 else 0.0
        return {"lhs": lhs, "rhs": rhs, "relative_gap": gap}

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------
    def _right_step(self, operator: CPOperator) -> Tuple[CPOperator, RealMat, float]:
        gram = self.dual_apply(operator, self._eye(operator, operator.n2))
        factor, log_det = self._inverse_sqrt(operator, gram, output_side=False)
        return operator.scaled(right=factor), factor, -0.5 * log_det

    def _left_step(self, operator: CPOperator) -> Tuple[CPOperator, RealMat, float]:
        n1, n2 = operator.n1, operator.n2
        image = self.apply(operator, self._eye(operator, n1))
        inverse_sqrt, log_det = self._inverse_sqrt(operator, image, output_side=True)
        root = mpmath.sqrt(self._ratio(operator, n1, n2)) if operator.precise else math.sqrt(n1 / n2)
        factor = inverse_sqrt * root
        log_factor = 0.5 * n2 * math.log(n1 / n2) - 0.5 * log_det
        return operator.scaled(left=factor), factor, log_factor

    @staticmethod
    def _inverse_sqrt(operator: CPOperator, gram: RealMat, output_side: bool) -> Tuple[RealMat, float]:
        """``gram^{-1/2}`` and ``logdet(gram)``, block by block for square embeddings."""

        if isinstance(operator, SquareEmbedding):
            a, b = operator.base.n1, operator.base.n2
            copies, size = (a, b) if output_side else (b, a)
            block = gram[:size, :size]
            return block_repeat(psd_sqrt_inv(block), copies), copies * logdet(block)
        return psd_sqrt_inv(gram), logdet(gram)

    def _capacity_bound(self, current: CPOperator, log_left: float, log_right: float) -> float:
        """Capacity objective of the input operator at ``X = C C^T``."""

        ratio = current.n2 / current.n1
        image = self.apply(current, self._eye(current, current.n1))
        try:
            log_image = logdet(image * self._ratio(current, current.n2, current.n1))
        except SingularMatrix:
            return 0.0
        return _exp(log_image - 2.0 * log_left - 2.0 * ratio * log_right)

    @staticmethod
    def _eye(operator, n: int):
        return mpmath.eye(n) if operator.precise else np.eye(n)

    @staticmethod
    def _ratio(operator, numerator: int, denominator: int):
        if operator.precise:
            return mpmath.mpf(numerator) / denominator
        return numerator / denominator

    def _stagnated(self, history: List[float]) -> bool:
        window = self.stagnation_window
        if len(history) <= window:
            return False
        before, now = history[-1 - window], history[-1]
        return before - now < STAGNATION_RTOL * before

    @staticmethod
    def _default_log_floor(operator: CPOperator) -> Optional[float]:
        """Integer-data floor, lowered by ``L^{-2 n2}`` for exact entries with denominator ``L``."""

        if operator.exact is None:
            return None
        n1, n2 = operator.n1, operator.n2
        floor = log_capacity_lower_bound_integer(n2, math.ceil(n1 * n1 / n2))
        return floor - 2 * n2 * math.log(operator.common_denominator)

    @staticmethod
    def _below_floor(bound: Optional[float], log_floor: Optional[float]) -> bool:
        if log_floor is None or bound is None:
            return False
        return bound <= 0.0 or math.log(bound) < log_floor


operator_scaling_service = OperatorScalingService()


__all__ = [
    "OperatorScalingService",
    "capacity_lower_bound_integer",
    "iteration_budget",
    "log_capacity_lower_bound_integer",
    "operator_scaling_service",
]
