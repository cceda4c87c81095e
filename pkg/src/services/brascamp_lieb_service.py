"""Brascamp-Lieb data: normalization, BL scaling, constants, bounds and feasibility."""

from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import (
    DimensionMismatch,
    NonConvergence,
    NormalizationViolated,
    ScalingViolation,
    SingularMatrix,
)
from ..models.datum import (
    BLConstantResult,
    BLDatum,
    BLScalingTrace,
    DatumValidation,
    DeterminantBound,
    FeasibilityReport,
    GaussianCertificate,
    GeometricCheck,
    NormalizationCheck,
    WitnessCheck,
)
from ..models.matrices import RationalMat, RealMat
from ..models.operator import CPOperator
from .matrixkit import (
    as_real_mat,
    exact_column_basis,
    exact_kernel_basis,
    exact_rank,
    frobenius,
    log_abs_det,
    logdet,
    psd_sqrt_inv,
    sym_eig,
)
from .operator_scaling_service import (
    OperatorScalingService,
    log_capacity_lower_bound_integer,
    operator_scaling_service,
)
from .witness_search import lattice_candidates, spectral_candidates, structural_candidates

LOG_FLOAT_MAX = math.log(np.finfo(np.float64).max)


def _exp(value: float) -> float:
    return math.exp(value) if value < LOG_FLOAT_MAX else math.inf


def bl_iteration_budget(n: int, m: int, b: int, eps: float) -> int:
    """BL scaling step budget ``(n m log(n m) + n b) / eps``."""

    if n < 1 or m < 1 or b < 0 or eps <= 0:
        raise ValueError("bl_iteration_budget needs n, m >= 1, b >= 0 and eps > 0")
    return max(1, math.ceil((n * m * math.log(n * m) + n * b) / eps))


def log_bl_upper_bound_integer(n: int, d: int) -> float:
    return 4.0 * n * math.log(n * n * d)


def log_bl_upper_bound_dimension_free(n: int, m: int) -> float:
    return 12.0 * n * m * math.log(m * n)


def log_bl_upper_bound_rational(n: int, d: int, b: int) -> float:
    return log_bl_upper_bound_integer(n, d) + n * b


def amgm_det_bound(matrix) -> DeterminantBound:
    """Determinant of a PSD matrix with trace ``n`` against ``exp(-tr[(A - I)^2] / 6)``."""

    a = as_real_mat(matrix)
    n = a.shape[0]
    if abs(np.trace(a) - n) > 1e-9 * max(1, n):
        raise ValueError(f"matrix trace must equal {n}, got {np.trace(a):.12g}")
    eig = sym_eig(a)
    determinant = float(np.prod(np.clip(eig.eigenvalues, 0.0, None)))
    eps = frobenius(a - np.eye(n)) ** 2
    return DeterminantBound(determinant=determinant, eps=eps, bound=math.exp(-eps / 6.0))


class BrascampLiebService:
    """Operations on Brascamp-Lieb data."""

    def __init__(
        self,
        *,
        operator_service: Optional[OperatorScalingService] = None,
        eps: float = 0.01,
        g_target: float = 1e-8,
        max_steps: int = 20000,
        feasibility_steps: int = 2000,
        checkpoint_every: int = 10,
        witness_max_denominator: int = 10**6,
        lattice_limit: int = 400,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        self.operator_service = operator_service or operator_scaling_service
        self.eps = eps
        self.g_target = g_target
        self.max_steps = max_steps
        self.feasibility_steps = feasibility_steps
        self.checkpoint_every = checkpoint_every
        self.witness_max_denominator = witness_max_denominator
        self.lattice_limit = lattice_limit
        self.logger = logger or logging.getLogger(__name__)

    # ------------------------------------------------------------------
    # Structure
    # ------------------------------------------------------------------
    def validate(self, datum: BLDatum) -> DatumValidation:
        """Scaling condition ``sum_j c_j n_j = d n`` in integer arithmetic."""

        weighted = sum(c * n_j for c, n_j in zip(datum.numerators, datum.dims))
        target = datum.denominator * datum.n
        return DatumValidation(ok=weighted == target, weighted_dims=weighted, target=target)

    def isotropy_matrix(self, datum: BLDatum) -> RealMat:
        """``sum_j p_j B_j^T B_j``."""

        total = np.zeros((datum.n, datum.n))
        for weight, matrix in zip(datum.weights, datum.maps):
            total += weight * (matrix.T @ matrix)
        return 0.5 * (total + total.T)

    def is_geometric(self, datum: BLDatum, tol: float = 1e-9) -> GeometricCheck:
        projection = max(
            frobenius(matrix @ matrix.T - np.eye(matrix.shape[0])) for matrix in datum.maps
        )
        isotropy = frobenius(self.isotropy_matrix(datum) - np.eye(datum.n))
        return GeometricCheck(
            geometric=projection <= tol and isotropy <= tol,
            projection_residual=projection,
            isotropy_residual=isotropy,
        )

    def g_distance(self, datum: BLDatum) -> float:
        """``tr[(sum p_j B_j^T B_j - I)^2] + sum_j tr[(B_j B_j^T - I)^2]``."""

        value = frobenius(self.isotropy_matrix(datum) - np.eye(datum.n)) ** 2
        for matrix in datum.maps:
            value += frobenius(matrix @ matrix.T - np.eye(matrix.shape[0])) ** 2
        return value

    def lieb_ratio(self, datum: BLDatum, xs: Sequence) -> GaussianCertificate:
        """``[prod_j Det(X_j)^{p_j} / Det(sum_j p_j B_j^T X_j B_j)]^{1/2}``, a lower bound on BL."""

        if len(xs) != datum.m:
            raise DimensionMismatch(f"expected {datum.m} matrices, got {len(xs)}")
        arrays = tuple(as_real_mat(x, name=f"X_{j}") for j, x in enumerate(xs))
        numerator = 0.0
        weighted = np.zeros((datum.n, datum.n))
        for j, (weight, matrix, x) in enumerate(zip(datum.weights, datum.maps, arrays)):
            if x.shape != (matrix.shape[0], matrix.shape[0]):
                raise DimensionMismatch(f"X_{j} must be {matrix.shape[0]}x{matrix.shape[0]}")
            numerator += weight * logdet(x)
            weighted += weight * (matrix.T @ x @ matrix)
        log_ratio = 0.5 * (numerator - logdet(0.5 * (weighted + weighted.T)))
        return GaussianCertificate(xs=arrays, ratio=_exp(log_ratio), log_ratio=log_ratio)

    # ------------------------------------------------------------------
    # Normalizations and BL scaling
    # ------------------------------------------------------------------
    def isotropy_normalize(self, datum: BLDatum) -> Tuple[BLDatum, RealMat]:
        """``B_j <- B_j M^{-1/2}`` with ``M = sum_j p_j B_j^T B_j``; returns ``M^{-1/2}``."""

        normalized, factor, _ = self._isotropy_step(datum)
        return normalized, factor

    def projection_normalize(self, datum: BLDatum) -> Tuple[BLDatum, Tuple[RealMat, ...]]:
        """``B_j <- (B_j B_j^T)^{-1/2} B_j``; returns the factors ``(B_j B_j^T)^{-1/2}``."""

        normalized, factors, _ = self._projection_step(datum)
        return normalized, factors

    def bl_scaling(
        self,
        datum: BLDatum,
        max_steps: Optional[int] = None,
        g_target: Optional[float] = None,
    ) -> BLScalingTrace:
        """Alternate isotropy (odd steps) and projection (even steps) normalizations.

        Runs until ``g <= g_target`` or the step budget is spent. The budget is
        the smaller of ``max_steps`` and the worst-case count of ``bl_iteration_budget``.
        """

        g_target = self.g_target if g_target is None else g_target
        cap = self.max_steps if max_steps is None else max_steps
        if cap < 1:
            raise ValueError("max_steps must be at least 1")
        bits = datum.bit_size if datum.exact is not None else 1
        budget = min(cap, bl_iteration_budget(datum.n, datum.m, bits, g_target))

        current = datum
        right = np.eye(datum.n)
        lefts: List[RealMat] = [np.eye(n_j) for n_j in datum.dims]
        history = [self.g_distance(current)]
        log_factors: List[float] = []
        step = 0
        converged = history[0] <= g_target

        while not converged and step < budget:
            step += 1
            try:
                if step % 2 == 1:
                    current, factor, log_factor = self._isotropy_step(current)
                    right = right @ factor
                else:
                    current, factors, log_factor = self._projection_step(current)
                    lefts = [f @ left for f, left in zip(factors, lefts)]
            except SingularMatrix as exc:
                self.logger.warning("Singular normalization at step %d: %s", step, exc)
                raise SingularMatrix(
                    f"normalization failed at step {step}: {exc}",
                    index=exc.index,
                    step=step,
                    witness=self._singularity_witness(datum, exc.index),
                ) from exc
            log_factors.append(log_factor)
            history.append(self.g_distance(current))
            if step % self.checkpoint_every == 0:
                self.logger.debug("step %d g %.6e", step, history[-1])
            converged = history[-1] <= g_target

        estimates: List[Tuple[int, float]] = []
        if converged:
            self.logger.info("BL scaling reached g %.3e in %d steps", history[-1], step)
            for index in range(0, step + 1):
                if index % self.checkpoint_every == 0 or index == step:
                    estimates.append((index, _exp(-sum(log_factors[index:]))))

        return BLScalingTrace(
            steps=step,
            g_history=tuple(history),
            final_datum=current if current is not datum else datum.with_maps(datum.maps),
            right_factor=right,
            left_factors=tuple(lefts),
            log_factors=tuple(log_factors),
            bl_estimates=tuple(estimates),
            converged=converged,
        )

    # ------------------------------------------------------------------
    # Constants and bounds
    # ------------------------------------------------------------------
    def reduce_to_operator(self, datum: BLDatum) -> CPOperator:
        """Operator ``R^{nd x nd} -> R^{n x n}``, ``X -> sum_k A_k^T X A_k``.

        Copy ``k`` of map ``B_j`` (``c_j`` copies each) occupies its own block
        of ``n_j`` coordinates of ``R^{nd}``; the Kraus matrix is ``B_j^T``
        placed at those columns.
        """

        check = self.validate(datum)
        if not check.ok:
            raise ScalingViolation(
                f"sum_j c_j n_j = {check.weighted_dims} differs from d n = {check.target}"
            )
        n, width = datum.n, datum.denominator * datum.n
        kraus: List[RealMat] = []
        exact: List[RationalMat] = []
        offset = 0
        for index, (count, matrix) in enumerate(zip(datum.numerators, datum.maps)):
            rows = matrix.shape[0]
            for _ in range(count):
                block = np.zeros((n, width))
                block[:, offset:offset + rows] = matrix.T
                kraus.append(block)
                if datum.exact is not None:
                    exact.append(self._placed_transpose(datum.exact[index], offset, width))
                offset += rows
        return CPOperator(np.stack(kraus), exact=exact if datum.exact is not None else None)

    def bl_constant(self, datum: BLDatum, eps: Optional[float] = None) -> BLConstantResult:
        """BL constant through the capacity of the square-embedded reduced operator.

        ``BL = (1/alpha)^{1/(2nd)}`` where ``alpha`` estimates the capacity of
        the embedding. The reverse constant is the reciprocal.
        """

        eps = self.eps if eps is None else eps
        if not 0.0 < eps < 1.0:
            raise ValueError("eps must lie strictly between 0 and 1")
        upper = self.bl_upper_bound(datum)
        check = self.validate(datum)
        if not check.ok:
            self.logger.info("scaling condition fails; BL constant is infinite")
            return BLConstantResult(
                value=math.inf,
                reverse=0.0,
                status="infinite",
                upper_bound=upper,
                eps=eps,
                diagnostics={"reason": "scaling condition", **check.to_dict()},
            )

        n, d = datum.n, datum.denominator
        embedded = self.operator_service.square_embed(self.reduce_to_operator(datum))
        log_floor = None
        if datum.exact is not None:
            # L B has integer entries and cap(T_B) = L^{-2n} cap(T_{LB})
            lcd = datum.common_denominator
            log_floor = n * d * (log_capacity_lower_bound_integer(n, d) - 2 * n * math.log(lcd))
        try:
            estimate = self.operator_service.capacity_estimate(
                embedded, eps, max_steps=self.max_steps, log_floor=log_floor
            )
        except NonConvergence as exc:
            self.logger.warning("BL constant inconclusive: %s", exc)
            return BLConstantResult(
                value=None,
                reverse=None,
                status="inconclusive",
                upper_bound=upper,
                eps=eps,
                diagnostics={"reason": str(exc), "steps": exc.steps},
            )

        if estimate.is_zero:
            return BLConstantResult(
                value=math.inf,
                reverse=0.0,
                status="infinite",
                upper_bound=upper,
                capacity=0.0,
                eps=eps,
                trace=estimate.trace,
                diagnostics=dict(estimate.diagnostics),
            )
        log_value = -math.log(estimate.value) / (2 * n * d)
        return BLConstantResult(
            value=_exp(log_value),
            reverse=_exp(-log_value),
            status="finite",
            upper_bound=upper,
            capacity=estimate.value,
            eps=eps,
            trace=estimate.trace,
            diagnostics={"converged": estimate.converged, **estimate.diagnostics},
        )

    def bl_upper_bound(self, datum: BLDatum) -> float:
        """Smallest applicable closed-form upper bound on the BL constant.

        Integer maps: ``min(exp(4n log(n^2 d)), exp(12nm log(mn)))``. Rational
        maps with least common denominator ``L``: ``exp(4n log(n^2 d) + n b)``
        with ``b = ceil(log2 L)``, or ``L^n exp(12nm log(mn))``. Float-only
        data have no bound (``inf``).
        """

        if datum.exact is None:
            return math.inf
        n, m = datum.n, datum.m
        _, d = datum.reduced_exponents()
        if datum.is_integer:
            return _exp(min(log_bl_upper_bound_integer(n, d), log_bl_upper_bound_dimension_free(n, m)))
        lcd = datum.common_denominator
        bits = (lcd - 1).bit_length()
        return _exp(
            min(
                log_bl_upper_bound_rational(n, d, bits),
                n * math.log(lcd) + log_bl_upper_bound_dimension_free(n, m),
            )
        )

    def basis_change(self, datum: BLDatum, c, cs: Sequence) -> Tuple[BLDatum, float]:
        """Maps ``C_j^{-1} B_j C`` and the ratio ``prod_j |det C_j|^{p_j} / |det C|``."""

        c = as_real_mat(c, name="C")
        if c.shape != (datum.n, datum.n) or len(cs) != datum.m:
            raise DimensionMismatch("basis change factors do not match the datum")
        log_ratio = -log_abs_det(c)
        maps = []
        for j, (weight, matrix, factor) in enumerate(zip(datum.weights, datum.maps, cs)):
            factor = as_real_mat(np.atleast_2d(factor), name=f"C_{j}")
            if factor.shape != (matrix.shape[0], matrix.shape[0]):
                raise DimensionMismatch(f"C_{j} must be {matrix.shape[0]}x{matrix.shape[0]}")
            log_ratio += weight * log_abs_det(factor)
            maps.append(np.linalg.solve(factor, matrix) @ c)
        return datum.with_maps(maps), _exp(log_ratio)

    # ------------------------------------------------------------------
    # Feasibility
    # ------------------------------------------------------------------
    def verify_witness(self, datum: BLDatum, basis: RationalMat) -> WitnessCheck:
        """Exact check of ``d dim V > sum_j c_j dim(B_j V)``."""

        if datum.exact is None:
            raise ValueError("witness verification needs a datum with exact maps")
        if basis.rows != datum.n:
            raise DimensionMismatch(f"witness vectors must have length {datum.n}")
        lhs = exact_rank(basis)
        if lhs == 0:
            raise ValueError("witness subspace must be nonzero")
        image_dims = tuple(exact_rank(matrix @ basis) for matrix in datum.exact)
        weighted = sum(c * dim for c, dim in zip(datum.numerators, image_dims))
        return WitnessCheck(
            violated=datum.denominator * lhs > weighted,
            lhs_dim=lhs,
            rhs_value=Fraction(weighted, datum.denominator),
            image_dims=image_dims,
        )

    def feasibility(self, datum: BLDatum, budget: Optional[int] = None) -> FeasibilityReport:
        """Decide ``BL(B, p) < infinity``; infeasible verdicts carry a verified witness."""

        if datum.exact is None:
            raise ValueError("feasibility needs a datum with exact maps")
        budget = self.feasibility_steps if budget is None else budget

        check = self.validate(datum)
        if not check.ok:
            return FeasibilityReport(
                verdict="infeasible",
                diagnostics=(
                    f"scaling condition fails: sum c_j n_j = {check.weighted_dims}, "
                    f"d n = {check.target}"
                ),
                details=check.to_dict(),
            )

        for candidate in structural_candidates(datum):
            report = self._witness_report(datum, candidate, "structural")
            if report is not None:
                return report

        verdict = self.operator_service.is_rank_nondecreasing(
            self.reduce_to_operator(datum).dual(), budget=budget
        )
        if verdict.verdict == "yes":
            return FeasibilityReport(
                verdict="feasible",
                diagnostics="operator scaling reached the feasibility threshold",
                details=dict(verdict.diagnostics),
            )

        for source, candidate in self._search_candidates(datum, budget):
            report = self._witness_report(datum, candidate, source)
            if report is not None:
                return report

        self.logger.info("feasibility inconclusive after %s", verdict.diagnostics.get("reason"))
        return FeasibilityReport(
            verdict="inconclusive",
            diagnostics=f"rank test answered {verdict.verdict}; no witness verified",
            details={"rank_test": verdict.verdict, **verdict.diagnostics},
        )

    def normalized_lower_bound_check(
        self, datum: BLDatum, tol: float = 1e-9, eps: Optional[float] = None
    ) -> NormalizationCheck:
        """For trace-normalized data the BL constant is at least 1, with equality iff geometric."""

        eps = self.eps if eps is None else eps
        trace_sum = float(
            sum(weight * frobenius(matrix) ** 2 for weight, matrix in zip(datum.weights, datum.maps))
        )
        if abs(trace_sum - datum.n) > tol * datum.n:
            raise NormalizationViolated(
                f"sum_j p_j tr[B_j^T B_j] = {trace_sum:.12g}, expected {datum.n}"
            )
        result = self.bl_constant(datum, eps)
        geometric = self.is_geometric(datum, 1e-6).geometric
        if result.value is None:
            return NormalizationCheck(None, None, False, geometric, trace_sum)
        return NormalizationCheck(
            value=result.value,
            gap=result.value - 1.0,
            lower_bound_holds=result.value >= 1.0 - 3.0 * max(tol, eps),
            geometric=geometric,
            trace_sum=trace_sum,
        )

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------
    def _isotropy_step(self, datum: BLDatum) -> Tuple[BLDatum, RealMat, float]:
        gram = self.isotropy_matrix(datum)
        try:
            factor = psd_sqrt_inv(gram)
        except SingularMatrix as exc:
            raise SingularMatrix(
                f"isotropy matrix is singular: {exc}", witness=self._common_kernel(datum)
            ) from exc
        normalized = datum.with_maps([matrix @ factor for matrix in datum.maps])
        return normalized, factor, 0.5 * logdet(gram)

    def _projection_step(self, datum: BLDatum) -> Tuple[BLDatum, Tuple[RealMat, ...], float]:
        factors = []
        log_factor = 0.0
        for j, (weight, matrix) in enumerate(zip(datum.weights, datum.maps)):
            gram = matrix @ matrix.T
            try:
                factors.append(psd_sqrt_inv(gram))
            except SingularMatrix as exc:
                raise SingularMatrix(
                    f"map {j} is not surjective: {exc}",
                    index=j,
                    witness=self._singularity_witness(datum, j),
                ) from exc
            log_factor += 0.5 * weight * logdet(gram)
        normalized = datum.with_maps([f @ matrix for f, matrix in zip(factors, datum.maps)])
        return normalized, tuple(factors), log_factor

    @staticmethod
    def _common_kernel(datum: BLDatum) -> Optional[RationalMat]:
        if datum.exact is None:
            return None
        kernel = exact_kernel_basis(RationalMat.vstack(datum.exact))
        return exact_column_basis(kernel) if kernel.cols else None

    def _singularity_witness(self, datum: BLDatum, index: Optional[int]) -> Optional[RationalMat]:
        """Exact witness for a singular normalization, from the input's exact maps."""

        if datum.exact is None:
            return None
        if index is None:
            return self._common_kernel(datum)
        matrix = datum.exact[index]
        if exact_rank(matrix) < matrix.rows:
            return RationalMat.identity(datum.n)
        return None

    @staticmethod
    def _placed_transpose(matrix: RationalMat, offset: int, width: int) -> RationalMat:
        transposed = matrix.T
        zero = Fraction(0)
        rows = [
            [zero] * offset + list(row) + [zero] * (width - offset - matrix.rows)
            for row in transposed.entries
        ]
        return RationalMat.from_rows(rows, cols=width)

    def _witness_report(
        self, datum: BLDatum, candidate: RationalMat, source: str
    ) -> Optional[FeasibilityReport]:
        check = self.verify_witness(datum, candidate)
        if not check.violated:
            return None
        self.logger.info("verified %s witness of dimension %d", source, check.lhs_dim)
        return FeasibilityReport(
            verdict="infeasible",
            witness=candidate,
            lhs_dim=check.lhs_dim,
            rhs_value=check.rhs_value,
            diagnostics=f"{source} witness: dim V = {check.lhs_dim} > sum_j p_j dim(B_j V) = {check.rhs_value}",
            details={"source": source, "image_dims": list(check.image_dims)},
        )

    def _search_candidates(self, datum: BLDatum, budget: int) -> Iterator[Tuple[str, RationalMat]]:
        try:
            trace = self.bl_scaling(datum, max_steps=budget)
        except SingularMatrix as exc:
            if exc.witness is not None:
                yield "singular normalization", exc.witness
        else:
            for candidate in spectral_candidates(trace, self.witness_max_denominator):
                yield "spectral", candidate
        for candidate in lattice_candidates(datum, self.lattice_limit):
            yield "lattice", candidate


brascamp_lieb_service = BrascampLiebService()


__all__ = [
    "BrascampLiebService",
    "amgm_det_bound",
    "bl_iteration_budget",
    "brascamp_lieb_service",
    "log_bl_upper_bound_dimension_free",
    "log_bl_upper_bound_integer",
    "log_bl_upper_bound_rational",
]
