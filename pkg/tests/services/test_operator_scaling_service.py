import math

import mpmath
import numpy as np
import pytest

from src.errors import DegenerateOperator, DimensionMismatch, NonFinite, SingularMatrix
from src.models.matrices import RationalMat, to_precise, to_real
from src.models.operator import CPOperator, OperatorScaling, PreciseOperator, SquareEmbedding
from src.services.operator_scaling_service import (
    OperatorScalingService,
    capacity_lower_bound_integer,
    iteration_budget,
)

IDENTITY = CPOperator([np.eye(2)])
PINCHING = CPOperator([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])])
RANK_DECREASING = CPOperator.from_exact(
    [RationalMat.from_rows([[1, 0], [0, 0]]), RationalMat.from_rows([[0, 1], [0, 0]])]
)
DOUBLED = CPOperator([2.0 * np.eye(2)])


def make_service(**overrides):
    return OperatorScalingService(**overrides)


def random_operator(rng, n1, n2, m=3):
    return CPOperator(rng.standard_normal((m, n2, n1)))


def test_operator_rejects_degenerate_input():
    with pytest.raises(DegenerateOperator):
        CPOperator(np.zeros((2, 2, 2)))
    with pytest.raises(DegenerateOperator):
        CPOperator.from_exact([])
    with pytest.raises(NonFinite):
        CPOperator([[[np.inf, 0.0], [0.0, 1.0]]])


def test_apply_examples():
    service = make_service()
    x = np.array([[3.0, 1.0], [1.0, 5.0]])
    assert np.allclose(service.apply(IDENTITY, x), x)
    assert np.allclose(service.apply(PINCHING, x), np.diag([3.0, 5.0]))
    assert np.allclose(service.apply(RANK_DECREASING, np.eye(2)), [[2.0, 0.0], [0.0, 0.0]])
    with pytest.raises(DimensionMismatch):
        service.apply(IDENTITY, np.eye(3))


def test_dual_apply_examples():
    service = make_service()
    y = np.array([[3.0, 1.0], [1.0, 5.0]])
    assert np.allclose(service.dual_apply(IDENTITY, y), y)
    assert np.allclose(service.dual_apply(PINCHING, y), np.diag([3.0, 5.0]))
    assert np.allclose(service.dual_apply(RANK_DECREASING, np.eye(2)), np.eye(2))


def test_trace_duality_and_positivity():
    rng = np.random.default_rng(1)
    service = make_service()
    for n1 in range(1, 5):
        for n2 in range(1, 5):
            operator = random_operator(rng, n1, n2, m=int(rng.integers(1, 6)))
            a, b = rng.standard_normal((n1, n1)), rng.standard_normal((n2, n2))
            x, y = a + a.T, b + b.T
            lhs = np.trace(y @ service.apply(operator, x))
            rhs = np.trace(service.dual_apply(operator, y) @ x)
            assert abs(lhs - rhs) < 1e-9 * max(1.0, abs(lhs))

            psd = a @ a.T
            assert np.linalg.eigvalsh(service.apply(operator, psd))[0] >= -1e-10 * np.linalg.norm(psd)


def test_threaded_apply_matches_sequential():
    rng = np.random.default_rng(2)
    operator = random_operator(rng, 3, 4, m=7)
    x = np.eye(3)
    sequential = make_service().apply(operator, x)
    threaded = make_service(threads=3).apply(operator, x)
    assert np.allclose(sequential, threaded, rtol=1e-12, atol=1e-12)


def test_ds_examples():
    service = make_service()
    assert service.ds(IDENTITY) == pytest.approx(0.0)
    assert service.ds(DOUBLED) == pytest.approx(36.0)
    assert service.ds(PINCHING) == pytest.approx(0.0)


def test_right_normalize_examples():
    service = make_service()
    scaled, factor = service.right_normalize(DOUBLED)
    assert np.allclose(scaled.kraus[0], np.eye(2))
    assert np.allclose(factor, 0.5 * np.eye(2))

    scaled, factor = service.right_normalize(RANK_DECREASING)
    assert np.allclose(factor, np.eye(2))
    assert np.allclose(scaled.kraus, RANK_DECREASING.kraus)


def test_left_normalize_examples():
    service = make_service()
    scaled, _ = service.left_normalize(DOUBLED)
    assert np.allclose(scaled.kraus[0], np.eye(2))

    scaled, factor = service.left_normalize(PINCHING)
    assert np.allclose(factor, np.eye(2))

    with pytest.raises(SingularMatrix):
        service.left_normalize(RANK_DECREASING)


def test_normalizations_zero_their_ds_term():
    rng = np.random.default_rng(4)
    service = make_service()
    operator = random_operator(rng, 2, 3)
    right, _ = service.right_normalize(operator)
    assert service.ds_parts(right)[1] < 1e-12
    left, _ = service.left_normalize(operator)
    assert service.ds_parts(left)[0] < 1e-12


def test_algorithm_g_doubly_stochastic_input_stops_immediately():
    trace = make_service().algorithm_g(IDENTITY, max_steps=10, ds_target=1e-9)
    assert trace.steps == 0
    assert trace.ds_history == (0.0,)
    assert trace.converged


def test_algorithm_g_doubled_identity():
    trace = make_service().algorithm_g(DOUBLED, max_steps=10, ds_target=1e-9)
    assert trace.converged
    assert trace.steps <= 2
    assert np.allclose(trace.final_operator.kraus[0], np.eye(2))
    assert len(trace.ds_history) == trace.steps + 1


def test_algorithm_g_accumulated_scaling_reproduces_final_operator():
    rng = np.random.default_rng(6)
    operator = random_operator(rng, 3, 3)
    trace = make_service().algorithm_g(operator, max_steps=200, ds_target=1e-12)
    rebuilt = trace.accumulated.apply_to(operator)
    assert np.allclose(rebuilt.kraus, trace.final_operator.kraus, rtol=1e-7, atol=1e-9)


def test_algorithm_g_reports_singular_step():
    with pytest.raises(SingularMatrix) as excinfo:
        make_service().algorithm_g(RANK_DECREASING, max_steps=10, ds_target=1e-9)
    assert excinfo.value.step == 2


def test_algorithm_g_is_deterministic():
    rng = np.random.default_rng(8)
    operator = random_operator(rng, 3, 2)
    first = make_service().algorithm_g(operator, max_steps=50, ds_target=1e-14)
    second = make_service().algorithm_g(operator, max_steps=50, ds_target=1e-14)
    assert first.ds_history == second.ds_history


def test_capacity_objective_examples():
    service = make_service()
    assert service.capacity_objective(IDENTITY, np.diag([2.0, 3.0])).value == pytest.approx(1.0)
    assert service.capacity_objective(PINCHING, [[2.0, 1.0], [1.0, 2.0]]).value == pytest.approx(4.0 / 3.0)
    doubled = service.capacity_objective(DOUBLED, np.eye(2))
    assert doubled.value == pytest.approx(16.0)
    assert doubled.log_value == pytest.approx(math.log(16.0))
    assert not doubled.singular


def test_capacity_objective_flags_singular_image():
    objective = make_service().capacity_objective(RANK_DECREASING, np.eye(2))
    assert objective.singular
    assert objective.value == 0.0
    assert objective.log_value == -math.inf
    assert objective.to_dict() == {"value": 0.0, "log_value": -math.inf, "singular": True}


def test_capacity_estimate_examples():
    service = make_service()
    assert service.capacity_estimate(IDENTITY, 0.01).value == pytest.approx(1.0, rel=0.01)
    assert service.capacity_estimate(PINCHING, 0.01).value == pytest.approx(1.0, rel=0.01)

    estimate = service.capacity_estimate(RANK_DECREASING, 0.01)
    assert estimate.is_zero
    assert estimate.diagnostics["reason"] == "singular normalization"


def test_capacity_estimate_rejects_bad_eps():
    with pytest.raises(ValueError):
        make_service().capacity_estimate(IDENTITY, 1.5)


def test_capacity_multiplicativity_under_scaling():
    rng = np.random.default_rng(9)
    service = make_service()
    operator = random_operator(rng, 2, 2)
    left = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
    right = rng.standard_normal((2, 2)) + 2.0 * np.eye(2)
    base = service.capacity_estimate(operator, 0.01).value
    scaled = service.capacity_estimate(operator.scaled(left, right), 0.01).value
    expected = np.linalg.det(left) ** 2 * np.linalg.det(right) ** 2 * base
    assert scaled == pytest.approx(expected, rel=0.03)


def test_square_embed_one_dimensional():
    service = make_service()
    embedded = service.square_embed(CPOperator([[[2.0]]]))
    assert isinstance(embedded, SquareEmbedding)
    assert embedded.n1 == embedded.n2 == 1
    assert service.capacity_estimate(embedded, 0.01).value == pytest.approx(4.0, rel=0.01)


def test_square_embed_factored_maps_match_kraus_form():
    rng = np.random.default_rng(10)
    service = make_service()
    operator = random_operator(rng, 2, 3)
    embedded = service.square_embed(operator)
    explicit = CPOperator(embedded.kraus)
    a = rng.standard_normal((6, 6))
    x = a @ a.T
    assert embedded.n1 == embedded.n2 == 6
    assert np.allclose(embedded.apply(x), explicit.apply(x))
    assert np.allclose(embedded.dual_apply(x), explicit.dual_apply(x))


def test_square_embed_identity_has_capacity_one():
    service = make_service()
    embedded = service.square_embed(IDENTITY)
    assert embedded.n1 == 4
    assert service.capacity_estimate(embedded, 0.01).value == pytest.approx(1.0, rel=0.01)


def test_square_embed_capacity_is_power_of_base_capacity():
    rng = np.random.default_rng(12)
    service = make_service()
    operator = random_operator(rng, 2, 3)
    base = service.capacity_estimate(operator, 0.01).value
    embedded = service.capacity_estimate(service.square_embed(operator), 0.01).value
    assert embedded ** (1.0 / operator.n1) == pytest.approx(base, rel=0.03)


def test_is_rank_nondecreasing_examples():
    service = make_service()
    assert service.is_rank_nondecreasing(IDENTITY, budget=100).verdict == "yes"
    assert service.is_rank_nondecreasing(PINCHING, budget=100).verdict == "yes"

    verdict = service.is_rank_nondecreasing(RANK_DECREASING, budget=100)
    assert verdict.verdict == "no"
    assert verdict.witness is not None
    assert service.fractional_rank_check(RANK_DECREASING, verdict.witness)


def test_is_rank_nondecreasing_without_exact_mirror():
    operator = CPOperator(RANK_DECREASING.kraus)
    assert make_service().is_rank_nondecreasing(operator, budget=100).verdict == "no"


def test_exact_rank_witness_common_kernel():
    operator = CPOperator.from_exact(
        [RationalMat.from_rows([[1, 0], [0, 0]]), RationalMat.from_rows([[0, 0], [1, 0]])]
    )
    witness = make_service().exact_rank_witness(operator)
    assert witness == RationalMat.from_rows([[0, 0], [0, 1]])


def test_capacity_duality_gap():
    operator = CPOperator([[[1.0], [0.0]], [[0.0], [1.0]]])
    gap = make_service().capacity_duality_gap(operator, 0.01)
    assert gap["lhs"] == pytest.approx(2.0, rel=0.01)
    assert gap["relative_gap"] < 0.03


def test_capacity_lower_bound_integer():
    assert capacity_lower_bound_integer(1, 1) == 1.0
    assert capacity_lower_bound_integer(3, 2) == pytest.approx(math.exp(-6.0 * math.log(18.0)))
    assert capacity_lower_bound_integer(2, 1) == pytest.approx(math.exp(-4.0 * math.log(4.0)))
    with pytest.raises(ValueError):
        capacity_lower_bound_integer(0, 1)


def test_iteration_budget():
    assert iteration_budget(1, 1, 1.0) == 4
    assert iteration_budget(2, 2, 0.5) == math.ceil(128 * (1 + 40 * math.log(4)))
    assert iteration_budget(3, 1, 0.1) == math.ceil(4 * 27 / 0.1**2 * (1 + 90 * math.log(3)))


def test_operator_scaling_rejects_singular_factor():
    with pytest.raises(SingularMatrix):
        OperatorScaling(left=np.zeros((2, 2)), right=np.eye(2))


def loomis_whitney_operator():
    """Reduced operator of the Loomis-Whitney datum; doubly stochastic with capacity 1."""

    kraus = np.zeros((3, 3, 6))
    for k, kept in enumerate([(1, 2), (0, 2), (0, 1)]):
        for column, axis in enumerate(kept):
            kraus[k, axis, 2 * k + column] = 1.0
    return CPOperator(kraus)


def test_precise_operator_maps_match_float_maps():
    x = np.array([[3.0, 1.0], [1.0, 5.0]])
    with mpmath.workprec(113):
        lifted = PreciseOperator.lift(RANK_DECREASING)
        assert (lifted.n1, lifted.n2, lifted.m) == (2, 2, 2)
        assert np.allclose(to_real(lifted.apply(to_precise(x))), RANK_DECREASING.apply(x))
        assert np.allclose(to_real(lifted.dual_apply(to_precise(x))), RANK_DECREASING.dual_apply(x))

        embedded = SquareEmbedding(PINCHING)
        precise_embedded = PreciseOperator.lift(embedded)
        assert precise_embedded.precise
        big = np.diag([1.0, 2.0, 3.0, 4.0]) + 0.5
        assert np.allclose(to_real(precise_embedded.apply(to_precise(big))), embedded.apply(big))
        assert np.allclose(to_real(precise_embedded.dual_apply(to_precise(big))), embedded.dual_apply(big))
        with pytest.raises(DimensionMismatch):
            lifted.apply(mpmath.eye(3))


def test_high_precision_capacity_matches_float_on_loomis_whitney():
    left = np.diag([1.0, 2.0, 3.0])
    right = np.diag([1.0, 1.0, 1.0, 1.0, 1.0, 2.0])
    operator = loomis_whitney_operator().scaled(left, right)
    # det(L)^2 |det(R)|^{2 n2/n1} cap(T) with cap(T) = 1
    expected = 36.0 * 2.0

    float_estimate = make_service().capacity_estimate(operator, 0.01)
    precise_estimate = make_service(precision=128).capacity_estimate(operator, 0.01)

    assert precise_estimate.converged
    assert precise_estimate.value == pytest.approx(expected, rel=0.01)
    assert precise_estimate.value == pytest.approx(float_estimate.value, rel=1e-6)
    trace = precise_estimate.trace
    assert trace.steps > 0
    assert isinstance(trace.final_operator, CPOperator)
    assert isinstance(trace.accumulated.left, np.ndarray)
    assert make_service().ds(trace.final_operator) <= 1e-8


def test_high_precision_rank_test_on_square_embedding():
    service = make_service(precision=96)
    assert service.is_rank_nondecreasing(PINCHING).verdict == "yes"
    assert service.is_rank_nondecreasing(CPOperator([np.diag([1.0, 2.0])])).verdict == "yes"
