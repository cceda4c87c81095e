"""End-to-end property batteries on small random and hand-built instances."""

import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from src.models.datum import BLDatum
from src.models.operator import CPOperator
from src.models.polytope import VectorFamily
from src.services.brascamp_lieb_service import (
    BrascampLiebService,
    amgm_det_bound,
    bl_iteration_budget,
)
from src.services.operator_scaling_service import OperatorScalingService
from src.services.polytope_service import PolytopeService

pytestmark = pytest.mark.slow

EPS = 0.01

LOOMIS_WHITNEY_ROWS = [
    [[0, 1, 0], [0, 0, 1]],
    [[1, 0, 0], [0, 0, 1]],
    [[1, 0, 0], [0, 1, 0]],
]


@pytest.fixture(scope="module")
def bl():
    return BrascampLiebService()


@pytest.fixture(scope="module")
def operators():
    return OperatorScalingService()


def random_integer_data(seed, count):
    """Feasible-looking integer data: three rank-one maps on R^2 or three 2x3 maps on R^3."""

    rng = np.random.default_rng(seed)
    data = []
    while len(data) < count:
        if len(data) % 2 == 0:
            maps = rng.integers(-2, 3, size=(3, 1, 2)).tolist()
            datum = BLDatum.from_rows(2, maps, ["2/3", "2/3", "2/3"])
        else:
            maps = rng.integers(-2, 3, size=(3, 2, 3)).tolist()
            datum = BLDatum.from_rows(3, maps, ["1/2", "1/2", "1/2"])
        if all(np.any(matrix) for matrix in datum.maps):
            data.append(datum)
    return data


def random_geometric_data(bl, seed, count):
    rng = np.random.default_rng(seed)
    shapes = [(2, 3, 1), (2, 4, 1), (3, 4, 1), (3, 3, 2), (4, 5, 1)]
    data = []
    for index in range(count):
        n, m, rows = shapes[index % len(shapes)]
        numerators, denominator = [n] * m, m * rows
        maps = tuple(rng.standard_normal((rows, n)) for _ in range(m))
        start = BLDatum(n=n, maps=maps, numerators=tuple(numerators), denominator=denominator)
        trace = bl.bl_scaling(start, max_steps=5000, g_target=1e-14)
        assert trace.converged
        data.append(trace.final_datum)
    return data


def test_loomis_whitney_constant_is_one(bl):
    datum = BLDatum.from_rows(3, LOOMIS_WHITNEY_ROWS, ["1/2"] * 3)
    result = bl.bl_constant(datum, EPS)
    assert result.value == pytest.approx(1.0, rel=0.01)


def test_geometric_data_have_constant_one(bl):
    for datum in random_geometric_data(bl, seed=5, count=20):
        assert bl.is_geometric(datum, 1e-5).geometric
        assert bl.bl_constant(datum, EPS).value == pytest.approx(1.0, rel=0.02)


def test_capacity_constant_bridge_and_bounds(bl):
    checked = 0
    for datum in random_integer_data(seed=11, count=30):
        if bl.feasibility(datum).verdict != "feasible":
            continue
        result = bl.bl_constant(datum, EPS)
        assert result.status == "finite"
        capacity = bl.operator_service.capacity_estimate(bl.reduce_to_operator(datum), EPS).value
        assert capacity * result.value**2 == pytest.approx(1.0, rel=0.05)
        assert result.value <= result.upper_bound * (1 + EPS)
        checked += 1
    assert checked >= 10


def test_square_embedding_and_duality_laws(operators):
    rng = np.random.default_rng(17)
    for n1, n2 in [(1, 2), (2, 1), (1, 3), (3, 1), (2, 3), (3, 2), (2, 4), (4, 2), (2, 2), (3, 3)]:
        operator = CPOperator(rng.standard_normal((3, n2, n1)))
        base = operators.capacity_estimate(operator, EPS).value
        embedded = operators.capacity_estimate(operators.square_embed(operator), EPS).value
        assert embedded ** (1.0 / n1) == pytest.approx(base, rel=0.05)
        assert operators.capacity_duality_gap(operator, EPS)["relative_gap"] <= 0.05


INFEASIBLE = [
    (2, [[[1, 0]], [[1, 0]]], [1, 1]),
    (2, [[[1, 0]], [[2, 0]], [[0, 1]]], [1, "1/2", "1/2"]),
    (2, [[[1, 0]], [[0, 1]], [[1, 1]]], ["3/2", "1/4", "1/4"]),
    (2, [[[1, 0], [2, 0]], [[0, 1]]], ["1/2", 1]),
    (3, [[[1, 0, 0]], [[1, 0, 0]], [[0, 1, 0]], [[0, 0, 1]]], [1, 1, "1/2", "1/2"]),
    (3, [[[1, 0, 0], [0, 1, 0]], [[1, 1, 0]], [[0, 0, 1]]], [1, "1/2", "1/2"]),
    (3, [[[1, 1, 0]], [[1, 1, 0]], [[0, 0, 1]]], [1, 1, 1]),
    (2, [[[1, 1]], [[2, 2]]], [1, 1]),
    (3, [[[1, 0, 0], [0, 1, 0]], [[0, 1, 0], [0, 0, 1]]], [1, "1/2"]),
    (1, [[[1]], [[0]]], ["1/2", "1/2"]),
]


@pytest.mark.parametrize("n, maps, p", INFEASIBLE)
def test_separation_soundness(bl, n, maps, p):
    datum = BLDatum.from_rows(n, maps, p)
    report = bl.feasibility(datum)
    assert report.verdict == "infeasible"
    if report.witness is not None:
        assert bl.verify_witness(datum, report.witness).violated


def grid(m, n, denominator):
    for ks in product(range(denominator + 1), repeat=m):
        if sum(ks) == n * denominator:
            yield [Fraction(k, denominator) for k in ks]


@pytest.mark.parametrize(
    "dim, vectors, denominator",
    [
        (2, [[1, 0], [0, 1], [1, 1]], 6),
        (2, [[1, 0], [1, 0], [0, 1]], 6),
        (2, [[1, 0], [0, 1], [1, 1], [1, -1]], 4),
        (3, [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]], 3),
        (3, [[1, 0, 0], [0, 1, 0], [1, 1, 0], [0, 0, 1]], 2),
    ],
)
def test_rank1_oracle_agreement(dim, vectors, denominator):
    service = PolytopeService()
    family = VectorFamily.from_lists(dim, vectors)
    verdicts = []
    for p in grid(family.m, dim, denominator):
        membership = service.rank1_membership(family, p)
        verdicts.append(membership.verdict)
        if membership.verdict != "inconclusive":
            assert membership.verdict == service.rank1_hull_membership(family, p).verdict, p
    assert verdicts.count("inconclusive") < 0.05 * len(verdicts)


@pytest.mark.parametrize(
    "dim, v, w, denominator",
    [
        (2, [[1, 0], [0, 1], [1, 1]], [[1, 0], [1, 0], [0, 1]], 6),
        (2, [[1, 0], [0, 1], [1, 1]], [[1, 0], [0, 1], [1, -1]], 6),
        (2, [[1, 0], [0, 1], [1, 1], [1, 2]], [[1, 0], [1, 0], [0, 1], [0, 1]], 4),
        (2, [[1, 0], [1, 0], [0, 1], [1, 1]], [[0, 1], [1, 0], [1, 1], [1, 0]], 4),
        (
            3,
            [[1, 0, 0], [0, 1, 0], [0, 0, 1], [1, 1, 1]],
            [[1, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]],
            3,
        ),
    ],
)
def test_matroid_oracle_agreement(dim, v, w, denominator):
    service = PolytopeService()
    v_family = VectorFamily.from_lists(dim, v)
    w_family = VectorFamily.from_lists(dim, w)
    verdicts = []
    for p in grid(v_family.m, dim, denominator):
        membership = service.matroid_membership(v_family, w_family, p)
        verdicts.append(membership.verdict)
        if membership.verdict != "inconclusive":
            expected = service.matroid_hull_membership(v_family, w_family, p).verdict
            assert membership.verdict == expected, p
    assert verdicts.count("inconclusive") < 0.05 * len(verdicts)


def feasible_battery():
    """Loomis-Whitney plus integer rank-one families at exponents inside their basis polytope."""

    polytopes = PolytopeService()
    battery = [BLDatum.from_rows(3, LOOMIS_WHITNEY_ROWS, ["1/2"] * 3)]
    rng = np.random.default_rng(41)
    for attempt in range(200):
        dim = 2 + attempt % 2
        m = dim + 1 + int(rng.integers(0, 2))
        vectors = rng.integers(-2, 3, size=(m, dim))
        if not all(np.any(vector) for vector in vectors):
            continue
        family = VectorFamily.from_lists(dim, vectors.tolist())
        p = [Fraction(dim, m)] * m
        if polytopes.rank1_hull_membership(family, p).verdict == "inside":
            battery.append(polytopes.rank1_datum(family, p))
        if len(battery) >= 16:
            break
    return battery


def test_no_false_infeasible_on_feasible_battery(bl):
    battery = feasible_battery()
    assert len(battery) >= 10
    for datum in battery:
        assert bl.feasibility(datum).verdict != "infeasible"


def test_normalized_data_constant_at_least_one(bl):
    rng = np.random.default_rng(23)
    data = []
    for attempt in range(200):
        maps = tuple(rng.standard_normal((1, 2)) for _ in range(3))
        datum = BLDatum(n=2, maps=maps, numerators=(2, 2, 2), denominator=3)
        normalize = bl.isotropy_normalize if attempt % 2 == 0 else bl.projection_normalize
        normalized, _ = normalize(datum)
        xs = [np.linalg.inv(matrix @ matrix.T) for matrix in normalized.maps]
        # ratio >= 1.05 certifies BL >= 1.05
        if bl.lieb_ratio(normalized, xs).ratio >= 1.05:
            data.append(normalized)
        if len(data) >= 7:
            break
    assert len(data) == 7
    data.extend(random_geometric_data(bl, seed=29, count=3))

    for datum in data:
        check = bl.normalized_lower_bound_check(datum, tol=1e-6)
        assert check.value >= 0.98
        assert (abs(check.value - 1.0) <= 0.02) == check.geometric


def test_monotone_descent_from_normalized_start(bl):
    rng = np.random.default_rng(31)
    for _ in range(5):
        maps = tuple(rng.standard_normal((1, 2)) for _ in range(3))
        start, _ = bl.projection_normalize(
            BLDatum(n=2, maps=maps, numerators=(2, 2, 2), denominator=3)
        )
        bound = amgm_det_bound(bl.isotropy_matrix(start))
        assert bound.holds
        trace = bl.bl_scaling(start, max_steps=5000, g_target=1e-6)
        assert trace.converged
        assert trace.steps < bl_iteration_budget(2, 3, 1, 1e-6)
        # the first isotropy step shrinks the constant by Det^{1/2}
        assert trace.log_factors[0] == pytest.approx(0.5 * math.log(bound.determinant), abs=1e-9)
        if bound.eps <= 1.0:
            assert trace.log_factors[0] <= -bound.eps / 12.0 + 1e-12
        estimates = [value for _, value in trace.bl_estimates]
        for before, after in zip(estimates, estimates[1:]):
            assert after <= before * (1 + 2 * EPS)


def test_constant_is_stable_under_small_perturbations(bl):
    datum = BLDatum.from_rows(3, LOOMIS_WHITNEY_ROWS, ["1/2"] * 3)
    rng = np.random.default_rng(37)
    perturbed = datum.with_maps(
        [matrix + 1e-8 * rng.uniform(-1.0, 1.0, matrix.shape) for matrix in datum.maps]
    )
    before = bl.bl_constant(datum, EPS).value
    after = bl.bl_constant(perturbed, EPS).value
    assert abs(after - before) <= 1e-3 * before
