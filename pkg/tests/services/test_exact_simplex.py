from fractions import Fraction

import pytest

from src.services.exact_simplex import SimplexTableau, find_nonnegative_solution

F = Fraction


def test_unique_solution():
    solution = find_nonnegative_solution([[F(1), F(1)], [F(1), F(-1)]], [F(1), F(0)])
    assert solution == [F(1, 2), F(1, 2)]


def test_negative_right_hand_side_is_infeasible():
    assert find_nonnegative_solution([[F(1), F(1)]], [F(-1)]) is None


def test_negative_right_hand_side_with_negative_row():
    solution = find_nonnegative_solution([[F(-1), F(0)]], [F(-3)])
    assert solution == [F(3), F(0)]


def test_redundant_rows_keep_artificial_at_zero():
    rows = [[F(1), F(1)], [F(2), F(2)]]
    solution = find_nonnegative_solution(rows, [F(1), F(2)])
    assert solution is not None
    assert solution[0] + solution[1] == 1
    assert all(value >= 0 for value in solution)


def test_inconsistent_system_has_no_solution():
    assert find_nonnegative_solution([[F(1), F(1)], [F(1), F(1)]], [F(1), F(2)]) is None


def test_convex_combination_of_three_vertices():
    # columns (1,1,0), (1,0,1), (0,1,1) and the convexity row
    rows = [
        [F(1), F(1), F(0)],
        [F(1), F(0), F(1)],
        [F(0), F(1), F(1)],
        [F(1), F(1), F(1)],
    ]
    solution = find_nonnegative_solution(rows, [F(2, 3), F(2, 3), F(2, 3), F(1)])
    assert solution == [F(1, 3), F(1, 3), F(1, 3)]


def test_tableau_counts_pivots_and_rejects_ragged_rows():
    tableau = SimplexTableau([[F(1), F(1)], [F(1), F(-1)]], [F(1), F(0)])
    assert tableau.solve() == "optimal"
    assert tableau.objective == 0
    assert tableau.pivots >= 2

    with pytest.raises(ValueError):
        SimplexTableau([[F(1), F(1)], [F(1)]], [F(1), F(0)])
    with pytest.raises(ValueError):
        SimplexTableau([], [])
