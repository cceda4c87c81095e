"""Phase-one simplex over the rationals with Bland's rule."""

from __future__ import annotations

import logging
from fractions import Fraction
from typing import List, Optional, Sequence

LOGGER = logging.getLogger(__name__)


class SimplexTableau:
    """Dense tableau for ``A x = b, x >= 0`` with one artificial variable per row.

    Columns ``0..n-1`` are the original variables and ``n..n+m-1`` the
    artificials. Rows with a negative right-hand side are negated on entry so
    the artificial basis starts feasible.
    """

    def __init__(self, rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> None:
        if not rows or len(rows) != len(rhs):
            raise ValueError("tableau needs one right-hand side per constraint row")
        self.m = len(rows)
        self.n = len(rows[0])
        self.table: List[List[Fraction]] = []
        self.rhs: List[Fraction] = []
        for i, (row, value) in enumerate(zip(rows, rhs)):
            if len(row) != self.n:
                raise ValueError("all constraint rows must have the same length")
            sign = -1 if value < 0 else 1
            artificial = [Fraction(int(k == i)) for k in range(self.m)]
            self.table.append([sign * Fraction(a) for a in row] + artificial)
            self.rhs.append(sign * Fraction(value))
        self.basis = [self.n + i for i in range(self.m)]
        # reduced costs of the phase-one objective (sum of artificials)
        self.costs = [
            -sum((self.table[i][j] for i in range(self.m)), Fraction(0)) if j < self.n else Fraction(0)
            for j in range(self.n + self.m)
        ]
        self.objective = sum(self.rhs, Fraction(0))
        self.pivots = 0

    def pivot(self, row: int, col: int) -> None:
        pivot = self.table[row][col]
        self.table[row] = [value / pivot for value in self.table[row]]
        self.rhs[row] /= pivot
        for i in range(self.m):
            if i != row and self.table[i][col] != 0:
                factor = self.table[i][col]
                self.table[i] = [a - factor * b for a, b in zip(self.table[i], self.table[row])]
                self.rhs[i] -= factor * self.rhs[row]
        entering_cost = self.costs[col]
        if entering_cost != 0:
            self.costs = [c - entering_cost * b for c, b in zip(self.costs, self.table[row])]
            self.objective += entering_cost * self.rhs[row]
        self.basis[row] = col
        self.pivots += 1

    def bland_step(self) -> str:
        """One pivot by Bland's rule: lowest improving column, lowest-index tie break."""

        entering = next((j for j, c in enumerate(self.costs) if c < 0), None)
        if entering is None:
            return "optimal"
        candidates = [
            (self.rhs[i] / self.table[i][entering], self.basis[i], i)
            for i in range(self.m)
            if self.table[i][entering] > 0
        ]
        if not candidates:
            return "unbounded"
        _, _, leaving = min(candidates)
        self.pivot(leaving, entering)
        return "go_on"

    def solve(self) -> str:
        while True:
            status = self.bland_step()
            if status != "go_on":
                LOGGER.debug("phase one finished after %d pivots: %s", self.pivots, status)
                return status

    def solution(self) -> List[Fraction]:
        values = [Fraction(0)] * self.n
        for i, var in enumerate(self.basis):
            if var < self.n:
                values[var] = self.rhs[i]
        return values


def find_nonnegative_solution(
    rows: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> Optional[List[Fraction]]:
    """Exact ``x >= 0`` with ``A x = b``, or ``None`` when the system has none."""

    tableau = SimplexTableau(rows, rhs)
    tableau.solve()
    if tableau.objective != 0:
        return None
    return tableau.solution()


__all__ = ["SimplexTableau", "find_nonnegative_solution"]
