"""BL polytopes of rank-one and matroid-intersection data, with exact hull oracles."""

from __future__ import annotations

import logging
from fractions import Fraction
from itertools import combinations
from typing import List, Optional, Sequence, Tuple

from ..errors import BudgetExceeded, DimensionMismatch
from ..models.datum import BLDatum, exponents_from_fractions
from ..models.matrices import RationalLike, RationalMat, to_fraction
from ..models.polytope import PolytopeMembership, VectorFamily
from .brascamp_lieb_service import BrascampLiebService, brascamp_lieb_service
from .exact_simplex import find_nonnegative_solution
from .matrixkit import exact_rank

MAX_FAMILY_SIZE = 20

Vertex = Tuple[int, ...]


class PolytopeService:
    """Membership in BL polytopes, through feasibility or through vertex hulls."""

    def __init__(
        self,
        *,
        bl_service: Optional[BrascampLiebService] = None,
        max_family_size: int = MAX_FAMILY_SIZE,
        logger: Optional[logging.Logger] = None,
    ) -> None:
        self.bl_service = bl_service or brascamp_lieb_service
        self.max_family_size = max_family_size
        self.logger = logger or logging.getLogger(__name__)

    # ------------------------------------------------------------------
    # Data constructions
    # ------------------------------------------------------------------
    def rank1_maps(self, family: VectorFamily) -> List[RationalMat]:
        """One ``1 x n`` map per vector: ``x -> <v_j, x>``."""

        return [RationalMat.from_rows([vector], cols=family.dim) for vector in family.vectors]

    def rank1_datum(self, family: VectorFamily, p: Sequence[RationalLike]) -> BLDatum:
        if len(p) != family.m:
            raise DimensionMismatch(f"{family.m} vectors but {len(p)} exponents")
        numerators, denominator = exponents_from_fractions(p)
        return BLDatum.from_exact(family.dim, self.rank1_maps(family), numerators, denominator)

    def matroid_maps(self, v: VectorFamily, w: VectorFamily) -> List[RationalMat]:
        """Maps ``(x, y) -> (<v_j, x>, <w_j, y>)`` on ``R^{2n}``."""

        if v.dim != w.dim or v.m != w.m:
            raise DimensionMismatch("both families need the same dimension and size")
        n = v.dim
        zero = [Fraction(0)] * n
        return [
            RationalMat.from_rows([list(vj) + zero, zero + list(wj)], cols=2 * n)
            for vj, wj in zip(v.vectors, w.vectors)
        ]

    def matroid_intersection_datum(
        self, v: VectorFamily, w: VectorFamily, p: Optional[Sequence[RationalLike]] = None
    ) -> BLDatum:
        """Datum on ``R^{2n}`` whose polytope is the common-basis polytope of ``v`` and ``w``.

        Exponents default to the barycentre ``p_j = n / m``.
        """

        maps = self.matroid_maps(v, w)
        if p is None:
            p = [Fraction(v.dim, v.m)] * v.m
        if len(p) != v.m:
            raise DimensionMismatch(f"{v.m} vectors but {len(p)} exponents")
        numerators, denominator = exponents_from_fractions(p)
        return BLDatum.from_exact(2 * v.dim, maps, numerators, denominator)

    # ------------------------------------------------------------------
    # Vertex oracles
    # ------------------------------------------------------------------
    def enumerate_bases(self, family: VectorFamily) -> List[Vertex]:
        """Index sets of size ``n`` whose vectors span ``R^n``."""

        self._guard(family.m)
        return [
            subset
            for subset in combinations(range(family.m), family.dim)
            if self._is_basis(family, subset)
        ]

    def enumerate_common_bases(self, v: VectorFamily, w: VectorFamily) -> List[Vertex]:
        """Index sets that are bases of both families."""

        if v.dim != w.dim or v.m != w.m:
            raise DimensionMismatch("both families need the same dimension and size")
        self._guard(v.m)
        return [
            subset
            for subset in combinations(range(v.m), v.dim)
            if self._is_basis(v, subset) and self._is_basis(w, subset)
        ]

    @staticmethod
    def indicator(subset: Vertex, m: int) -> Vertex:
        return tuple(int(i in subset) for i in range(m))

    def hull_membership_exact(
        self, vertices: Sequence[Sequence[int]], point: Sequence[RationalLike]
    ) -> PolytopeMembership:
        """Decide whether ``point`` is a convex combination of ``vertices`` by exact LP."""

        if not vertices:
            raise ValueError("hull membership needs at least one vertex")
        target = [to_fraction(value) for value in point]
        if any(len(vertex) != len(target) for vertex in vertices):
            raise DimensionMismatch("vertices and point have different lengths")

        rows = [[Fraction(vertex[k]) for vertex in vertices] for k in range(len(target))]
        rows.append([Fraction(1)] * len(vertices))
        weights = find_nonnegative_solution(rows, target + [Fraction(1)])
        if weights is None:
            return PolytopeMembership(verdict="outside", diagnostics={"oracle": "exact hull"})
        return PolytopeMembership(
            verdict="inside",
            weights=tuple(weights),
            vertices=tuple(tuple(int(x) for x in vertex) for vertex in vertices),
            diagnostics={"oracle": "exact hull"},
        )

    def rank1_hull_membership(self, family: VectorFamily, p: Sequence[RationalLike]) -> PolytopeMembership:
        bases = self.enumerate_bases(family)
        return self._hull_or_empty([self.indicator(b, family.m) for b in bases], p)

    def matroid_hull_membership(
        self, v: VectorFamily, w: VectorFamily, p: Sequence[RationalLike]
    ) -> PolytopeMembership:
        bases = self.enumerate_common_bases(v, w)
        return self._hull_or_empty([self.indicator(b, v.m) for b in bases], p)

    # ------------------------------------------------------------------
    # Feasibility route
    # ------------------------------------------------------------------
    def bl_membership(
        self, n: int, maps: Sequence[RationalMat], p: Sequence[RationalLike], budget: Optional[int] = None
    ) -> PolytopeMembership:
        """``p`` is inside the BL polytope of ``maps`` iff the datum ``(maps, p)`` is feasible.

        Maps with ``p_j = 0`` are dropped first. Negative exponents and points
        off the scaling hyperplane are outside without a subspace witness.
        """

        exponents = [to_fraction(value) for value in p]
        if len(exponents) != len(maps):
            raise DimensionMismatch(f"{len(maps)} maps but {len(exponents)} exponents")
        if any(value < 0 for value in exponents):
            return PolytopeMembership(verdict="outside", diagnostics={"reason": "negative exponent"})

        kept = [j for j, value in enumerate(exponents) if value > 0]
        weighted_dims = sum((exponents[j] * maps[j].rows for j in kept), Fraction(0))
        if weighted_dims != n:
            return PolytopeMembership(
                verdict="outside",
                diagnostics={"reason": "off the scaling hyperplane", "weighted_dims": str(weighted_dims)},
            )

        numerators, denominator = exponents_from_fractions([exponents[j] for j in kept])
        datum = BLDatum.from_exact(n, [maps[j] for j in kept], numerators, denominator)
        report = self.bl_service.feasibility(datum, budget=budget)
        diagnostics = {"feasibility": report.diagnostics, "dropped": [j for j in range(len(maps)) if j not in kept]}
        if report.verdict == "feasible":
            return PolytopeMembership(verdict="inside", diagnostics=diagnostics)
        if report.verdict == "infeasible":
            return PolytopeMembership(verdict="outside", witness=report.witness, diagnostics=diagnostics)
        return PolytopeMembership(verdict="inconclusive", diagnostics=diagnostics)

    def rank1_membership(
        self, family: VectorFamily, p: Sequence[RationalLike], budget: Optional[int] = None
    ) -> PolytopeMembership:
        return self.bl_membership(family.dim, self.rank1_maps(family), p, budget)

    def matroid_membership(
        self, v: VectorFamily, w: VectorFamily, p: Sequence[RationalLike], budget: Optional[int] = None
    ) -> PolytopeMembership:
        return self.bl_membership(2 * v.dim, self.matroid_maps(v, w), p, budget)

    # ------------------------------------------------------------------
    # Internal helpers
    # ------------------------------------------------------------------
    def _guard(self, m: int) -> None:
        if m > self.max_family_size:
            raise BudgetExceeded(
                f"enumerating subsets of {m} vectors exceeds the limit of {self.max_family_size}"
            )

    @staticmethod
    def _is_basis(family: VectorFamily, subset: Vertex) -> bool:
        columns = [family.vectors[i] for i in subset]
        return exact_rank(RationalMat.from_columns(columns, family.dim)) == family.dim

    def _hull_or_empty(self, vertices: List[Vertex], p: Sequence[RationalLike]) -> PolytopeMembership:
        if not vertices:
            self.logger.info("family has no bases; polytope is empty")
            return PolytopeMembership(verdict="outside", diagnostics={"reason": "no bases"})
        return self.hull_membership_exact(vertices, p)


polytope_service = PolytopeService()


__all__ = ["MAX_FAMILY_SIZE", "PolytopeService", "polytope_service"]
