"""Vector families and polytope membership answers."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, Optional, Sequence, Tuple

from ..errors import DimensionMismatch, InputError
from .matrices import RationalLike, RationalMat, fraction_to_str, to_fraction


@dataclass(frozen=True)
class VectorFamily:
    """``m`` exact vectors in ``R^n``; the columns of a linear matroid."""

    dim: int
    vectors: Tuple[Tuple[Fraction, ...], ...]

    def __post_init__(self) -> None:
        vectors = tuple(tuple(to_fraction(value) for value in vector) for vector in self.vectors)
        if self.dim < 1:
            raise DimensionMismatch("family dimension must be at least 1")
        if not vectors:
            raise InputError("a vector family needs at least one vector", field="vectors")
        for index, vector in enumerate(vectors):
            if len(vector) != self.dim:
                raise DimensionMismatch(f"vector {index} has length {len(vector)}, expected {self.dim}")
        if all(value == 0 for vector in vectors for value in vector):
            raise InputError("every vector in the family is zero", field="vectors")
        object.__setattr__(self, "vectors", vectors)

    @classmethod
    def from_lists(cls, dim: int, vectors: Sequence[Sequence[RationalLike]]) -> "VectorFamily":
        return cls(dim, tuple(tuple(vector) for vector in vectors))

    @property
    def m(self) -> int:
        return len(self.vectors)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.dim,
            "vectors": [[fraction_to_str(value) for value in vector] for vector in self.vectors],
        }


@dataclass(frozen=True)
class PolytopeMembership:
    """Membership answer for a query point.

    ``verdict`` is ``inside``, ``outside`` or ``inconclusive``. ``weights`` is
    an exact convex combination over ``vertices`` when the hull oracle answered
    inside; ``witness`` is the exactly verified violating subspace when the
    feasibility route answered outside.
    """

    verdict: str
    weights: Optional[Tuple[Fraction, ...]] = None
    vertices: Optional[Tuple[Tuple[int, ...], ...]] = None
    witness: Optional[RationalMat] = None
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    @property
    def inside(self) -> bool:
        return self.verdict == "inside"

    def to_dict(self) -> Dict[str, Any]:
        return {
            "verdict": self.verdict,
            "weights": [fraction_to_str(w) for w in self.weights] if self.weights is not None else None,
            "vertices": [list(v) for v in self.vertices] if self.vertices is not None else None,
            "witness": [[fraction_to_str(v) for v in column] for column in self.witness.columns()]
            if self.witness is not None
            else None,
            "diagnostics": dict(self.diagnostics),
        }


__all__ = ["PolytopeMembership", "VectorFamily"]
