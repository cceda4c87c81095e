"""Service layer: operator scaling, Brascamp-Lieb data and their polytopes."""

from .brascamp_lieb_service import BrascampLiebService, brascamp_lieb_service
from .operator_scaling_service import OperatorScalingService, operator_scaling_service
from .polytope_service import PolytopeService, polytope_service

__all__ = [
    "BrascampLiebService",
    "OperatorScalingService",
    "PolytopeService",
    "brascamp_lieb_service",
    "operator_scaling_service",
    "polytope_service",
]
