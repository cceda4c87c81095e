"""Value types shared by the services and the command line."""

from .datum import (
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
from .matrices import RationalMat, SymEig
from .operator import (
    CapacityEstimate,
    CapacityObjective,
    CPOperator,
    OperatorScaling,
    RankVerdict,
    ScalingTrace,
    SquareEmbedding,
)
from .polytope import PolytopeMembership, VectorFamily
from .run_config import RunConfig

__all__ = [
    "BLConstantResult",
    "BLDatum",
    "BLScalingTrace",
    "CPOperator",
    "CapacityEstimate",
    "CapacityObjective",
    "DatumValidation",
    "DeterminantBound",
    "FeasibilityReport",
    "GaussianCertificate",
    "GeometricCheck",
    "NormalizationCheck",
    "OperatorScaling",
    "PolytopeMembership",
    "RankVerdict",
    "RationalMat",
    "RunConfig",
    "ScalingTrace",
    "SquareEmbedding",
    "SymEig",
    "VectorFamily",
    "WitnessCheck",
]
