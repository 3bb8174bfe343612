from .exceptions import (
    InvalidConfiguration,
    DimensionCapExceeded,
    DimensionMismatch,
    NotHermitian,
    NotUnitary,
    InvalidUnitVector,
    InvalidDensityMatrix,
    InvalidFactorIndex,
    InvalidPauliIndex,
    InvalidSchedule,
    SpaceMismatch,
    RankTooHigh,
    DecouplingInfeasible,
    MixedParallelDirections,
    InvalidSchemeRange,
    UnnormalizedDistribution,
    UnsupportedDistributionOperation,
    InsufficientSweepPoints,
    ZeroFisherInformation,
    ScenarioParseError,
    MissingScenarioField,
    FidelityComputationError,
)
from .constants import Constants

__all__ = [
    "InvalidConfiguration",
    "DimensionCapExceeded",
    "DimensionMismatch",
    "NotHermitian",
    "NotUnitary",
    "InvalidUnitVector",
    "InvalidDensityMatrix",
    "InvalidFactorIndex",
    "InvalidPauliIndex",
    "InvalidSchedule",
    "SpaceMismatch",
    "RankTooHigh",
    "DecouplingInfeasible",
    "MixedParallelDirections",
    "InvalidSchemeRange",
    "UnnormalizedDistribution",
    "UnsupportedDistributionOperation",
    "InsufficientSweepPoints",
    "ZeroFisherInformation",
    "ScenarioParseError",
    "MissingScenarioField",
    "FidelityComputationError",
    "Constants",
]
