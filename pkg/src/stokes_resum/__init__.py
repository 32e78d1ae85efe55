"""Exact resummation of divergent formal solutions of meromorphic ODEs on Stokes groupoids."""

__version__ = "0.1.0"

from .errors import (
    CancellationError,
    DomainError,
    LeadingTermMismatchError,
    NotInvertibleError,
    ResonanceError,
    StokesResumError,
    ToleranceError,
    VariableMismatchError,
    WindowError,
)
from .groupoid import GroupoidChart, pair, sto
from .connection import MeromorphicSystem, ScalarOperator, companion, pullback, pushforward
from .resummation import (
    ExponentialModel,
    FormalGauge,
    GroupoidRepresentation,
    ModelEntry,
    MonomialGauge,
    model_rep,
    resum,
    resum_model,
    solve_formal_gauge,
)

__all__ = [
    "CancellationError",
    "DomainError",
    "ExponentialModel",
    "FormalGauge",
    "GroupoidChart",
    "GroupoidRepresentation",
    "LeadingTermMismatchError",
    "MeromorphicSystem",
    "ModelEntry",
    "MonomialGauge",
    "NotInvertibleError",
    "ResonanceError",
    "ScalarOperator",
    "StokesResumError",
    "ToleranceError",
    "VariableMismatchError",
    "WindowError",
    "companion",
    "model_rep",
    "pair",
    "pullback",
    "pushforward",
    "resum",
    "resum_model",
    "solve_formal_gauge",
    "sto",
]
