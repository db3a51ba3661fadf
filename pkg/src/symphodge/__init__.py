"""Symplectic Hodge theory and polyhedral currents on tori, at desk scale."""
from . import chains, cubical, currents, deform, exteralg, invariant, pipeline, selftest, torusfields
from .exteralg import ConsistencyError, DimensionError, DomainError, PointwiseForm

__version__ = "0.1.0"

__all__ = [
    "chains", "cubical", "currents", "deform", "exteralg", "invariant", "pipeline", "selftest",
    "torusfields", "ConsistencyError", "DimensionError", "DomainError", "PointwiseForm",
]
