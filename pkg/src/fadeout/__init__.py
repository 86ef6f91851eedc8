"""Exact, asymptotic, diffusion, and simulation-based estimators of the
mean time to disease extinction in stochastic SIS models with Erlang
distributed infectious periods."""

from .errors import (BvpFailureError, FadeoutError, MeshFailureError,
                     NotApplicableError, NumericalFailureError,
                     OutOfDomainError)
from .model import ModelParams, StateSpace, TransitionSchema

__all__ = [
    "BvpFailureError",
    "FadeoutError",
    "MeshFailureError",
    "ModelParams",
    "NotApplicableError",
    "NumericalFailureError",
    "OutOfDomainError",
    "StateSpace",
    "TransitionSchema",
    "__version__",
]

__version__ = "1.0.0"
