"""Generalized linear bandit simulation under stochastically delayed feedback."""

__version__ = "0.1.0"

from .confidence import ConfidenceSet, beta_width, membership, optimistic_index
from .design import DesignState, inverse_identity_residual
from .env import DelayModel, DeliveryQueue, EnvironmentConfig, generate_decision_set
from .glm import (
    GlmModel,
    LinkFunction,
    NonConvergenceError,
    ObservedSample,
    fit_penalized_mle,
    make_link,
)
from .policy import BanditPolicy, PolicyConfig
from .sim import Trace, run_episode
from .verify import LemmaReport, run_all

__all__ = [
    "__version__",
    "BanditPolicy",
    "ConfidenceSet",
    "DelayModel",
    "DeliveryQueue",
    "DesignState",
    "EnvironmentConfig",
    "GlmModel",
    "LemmaReport",
    "LinkFunction",
    "NonConvergenceError",
    "ObservedSample",
    "PolicyConfig",
    "Trace",
    "beta_width",
    "fit_penalized_mle",
    "generate_decision_set",
    "inverse_identity_residual",
    "make_link",
    "membership",
    "optimistic_index",
    "run_all",
    "run_episode",
]
