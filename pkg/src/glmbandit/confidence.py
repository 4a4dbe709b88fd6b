"""Confidence ellipsoids over the observed-information matrix.

The set at round t is { theta : ||theta_hat - theta||_{w_bar} <= sqrt_beta }
with width

    sqrt_beta = sqrt(lam) * m1 + (R / kappa) * sqrt(2 * log( det(w_bar)^{1/2} / (delta * lam^{d/2}) )),

evaluated through the log-determinant so long horizons cannot overflow. For a
strictly increasing link the joint maximization of mu(x^T theta) over a finite
action set and the ellipsoid reduces to scoring each action by the closed-form
optimistic index mu(x^T theta_hat + sqrt_beta * ||x||_{w_bar^{-1}}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import DesignState, weighted_norm
from .glm import link_eval

__all__ = ["ConfidenceSet", "beta_width", "membership", "optimistic_index"]


@dataclass
class ConfidenceSet:
    """Ellipsoid snapshot: center, radius, and shape matrix (read-only after build)."""

    theta_hat: np.ndarray
    sqrt_beta: float
    shape: np.ndarray
    lam: float


def beta_width(state: DesignState, m1: float, r: float, kappa: float, delta: float) -> float:
    """Ellipsoid radius sqrt_beta for the current observed matrix.

    Nondecreasing along any trajectory because det(w_bar) only grows; always
    at least sqrt(lam) * m1 since det(w_bar) >= lam^d.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must lie in (0, 1]")
    if m1 <= 0 or r <= 0 or kappa <= 0:
        raise ValueError("m1, r, kappa must be positive")
    sign, logdet = np.linalg.slogdet(state.w_bar)
    if sign <= 0:
        raise np.linalg.LinAlgError("observed matrix is not positive definite")
    log_term = logdet - state.dim * math.log(state.lam) + 2.0 * math.log(1.0 / delta)
    return math.sqrt(state.lam) * m1 + (r / kappa) * math.sqrt(max(log_term, 0.0))


def membership(cs: ConfidenceSet, theta) -> bool:
    """True iff theta lies in the ellipsoid (1e-9 slack for boundary points)."""
    diff = np.asarray(theta, dtype=float) - cs.theta_hat
    return bool(weighted_norm(cs.shape, diff) <= cs.sqrt_beta + 1e-9)


def optimistic_index(cs: ConfidenceSet, x, link) -> float:
    """Best plausible expected reward of x: mu(x^T theta_hat + sqrt_beta * ||x||_{shape^-1})."""
    x = np.asarray(x, dtype=float)
    quad = float(x @ np.linalg.solve(cs.shape, x))
    bonus = cs.sqrt_beta * math.sqrt(max(quad, 0.0))
    return float(link_eval(link, float(x @ cs.theta_hat) + bonus))
