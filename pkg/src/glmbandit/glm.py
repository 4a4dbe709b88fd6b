"""Exponential-family reward models, link functions, and the penalized ML estimator.

The reward for an action x is Y = mu(<x, theta*>) + eta with a strictly
increasing inverse link mu and bounded zero-mean noise. Estimation maximizes
the ridge-penalized log-likelihood

    J(theta) = sum_s [ Y_s * z_s - b(z_s) ] - (alpha * a_phi / 2) * ||theta||^2,

where z_s = <X_s, theta> and b is the log-partition function of the family
(b' = mu). J is strictly concave for alpha > 0, so damped Newton with step
halving converges globally from any start.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "LINK_KINDS",
    "LinkFunction",
    "GlmModel",
    "ObservedSample",
    "NonConvergenceError",
    "make_link",
    "curvature_floor_for",
    "link_eval",
    "link_deriv",
    "log_partition",
    "penalized_objective",
    "grad_penalized",
    "hessian_penalized",
    "fit_penalized_mle",
    "sample_reward",
]

LINK_KINDS = ("identity", "logistic", "exponential")


class NonConvergenceError(RuntimeError):
    """Newton solver exhausted its iteration or damping budget."""


@dataclass(frozen=True)
class LinkFunction:
    """Inverse link mu together with the constants that depend on it.

    ``lipschitz`` bounds mu' from above on [-m1, m1] and ``curvature_floor``
    bounds it from below; ``dispersion`` is the family's dispersion factor
    a_phi (1 for Bernoulli/Poisson, R^2 for Gaussian rewards).
    """

    kind: str
    lipschitz: float
    curvature_floor: float
    dispersion: float


def _kind_of(link) -> str:
    return link.kind if isinstance(link, LinkFunction) else str(link)


def curvature_floor_for(link, m1: float) -> float:
    """Smallest slope of mu over the feasible inner products [-m1, m1]."""
    if m1 <= 0:
        raise ValueError("m1 must be positive")
    kind = _kind_of(link)
    if kind == "identity":
        return 1.0
    if kind == "logistic":
        # sigmoid slope is symmetric about 0 and decreasing in |z|
        s = 1.0 / (1.0 + math.exp(-m1))
        return s * (1.0 - s)
    if kind == "exponential":
        return math.exp(-m1)
    raise ValueError(f"unknown link kind {kind!r}")


def make_link(kind: str, m1: float = 1.0, noise_bound: float = 1.0) -> LinkFunction:
    """Build a LinkFunction with its constants evaluated at m1 and R."""
    if kind == "identity":
        return LinkFunction("identity", 1.0, 1.0, noise_bound * noise_bound)
    if kind == "logistic":
        return LinkFunction("logistic", 0.25, curvature_floor_for(kind, m1), 1.0)
    if kind == "exponential":
        return LinkFunction("exponential", math.exp(m1), math.exp(-m1), 1.0)
    raise ValueError(f"unknown link kind {kind!r}")


def _shaped(z, out):
    return float(out[0]) if np.ndim(z) == 0 else out


def _sigmoid(z: np.ndarray) -> np.ndarray:
    # evaluate on the stable branch to avoid overflow for large |z|
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def link_eval(link, z):
    """mu(z); vectorized over z."""
    kind = _kind_of(link)
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    if kind == "identity":
        out = arr
    elif kind == "logistic":
        out = _sigmoid(arr)
    elif kind == "exponential":
        out = np.exp(arr)
    else:
        raise ValueError(f"unknown link kind {kind!r}")
    return _shaped(z, out)


def link_deriv(link, z):
    """mu'(z); vectorized over z."""
    kind = _kind_of(link)
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    if kind == "identity":
        out = np.ones_like(arr)
    elif kind == "logistic":
        s = _sigmoid(arr)
        out = s * (1.0 - s)
    elif kind == "exponential":
        out = np.exp(arr)
    else:
        raise ValueError(f"unknown link kind {kind!r}")
    return _shaped(z, out)


def log_partition(link, z):
    """Log-partition b(z) with b'(z) = mu(z); vectorized over z."""
    kind = _kind_of(link)
    arr = np.atleast_1d(np.asarray(z, dtype=float))
    if kind == "identity":
        out = 0.5 * arr * arr
    elif kind == "logistic":
        out = np.logaddexp(0.0, arr)
    elif kind == "exponential":
        out = np.exp(arr)
    else:
        raise ValueError(f"unknown link kind {kind!r}")
    return _shaped(z, out)


@dataclass
class GlmModel:
    """True reward model: parameter theta*, link, noise bound R, norm bound m1."""

    theta_star: np.ndarray
    link: LinkFunction
    noise_bound: float = 1.0
    norm_bound: float = 1.0
    unbounded_noise: bool = field(init=False, default=False)

    def __post_init__(self):
        self.theta_star = np.asarray(self.theta_star, dtype=float)
        if self.noise_bound <= 0 or self.norm_bound <= 0:
            raise ValueError("noise_bound and norm_bound must be positive")
        if np.linalg.norm(self.theta_star) > self.norm_bound + 1e-9:
            raise ValueError("||theta*|| exceeds the norm bound m1")
        if self.link.kind == "exponential":
            # Poisson noise is unbounded, so the |eta| <= R assumption fails
            self.unbounded_noise = True
            warnings.warn(
                "Poisson rewards have unbounded noise; bounded-noise guarantees do not apply",
                stacklevel=2,
            )


@dataclass(frozen=True)
class ObservedSample:
    """One delivered reward: the action played, its reward, and the origin round."""

    action: np.ndarray
    reward: float
    origin_round: int

    def __post_init__(self):
        object.__setattr__(self, "action", np.asarray(self.action, dtype=float))
        if np.linalg.norm(self.action) > 1.0 + 1e-9:
            raise ValueError("action norm exceeds 1")
        if self.origin_round < 1:
            raise ValueError("origin_round must be >= 1")


def sample_reward(model: GlmModel, action, rng) -> float:
    """Draw Y = mu(<action, theta*>) + eta for the model's reward family."""
    action = np.asarray(action, dtype=float)
    if np.linalg.norm(action) > 1.0 + 1e-9:
        raise ValueError("action norm exceeds 1")
    z = float(action @ model.theta_star)
    kind = model.link.kind
    if kind == "identity":
        r = model.noise_bound
        eta = min(max(rng.normal(0.0, r / 3.0), -r), r)
        return z + eta
    if kind == "logistic":
        return float(rng.random() < link_eval("logistic", z))
    return float(rng.poisson(math.exp(z)))


def _stack(samples) -> tuple[np.ndarray, np.ndarray]:
    if not samples:
        return np.zeros((0, 0)), np.zeros(0)
    x = np.array([s.action for s in samples], dtype=float)
    y = np.array([s.reward for s in samples], dtype=float)
    return x, y


def _check_dims(x: np.ndarray, theta: np.ndarray) -> None:
    if x.shape[0] and x.shape[1] != theta.shape[0]:
        raise ValueError(f"sample dimension {x.shape[1]} != parameter dimension {theta.shape[0]}")


def _objective_arrays(x, y, theta, alpha_disp, link) -> float:
    z = x @ theta
    return float(y @ z - np.sum(log_partition(link, z)) - 0.5 * alpha_disp * (theta @ theta))


def _grad_arrays(x, y, theta, alpha_disp, link) -> np.ndarray:
    z = x @ theta
    return x.T @ (y - np.asarray(link_eval(link, z))) - alpha_disp * theta


def _hess_arrays(x, theta, alpha_disp, link) -> np.ndarray:
    z = x @ theta
    w = np.asarray(link_deriv(link, z))
    return alpha_disp * np.eye(theta.shape[0]) + (x * w[:, None]).T @ x


def penalized_objective(samples, theta, alpha: float, link: LinkFunction) -> float:
    """Penalized log-likelihood J(theta) of the arrived samples."""
    theta = np.asarray(theta, dtype=float)
    x, y = _stack(samples)
    if x.shape[0]:
        _check_dims(x, theta)
        return _objective_arrays(x, y, theta, alpha * link.dispersion, link)
    return float(-0.5 * alpha * link.dispersion * (theta @ theta))


def grad_penalized(samples, theta, alpha: float, link: LinkFunction) -> np.ndarray:
    """Gradient of J: sum_s (Y_s - mu(<X_s, theta>)) X_s - alpha * a_phi * theta."""
    theta = np.asarray(theta, dtype=float)
    x, y = _stack(samples)
    if x.shape[0] == 0:
        return -alpha * link.dispersion * theta
    _check_dims(x, theta)
    return _grad_arrays(x, y, theta, alpha * link.dispersion, link)


def hessian_penalized(samples, theta, alpha: float, link: LinkFunction) -> np.ndarray:
    """Curvature of -J: alpha * a_phi * I + sum_s mu'(<X_s, theta>) X_s X_s^T."""
    theta = np.asarray(theta, dtype=float)
    x, _ = _stack(samples)
    if x.shape[0] == 0:
        return alpha * link.dispersion * np.eye(theta.shape[0])
    _check_dims(x, theta)
    return _hess_arrays(x, theta, alpha * link.dispersion, link)


def _fit_arrays(x, y, alpha_disp, link, init, tol, max_iter) -> np.ndarray:
    theta = np.array(init, dtype=float, copy=True)
    z = x @ theta
    obj = float(y @ z - np.sum(log_partition(link, z)) - 0.5 * alpha_disp * (theta @ theta))
    for _ in range(max_iter):
        g = x.T @ (y - np.asarray(link_eval(link, z))) - alpha_disp * theta
        if float(np.linalg.norm(g)) <= tol:
            return theta
        w = np.asarray(link_deriv(link, z))
        h = alpha_disp * np.eye(theta.shape[0]) + (x * w[:, None]).T @ x
        step = np.linalg.solve(h, g)
        # halve the ascent step until the concave objective stops decreasing;
        # the relative slack keeps float-resolution noise near the optimum from
        # rejecting the full Newton step and stalling the quadratic phase
        slack = 1e-10 * (1.0 + abs(obj))
        scale = 1.0
        while True:
            cand = theta + scale * step
            z_c = x @ cand
            obj_c = float(y @ z_c - np.sum(log_partition(link, z_c)) - 0.5 * alpha_disp * (cand @ cand))
            if obj_c >= obj - slack:
                break
            scale *= 0.5
            if scale < 1e-16:
                raise NonConvergenceError("step halving failed to improve the objective")
        theta, z, obj = cand, z_c, obj_c
    g = x.T @ (y - np.asarray(link_eval(link, z))) - alpha_disp * theta
    if float(np.linalg.norm(g)) <= tol:
        return theta
    raise NonConvergenceError(
        f"gradient norm {float(np.linalg.norm(g)):.3e} above tol after {max_iter} Newton steps"
    )


def fit_penalized_mle(
    samples,
    alpha: float,
    link: LinkFunction,
    init=None,
    tol: float = 1e-8,
    max_iter: int = 100,
) -> np.ndarray:
    """Maximize J(theta) by damped Newton; returns theta with ||grad|| <= tol.

    Raises NonConvergenceError when the iteration or damping budget runs out,
    which signals an ill-conditioned instance (retry with a larger alpha).
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    x, y = _stack(samples)
    if init is None:
        if x.shape[0] == 0:
            raise ValueError("cannot infer the dimension from empty samples; pass init")
        init = np.zeros(x.shape[1])
    init = np.asarray(init, dtype=float)
    if x.shape[0]:
        _check_dims(x, init)
    else:
        x = np.zeros((0, init.shape[0]))
    return _fit_arrays(x, y, alpha * link.dispersion, link, init, tol, max_iter)
