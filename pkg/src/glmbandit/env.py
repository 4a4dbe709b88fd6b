"""Environment machinery: decision sets, true parameters, delays, delivery.

A reward generated in round s with delay tau becomes visible at the end of
round ceil(s + tau) and is usable from the following round. Zero delay means
the reward is delivered within round s itself, reproducing immediate feedback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .glm import LINK_KINDS, link_eval

__all__ = [
    "DELAY_KINDS",
    "DelayModel",
    "DeliveryQueue",
    "EnvironmentConfig",
    "sample_delay",
    "sample_delays",
    "generate_decision_set",
    "sample_theta_star",
    "best_expected_reward",
    "resolve_theta",
]

DELAY_KINDS = ("zero", "constant", "exponential", "uniform", "pareto")


@dataclass(frozen=True)
class DelayModel:
    """Delay law; ``mean`` is the distribution parameter in rounds.

    exponential uses rate 1/mean, uniform the support [0, 2*mean], pareto the
    shape (1 + mean)/mean with scale 1. Note the pareto law's true expectation
    is 1 + mean (support starts at 1); analytic_mean reports it.
    """

    kind: str
    mean: float = 0.0

    def __post_init__(self):
        if self.kind not in DELAY_KINDS:
            raise ValueError(f"unknown delay kind {self.kind!r}")
        if self.mean < 0:
            raise ValueError("delay mean must be nonnegative")
        if self.kind == "pareto" and self.mean <= 0:
            raise ValueError("pareto delays need a positive mean parameter")

    def analytic_mean(self) -> float:
        """Expected delay implied by the parameters."""
        if self.kind == "zero":
            return 0.0
        if self.kind == "pareto":
            # shape a = (1+m)/m, scale 1: mean = a/(a-1) = 1 + m
            return 1.0 + self.mean
        return self.mean


def sample_delay(model: DelayModel, rng) -> float:
    """One i.i.d. draw from the delay law; always >= 0."""
    if model.kind == "zero":
        return 0.0
    if model.kind == "constant":
        return model.mean
    if model.kind == "exponential":
        return float(rng.exponential(model.mean))
    if model.kind == "uniform":
        return float(rng.uniform(0.0, 2.0 * model.mean))
    shape = (1.0 + model.mean) / model.mean
    return float((1.0 - rng.random()) ** (-1.0 / shape))  # inverse CDF, support [1, inf)


def sample_delays(model: DelayModel, n: int, rng) -> np.ndarray:
    """Vectorized batch of n delay draws (for Monte Carlo checks)."""
    if model.kind == "zero":
        return np.zeros(n)
    if model.kind == "constant":
        return np.full(n, model.mean)
    if model.kind == "exponential":
        return rng.exponential(model.mean, n)
    if model.kind == "uniform":
        return rng.uniform(0.0, 2.0 * model.mean, n)
    shape = (1.0 + model.mean) / model.mean
    return (1.0 - rng.random(n)) ** (-1.0 / shape)


class DeliveryQueue:
    """Scheduled rewards keyed by arrival round ceil(s + tau)."""

    def __init__(self):
        self._due: dict[int, list[tuple[int, np.ndarray, float]]] = {}
        self.size = 0

    def schedule(self, s: int, action, reward: float, tau: float) -> None:
        """Store (s, action, reward) for delivery at round ceil(s + tau)."""
        if tau < 0:
            raise ValueError("delay must be nonnegative")
        arrival = math.ceil(s + tau)
        self._due.setdefault(arrival, []).append((s, action, reward))
        self.size += 1

    def pop_due(self, t: int) -> list[tuple[int, np.ndarray, float]]:
        """Remove and return the records arriving at round t, oldest origin first."""
        records = self._due.pop(t, [])
        self.size -= len(records)
        records.sort(key=lambda rec: rec[0])
        return records


@dataclass
class EnvironmentConfig:
    """One experiment cell: geometry, link, delay law, horizon, and seeding.

    theta (explicit vector) takes precedence over theta_seed; one of the two
    must be provided so the true parameter is pinned per cell.
    """

    d: int
    k: int
    horizon: int
    link: str = "identity"
    delay: DelayModel = field(default_factory=lambda: DelayModel("zero"))
    theta: np.ndarray | None = None
    theta_seed: int | None = None
    seed: int | tuple[int, ...] = 0
    noise_bound: float = 1.0
    norm_bound: float = 1.0

    def __post_init__(self):
        if self.d < 1 or self.k < 1 or self.horizon < 1:
            raise ValueError("d, k, horizon must all be >= 1")
        if self.link not in LINK_KINDS:
            raise ValueError(f"unknown link kind {self.link!r}")
        if self.theta is None and self.theta_seed is None:
            raise ValueError("provide theta or theta_seed")
        if self.theta is not None:
            self.theta = np.asarray(self.theta, dtype=float)


def generate_decision_set(d: int, k: int, rng) -> np.ndarray:
    """k actions drawn uniformly from the closed unit ball, as a (k, d) array."""
    gauss = rng.standard_normal((k, d))
    norms = np.linalg.norm(gauss, axis=1, keepdims=True)
    radii = rng.random(k) ** (1.0 / d)
    return gauss * (radii[:, None] / norms)


def sample_theta_star(d: int, m1: float, rng) -> np.ndarray:
    """Uniform draw from the ball of radius m1."""
    gauss = rng.standard_normal(d)
    return gauss * (m1 * rng.random() ** (1.0 / d) / np.linalg.norm(gauss))


def resolve_theta(cfg: EnvironmentConfig) -> np.ndarray:
    """The cell's true parameter: the explicit vector, or a seeded ball draw."""
    if cfg.theta is not None:
        theta = np.asarray(cfg.theta, dtype=float)
        if np.linalg.norm(theta) > cfg.norm_bound + 1e-9:
            raise ValueError("explicit theta exceeds the norm bound")
        return theta
    rng = np.random.default_rng(np.random.SeedSequence(cfg.theta_seed))
    return sample_theta_star(cfg.d, cfg.norm_bound, rng)


def best_expected_reward(decision_set, theta_star, link) -> tuple[int, float]:
    """Exact argmax of mu(<x, theta*>) by linear scan; ties go to the lowest index."""
    actions = np.asarray(decision_set, dtype=float)
    if actions.ndim != 2 or actions.shape[0] == 0:
        raise ValueError("decision set must be a nonempty 2-d array")
    values = np.atleast_1d(link_eval(link, actions @ np.asarray(theta_star, dtype=float)))
    idx = int(np.argmax(values))
    return idx, float(values[idx])
