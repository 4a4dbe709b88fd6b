"""The round loop: decision set, action, delayed delivery, policy update.

Each run derives five independent generator streams from one seed (true
parameter, decision sets, reward noise, delays, policy randomness), so two
policies replayed under the same environment seed face identical decision
sets, noise, and delays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import (
    DeliveryQueue,
    EnvironmentConfig,
    generate_decision_set,
    resolve_theta,
    sample_delay,
    sample_theta_star,
)
from .glm import GlmModel, NonConvergenceError, ObservedSample, link_eval, make_link, sample_reward
from .policy import BanditPolicy, PolicyConfig

__all__ = ["Trace", "run_episode", "instant_regret"]


@dataclass
class Trace:
    """Per-round diagnostics for one run; arrays are indexed by round - 1."""

    instant_regret: np.ndarray
    cum_regret: np.ndarray
    pending: np.ndarray
    sqrt_beta: np.ndarray
    covered: np.ndarray
    chosen_index: np.ndarray
    optimal_index: np.ndarray
    theta_hat: np.ndarray
    theta_star: np.ndarray

    @property
    def horizon(self) -> int:
        return self.instant_regret.shape[0]


def instant_regret(decision_set, chosen: int, theta_star, link) -> float:
    """Expected-reward gap of the chosen action against the set's best."""
    values = np.atleast_1d(
        link_eval(link, np.asarray(decision_set, dtype=float) @ np.asarray(theta_star, dtype=float))
    )
    return float(np.max(values) - values[chosen])


def run_episode(env: EnvironmentConfig, policy: PolicyConfig, rng=None) -> Trace:
    """Run one seeded episode of the delayed-feedback protocol.

    rng may be None (use env.seed), an int/tuple seed, or a SeedSequence.
    Deterministic given the seed and both configs.
    """
    if isinstance(rng, np.random.SeedSequence):
        root = rng
    else:
        root = np.random.SeedSequence(env.seed if rng is None else rng)
    theta_ss, decision_ss, noise_ss, delay_ss, policy_ss = root.spawn(5)

    if env.theta is not None or env.theta_seed is not None:
        theta_star = resolve_theta(env)
    else:
        theta_star = sample_theta_star(env.d, env.norm_bound, np.random.default_rng(theta_ss))
    model = GlmModel(
        theta_star,
        make_link(env.link, env.norm_bound, env.noise_bound),
        env.noise_bound,
        env.norm_bound,
    )
    pol = BanditPolicy(policy, env.d, env.link)
    queue = DeliveryQueue()
    decision_rng = np.random.default_rng(decision_ss)
    noise_rng = np.random.default_rng(noise_ss)
    delay_rng = np.random.default_rng(delay_ss)
    policy_rng = np.random.default_rng(policy_ss)

    t_hor = env.horizon
    inst = np.zeros(t_hor)
    cum = np.zeros(t_hor)
    pending = np.zeros(t_hor, dtype=np.int64)
    sqrt_beta = np.zeros(t_hor)
    covered = np.zeros(t_hor, dtype=bool)
    chosen = np.zeros(t_hor, dtype=np.int64)
    optimal = np.zeros(t_hor, dtype=np.int64)
    theta_hist = np.zeros((t_hor, env.d))

    running = 0.0
    for t in range(1, t_hor + 1):
        actions = generate_decision_set(env.d, env.k, decision_rng)
        covered[t - 1] = pol.covers(theta_star)  # the set the decision is based on
        idx = pol.select_action(actions, policy_rng)
        x = actions[idx]
        y = sample_reward(model, x, noise_rng)
        tau = sample_delay(env.delay, delay_rng)
        queue.schedule(t, x, y, tau)
        arrivals = [
            ObservedSample(action, reward, s) for (s, action, reward) in queue.pop_due(t)
        ]
        try:
            pol.observe(arrivals)
        except NonConvergenceError as exc:
            raise NonConvergenceError(f"round {t}: {exc}") from exc

        values = np.atleast_1d(link_eval(model.link, actions @ theta_star))
        opt = int(np.argmax(values))
        gap = float(values[opt] - values[idx])
        running += gap
        inst[t - 1] = gap
        cum[t - 1] = running
        pending[t - 1] = pol.design.pending
        sqrt_beta[t - 1] = pol.sqrt_beta
        chosen[t - 1] = idx
        optimal[t - 1] = opt
        theta_hist[t - 1] = pol.theta_hat

    return Trace(inst, cum, pending, sqrt_beta, covered, chosen, optimal, theta_hist, theta_star)
