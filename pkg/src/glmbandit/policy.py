"""Decision policies over delayed feedback.

Three kinds share one state layout (design matrices, penalized ML estimate,
ellipsoid width):

- ``delayed_ofu_glm``: optimistic index mu(x^T theta_hat + sqrt_beta * ||x||_{w_bar^{-1}}),
  the exact argmax of the joint action/parameter maximization for monotone mu.
- ``delay_inflated_ucb``: the same estimator but the bonus is stretched by
  sqrt(1 + pending). This is a mechanism-level stand-in for inflated-bonus
  baselines, not a replication of any published variant: it keeps the bonus
  inflation and drops unknowable constants such as forced-exploration lengths.
- ``random``: uniform choice; keeps the same bookkeeping so diagnostics
  (coverage, pending counts) stay comparable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .confidence import ConfidenceSet, beta_width, membership
from .design import DesignState
from .glm import LinkFunction, _fit_arrays, make_link

__all__ = ["POLICY_KINDS", "PolicyConfig", "BanditPolicy"]

POLICY_KINDS = ("delayed_ofu_glm", "delay_inflated_ucb", "random")


@dataclass(frozen=True)
class PolicyConfig:
    """Agent-side parameters; kappa and dispersion default to the link's values."""

    kind: str
    alpha: float = 1.0
    delta: float = 0.05
    m1: float = 1.0
    r: float = 1.0
    kappa: float | None = None
    dispersion: float | None = None
    inflation_mode: str = "sqrt_pending"

    def __post_init__(self):
        if self.kind not in POLICY_KINDS:
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.m1 <= 0 or self.r <= 0:
            raise ValueError("m1 and r must be positive")
        if self.inflation_mode != "sqrt_pending":
            raise ValueError(f"unknown inflation_mode {self.inflation_mode!r}")


class BanditPolicy:
    """One policy instance per simulation run; owns its design state.

    The estimate is refit only on rounds with at least one arrival and only
    over arrived samples. The identity link admits the closed-form ridge
    solution; other links run warm-started damped Newton.
    """

    def __init__(self, config: PolicyConfig, d: int, link: LinkFunction | str):
        if not isinstance(link, LinkFunction):
            link = make_link(link, config.m1, config.r)
        self.config = config
        self.link = link
        self.kappa = config.kappa if config.kappa is not None else link.curvature_floor
        disp = config.dispersion if config.dispersion is not None else link.dispersion
        self._alpha_disp = config.alpha * disp
        lam = self._alpha_disp / self.kappa
        if config.kind == "delayed_ofu_glm" and lam < 1.0 - 1e-9:
            raise ValueError(
                f"delayed_ofu_glm requires lam = alpha * a_phi / kappa >= 1, got {lam:.6g}"
            )
        self.design = DesignState(d, lam)
        self.theta_hat = np.zeros(d)
        self.sqrt_beta = beta_width(self.design, config.m1, config.r, self.kappa, config.delta)
        self._obs_x = np.empty((256, d))
        self._obs_y = np.empty(256)
        self._n_obs = 0
        self._bvec = np.zeros(d)  # sum of y * x over arrivals; identity sufficient statistic

    def select_action(self, decision_set, rng) -> int:
        """Pick an index from the decision set and record the action as pending."""
        actions = np.asarray(decision_set, dtype=float)
        if actions.ndim != 2 or actions.shape[0] == 0:
            raise ValueError("decision set must be a nonempty 2-d array")
        if self.config.kind == "random":
            idx = int(rng.integers(actions.shape[0]))
        else:
            sol = np.linalg.solve(self.design.w_bar, actions.T)
            quad = np.einsum("ij,ji->i", actions, sol)
            np.maximum(quad, 0.0, out=quad)
            bonus = self.sqrt_beta * np.sqrt(quad)
            if self.config.kind == "delay_inflated_ucb":
                # pending count before this round's action, stretched bonus
                bonus = bonus * math.sqrt(1.0 + self.design.pending)
            # mu is strictly increasing, so the argmax over linear predictors
            # equals the argmax over indices; ties break to the lowest index
            idx = int(np.argmax(actions @ self.theta_hat + bonus))
        self.design.record_action(actions[idx])
        return idx

    def observe(self, arrivals) -> None:
        """Apply delivered rewards, refit the estimate, refresh the width."""
        if not arrivals:
            return
        for sample in arrivals:
            self.design.record_arrival(sample.action)
            self._append(sample.action, sample.reward)
        self._refit()
        self.sqrt_beta = beta_width(
            self.design, self.config.m1, self.config.r, self.kappa, self.config.delta
        )

    def confidence_set(self) -> ConfidenceSet:
        return ConfidenceSet(self.theta_hat, self.sqrt_beta, self.design.w_bar, self.design.lam)

    def covers(self, theta) -> bool:
        """Whether theta lies in the current ellipsoid (the set the next decision uses)."""
        return membership(self.confidence_set(), theta)

    def _append(self, x, y) -> None:
        if self._n_obs == self._obs_x.shape[0]:
            self._obs_x = np.concatenate([self._obs_x, np.empty_like(self._obs_x)])
            self._obs_y = np.concatenate([self._obs_y, np.empty_like(self._obs_y)])
        self._obs_x[self._n_obs] = x
        self._obs_y[self._n_obs] = y
        self._n_obs += 1
        self._bvec += self._obs_x[self._n_obs - 1] * y

    def _refit(self) -> None:
        if self.link.kind == "identity":
            # ridge closed form; w_bar is the ridge matrix itself when lam = alpha * a_phi
            mat = self.design.w_bar
            if self._alpha_disp != self.design.lam:
                mat = mat + (self._alpha_disp - self.design.lam) * np.eye(self.design.dim)
            self.theta_hat = np.linalg.solve(mat, self._bvec)
        else:
            self.theta_hat = _fit_arrays(
                self._obs_x[: self._n_obs],
                self._obs_y[: self._n_obs],
                self._alpha_disp,
                self.link,
                self.theta_hat,
                1e-8,
                100,
            )
