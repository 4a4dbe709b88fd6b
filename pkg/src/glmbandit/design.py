"""Design-matrix bookkeeping under delayed reward arrivals.

Three regularized Gram matrices are tracked over the chosen actions: v_bar
sums every action played, w_bar only the actions whose reward has arrived,
and z = v_bar - w_bar covers the in-flight remainder, together with the
pending count. All three stay aligned through arbitrary interleavings of
record_action / record_arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = ["DesignState", "weighted_norm", "inverse_identity_residual"]


@dataclass
class DesignState:
    """Mutable per-run design bookkeeping; single-owner, not thread-shared."""

    dim: int
    lam: float
    v_bar: np.ndarray = field(init=False, repr=False)
    w_bar: np.ndarray = field(init=False, repr=False)
    z: np.ndarray = field(init=False, repr=False)
    pending: int = field(init=False, default=0)
    t: int = field(init=False, default=0)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        self.v_bar = self.lam * np.eye(self.dim)
        self.w_bar = self.lam * np.eye(self.dim)
        self.z = np.zeros((self.dim, self.dim))

    def record_action(self, x) -> None:
        """Add an action to the total and missing matrices; its reward is pending."""
        x = np.asarray(x, dtype=float)
        if np.linalg.norm(x) > 1.0 + 1e-9:
            raise ValueError("action norm exceeds 1")
        outer = np.outer(x, x)
        self.v_bar += outer
        self.z += outer
        self.pending += 1
        self.t += 1

    def record_arrival(self, x) -> None:
        """Move a previously recorded action from missing to observed."""
        if self.pending < 1:
            raise ValueError("arrival without a matching pending action")
        x = np.asarray(x, dtype=float)
        outer = np.outer(x, x)
        self.w_bar += outer
        self.z -= outer
        self.pending -= 1

    def additivity_residual(self) -> float:
        """Frobenius norm of v_bar - (w_bar + z); zero in exact arithmetic."""
        return float(np.linalg.norm(self.v_bar - (self.w_bar + self.z)))

    def copy(self) -> "DesignState":
        dup = DesignState(self.dim, self.lam)
        dup.v_bar = self.v_bar.copy()
        dup.w_bar = self.w_bar.copy()
        dup.z = self.z.copy()
        dup.pending = self.pending
        dup.t = self.t
        return dup


def weighted_norm(m, x) -> float:
    """||x||_M = sqrt(x^T M x) for symmetric PSD M; tiny negatives clamp to 0."""
    x = np.asarray(x, dtype=float)
    q = float(x @ np.asarray(m, dtype=float) @ x)
    if q < -1e-8:
        raise ValueError(f"quadratic form {q:.3e} is significantly negative; matrix is not PSD")
    return math.sqrt(max(q, 0.0))


def inverse_identity_residual(state: DesignState) -> float:
    """Frobenius residual of w_bar^-1 = v_bar^-1 + v_bar^-1 z w_bar^-1."""
    w_inv = np.linalg.inv(state.w_bar)
    v_inv = np.linalg.inv(state.v_bar)
    return float(np.linalg.norm(w_inv - (v_inv + v_inv @ state.z @ w_inv)))
