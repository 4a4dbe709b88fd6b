"""Numerical checks of the inequalities the algorithm's guarantees rest on.

Each check fuzzes instances generated by short real simulations (unit-ball
actions, genuine delayed arrivals, consistent bookkeeping) rather than
arbitrary matrices, so every precondition holds by construction. Deterministic
matrix identities are held to a 1e-8 worst violation; statistical checks get a
3-standard-error allowance and report the overshoot beyond it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignState, inverse_identity_residual, weighted_norm
from .env import DelayModel, DeliveryQueue, generate_decision_set, sample_delay, sample_delays

__all__ = [
    "LemmaReport",
    "check_inverse_identity",
    "check_product_potential",
    "check_shared_eigenvalues",
    "check_missing_matrix_bound",
    "check_product_matrix_bound",
    "check_elliptical_potential",
    "check_trace_determinant",
    "check_pending_bound",
    "check_delay_tail",
    "check_supermartingale",
    "run_all",
]

DETERMINISTIC_TOL = 1e-8


@dataclass(frozen=True)
class LemmaReport:
    """Worst signed slack of one inequality over the fuzzed instances."""

    check_id: str
    instances: int
    max_violation: float
    tolerance: float
    passed: bool


def _report(check_id: str, instances: int, max_violation: float, tolerance: float) -> LemmaReport:
    return LemmaReport(check_id, instances, max_violation, tolerance, max_violation <= tolerance)


def _fuzz_delay_model(rng) -> DelayModel:
    kind = ("zero", "constant", "exponential", "uniform", "pareto")[int(rng.integers(5))]
    if kind == "zero":
        return DelayModel("zero")
    return DelayModel(kind, float(rng.uniform(0.5, 8.0)))


@dataclass
class _Replay:
    """History of one short run: matrices and pending counts indexed by round."""

    d: int
    lam: float
    horizon: int
    x: np.ndarray  # (T+1, d); x[t] is round t's action, x[0] unused
    tau: np.ndarray  # (T+1,)
    v: np.ndarray  # (T+1, d, d); end-of-round matrices, index 0 = initial state
    w: np.ndarray
    z: np.ndarray
    g: np.ndarray  # (T+1,) pending counts


def _replay(rng, lam: float, t_min: int = 20, t_max: int = 160, d_max: int = 8) -> _Replay:
    d = int(rng.integers(1, d_max + 1))
    horizon = int(rng.integers(t_min, t_max + 1))
    model = _fuzz_delay_model(rng)
    state = DesignState(d, lam)
    queue = DeliveryQueue()
    x = np.zeros((horizon + 1, d))
    tau = np.zeros(horizon + 1)
    v = np.zeros((horizon + 1, d, d))
    w = np.zeros((horizon + 1, d, d))
    z = np.zeros((horizon + 1, d, d))
    g = np.zeros(horizon + 1, dtype=np.int64)
    v[0] = state.v_bar
    w[0] = state.w_bar
    for t in range(1, horizon + 1):
        action = generate_decision_set(d, 1, rng)[0]
        state.record_action(action)
        delay = sample_delay(model, rng)
        queue.schedule(t, action, 0.0, delay)
        for (_, arrived, _) in queue.pop_due(t):
            state.record_arrival(arrived)
        x[t] = action
        tau[t] = delay
        v[t] = state.v_bar
        w[t] = state.w_bar
        z[t] = state.z
        g[t] = state.pending
    return _Replay(d, lam, horizon, x, tau, v, w, z, g)


def _snapshots(rng, n_instances: int, lam_low: float, lam_high: float, per_run: int = 8):
    """Yield (replay, round) pairs sampled across fresh short runs."""
    produced = 0
    while produced < n_instances:
        lam = float(rng.uniform(lam_low, lam_high))
        rep = _replay(rng, lam)
        take = min(per_run, n_instances - produced)
        rounds = rng.choice(rep.horizon, size=min(take, rep.horizon), replace=False) + 1
        for t in np.sort(rounds):
            yield rep, int(t)
            produced += 1


def check_inverse_identity(n_instances: int, rng) -> LemmaReport:
    """w_bar^-1 = v_bar^-1 + v_bar^-1 z w_bar^-1 at fuzzed snapshots."""
    worst = 0.0
    count = 0
    for rep, t in _snapshots(rng, n_instances, 0.5, 4.0):
        snap = DesignState(rep.d, rep.lam)
        snap.v_bar = rep.v[t]
        snap.w_bar = rep.w[t]
        snap.z = rep.z[t]
        snap.pending = int(rep.g[t])
        snap.t = t
        worst = max(worst, inverse_identity_residual(snap))
        count += 1
    return _report("inverse_identity", count, worst, DETERMINISTIC_TOL)


def check_product_potential(n_instances: int, rng) -> LemmaReport:
    """sum_t ||x_t||_{M_{t-1}} <= sum_t (1 + G_max + tau_t)/2 * ||x_t||^2_{v_bar_{t-1}^-1}.

    M_{t-1} = w_bar_{t-1}^-1 - v_bar_{t-1}^-1; requires lam >= 1.
    """
    worst = -np.inf
    for _ in range(n_instances):
        lam = float(rng.uniform(1.0, 3.0))
        rep = _replay(rng, lam, t_max=120)
        g_max = float(rep.g.max())
        lhs = 0.0
        rhs = 0.0
        for t in range(1, rep.horizon + 1):
            v_inv = np.linalg.inv(rep.v[t - 1])
            w_inv = np.linalg.inv(rep.w[t - 1])
            xt = rep.x[t]
            lhs += weighted_norm(w_inv - v_inv, xt)
            rhs += 0.5 * (1.0 + g_max + rep.tau[t]) * float(xt @ v_inv @ xt)
        worst = max(worst, lhs - rhs)
    return _report("product_potential", n_instances, worst, DETERMINISTIC_TOL)


def check_shared_eigenvalues(n_instances: int, rng) -> LemmaReport:
    """eig(A B) matches eig(A^{1/2} B A^{1/2}) and is nonnegative, for A = v_bar^-1, B = z."""
    worst = 0.0
    count = 0
    for rep, t in _snapshots(rng, n_instances, 0.5, 4.0):
        a = np.linalg.inv(rep.v[t])
        b = rep.z[t]
        eig_prod = np.linalg.eigvals(a @ b)
        evals, evecs = np.linalg.eigh(a)
        a_half = (evecs * np.sqrt(evals)) @ evecs.T
        eig_sym = np.linalg.eigvalsh(a_half @ b @ a_half)
        worst = max(
            worst,
            float(np.max(np.abs(np.sort(eig_prod.real) - np.sort(eig_sym)))),
            float(np.max(np.abs(eig_prod.imag))),
            float(max(0.0, -np.min(eig_sym))),
        )
        count += 1
    return _report("shared_eigenvalues", count, worst, DETERMINISTIC_TOL)


def check_missing_matrix_bound(n_instances: int, rng) -> LemmaReport:
    """Largest eigenvalue of the missing matrix never exceeds the pending count."""
    worst = -np.inf
    count = 0
    for rep, t in _snapshots(rng, n_instances, 0.5, 4.0):
        top = float(np.linalg.eigvalsh(rep.z[t])[-1])
        worst = max(worst, top - float(rep.g[t]))
        count += 1
    return _report("missing_matrix_bound", count, worst, DETERMINISTIC_TOL)


def check_product_matrix_bound(n_instances: int, rng) -> LemmaReport:
    """(G/lam) v_bar^-1 dominates M = w_bar^-1 - v_bar^-1 in the PSD order."""
    worst = -np.inf
    count = 0
    for rep, t in _snapshots(rng, n_instances, 0.5, 4.0):
        v_inv = np.linalg.inv(rep.v[t])
        w_inv = np.linalg.inv(rep.w[t])
        diff = (float(rep.g[t]) / rep.lam) * v_inv - (w_inv - v_inv)
        worst = max(worst, -float(np.linalg.eigvalsh(diff)[0]))
        count += 1
    return _report("product_matrix_bound", count, worst, DETERMINISTIC_TOL)


def check_elliptical_potential(n_instances: int, rng) -> LemmaReport:
    """sum_t ||x_t||^2_{v_bar_{t-1}^-1} <= 2 d log((d lam + T)/(d lam)) for lam >= 1/2."""
    worst = -np.inf
    for _ in range(n_instances):
        lam = float(rng.uniform(0.5, 3.0))
        rep = _replay(rng, lam)
        total = 0.0
        for t in range(1, rep.horizon + 1):
            xt = rep.x[t]
            total += float(xt @ np.linalg.solve(rep.v[t - 1], xt))
        bound = 2.0 * rep.d * np.log((rep.d * lam + rep.horizon) / (rep.d * lam))
        worst = max(worst, total - bound)
    return _report("elliptical_potential", n_instances, worst, DETERMINISTIC_TOL)


def check_trace_determinant(n_instances: int, rng) -> LemmaReport:
    """2 log(det v_bar_T / det v_bar_0) <= 2 d log((d lam + T)/(d lam)) for lam >= 1/2."""
    worst = -np.inf
    for _ in range(n_instances):
        lam = float(rng.uniform(0.5, 3.0))
        rep = _replay(rng, lam)
        _, logdet_end = np.linalg.slogdet(rep.v[rep.horizon])
        _, logdet_start = np.linalg.slogdet(rep.v[0])
        lhs = 2.0 * (logdet_end - logdet_start)
        bound = 2.0 * rep.d * np.log((rep.d * lam + rep.horizon) / (rep.d * lam))
        worst = max(worst, lhs - bound)
    return _report("trace_determinant", n_instances, worst, DETERMINISTIC_TOL)


def _pending_counts(model: DelayModel, horizon: int, rng) -> np.ndarray:
    """End-of-round pending counts G_1..G_T for one run of pure delay draws."""
    s = np.arange(1, horizon + 1)
    arrival = np.ceil(s + sample_delays(model, horizon, rng)).astype(np.int64)
    delivered = np.bincount(np.minimum(arrival, horizon + 1), minlength=horizon + 2)
    return s - np.cumsum(delivered)[1 : horizon + 1]


def check_pending_bound(n_runs: int, delay_model: DelayModel, rng) -> LemmaReport:
    """Time-averaged pending count stays within 1 + E[tau] (3-SE allowance)."""
    horizon = 2000
    means = np.array([_pending_counts(delay_model, horizon, rng).mean() for _ in range(n_runs)])
    grand = float(means.mean())
    se = float(means.std(ddof=1) / np.sqrt(n_runs)) if n_runs > 1 else 0.0
    bound = 1.0 + delay_model.analytic_mean()
    return _report(f"pending_bound({delay_model.kind})", n_runs, grand - (bound + 3.0 * se), 0.0)


def check_delay_tail(n_draws: int, delay_model: DelayModel, rng) -> LemmaReport:
    """P(tau > E[tau] + k E[tau]) <= e^{-k} for k = 1..5 (3-SE allowance).

    The bound is the subexponential tail the exponential model satisfies;
    heavy-tailed models (pareto) genuinely violate it and will FAIL here.
    """
    draws = sample_delays(delay_model, n_draws, rng)
    mean = delay_model.analytic_mean()
    worst = -np.inf
    for k in range(1, 6):
        p_hat = float(np.mean(draws > mean + k * mean))
        se = np.sqrt(max(p_hat * (1.0 - p_hat), 1e-12) / n_draws)
        worst = max(worst, p_hat - (np.exp(-k) + 3.0 * se))
    return _report(f"delay_tail({delay_model.kind})", n_draws, worst, 0.0)


def check_supermartingale(n_paths: int, x=None, rng=None) -> LemmaReport:
    """Monte Carlo mean of the self-normalized exponential process stays <= 1.

    M_t(x) = exp( sum over arrived s of <x, X_s> eta_s / R - <x, X_s>^2 / 2 )
    under ball actions, clamped-Gaussian noise (R = 1), and exponential delays;
    evaluated at t in {10, 100, 1000} with a 3-SE allowance.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    checkpoints = (10, 100, 1000)
    horizon = max(checkpoints)
    x = np.array([1.0, 0.0, 0.0]) if x is None else np.asarray(x, dtype=float)
    d = x.shape[0]
    model = DelayModel("exponential", 5.0)
    r = 1.0
    values = np.zeros((n_paths, len(checkpoints)))
    s = np.arange(1, horizon + 1)
    for p in range(n_paths):
        actions = generate_decision_set(d, horizon, rng)
        eta = np.clip(rng.normal(0.0, r / 3.0, horizon), -r, r)
        arrival = np.ceil(s + sample_delays(model, horizon, rng))
        u = actions @ x
        terms = u * eta / r - 0.5 * u * u
        for j, t in enumerate(checkpoints):
            values[p, j] = np.exp(terms[arrival <= t].sum())
    worst = -np.inf
    for j in range(len(checkpoints)):
        mean = float(values[:, j].mean())
        se = float(values[:, j].std(ddof=1) / np.sqrt(n_paths))
        worst = max(worst, mean - (1.0 + 3.0 * se))
    return _report("supermartingale", n_paths, worst, 0.0)


def run_all(instances: int = 1000, seed: int = 0) -> list[LemmaReport]:
    """The default suite: deterministic identities first, then statistical checks."""
    if instances < 1:
        raise ValueError("instances must be >= 1")
    streams = np.random.SeedSequence(seed).spawn(12)
    rngs = [np.random.default_rng(s) for s in streams]
    stat_runs = max(40, instances // 5)
    tail_draws = max(20_000, instances * 100)
    paths = max(100, (2 * instances) // 5)
    return [
        check_inverse_identity(instances, rngs[0]),
        check_product_potential(instances, rngs[1]),
        check_shared_eigenvalues(instances, rngs[2]),
        check_missing_matrix_bound(instances, rngs[3]),
        check_product_matrix_bound(instances, rngs[4]),
        check_elliptical_potential(instances, rngs[5]),
        check_trace_determinant(instances, rngs[6]),
        check_pending_bound(stat_runs, DelayModel("exponential", 5.0), rngs[7]),
        check_pending_bound(stat_runs, DelayModel("uniform", 5.0), rngs[8]),
        check_pending_bound(stat_runs, DelayModel("pareto", 5.0), rngs[9]),
        check_delay_tail(tail_draws, DelayModel("exponential", 7.0), rngs[10]),
        check_supermartingale(paths, None, rngs[11]),
    ]
