"""Ellipsoid width, membership, and the closed-form optimistic index."""

import math

import numpy as np
import pytest

from glmbandit.confidence import ConfidenceSet, beta_width, membership, optimistic_index
from glmbandit.design import DesignState, weighted_norm
from glmbandit.glm import link_eval


def ball_point(rng, d):
    x = rng.standard_normal(d)
    return x * (rng.random() ** (1.0 / d) / np.linalg.norm(x))


def sample_ellipsoid(cs, n, rng):
    """n points uniform-ish in {theta : ||theta - center||_shape <= sqrt_beta}."""
    d = cs.theta_hat.shape[0]
    vals, vecs = np.linalg.eigh(cs.shape)
    half_inv = vecs @ np.diag(vals**-0.5) @ vecs.T
    gauss = rng.standard_normal((n, d))
    gauss /= np.linalg.norm(gauss, axis=1, keepdims=True)
    radii = rng.random(n) ** (1.0 / d)
    return cs.theta_hat + cs.sqrt_beta * (gauss * radii[:, None]) @ half_inv.T


class TestBetaWidth:
    def test_fresh_state_value(self):
        # determinant ratio is 1/delta^2 at t=0, independent of d
        expected = 1.0 + math.sqrt(2.0 * math.log(20.0))
        for d in (1, 2, 4):
            bw = beta_width(DesignState(d, 1.0), m1=1.0, r=1.0, kappa=1.0, delta=0.05)
            assert bw == pytest.approx(expected, abs=1e-12)
            assert bw == pytest.approx(3.4477468306808166, abs=1e-12)

    def test_delta_one_collapses_to_prior_term(self):
        assert beta_width(DesignState(3, 1.0), 1.0, 1.0, 1.0, 1.0) == 1.0

    def test_anisotropic_example(self):
        state = DesignState(2, 1.0)
        state.w_bar[:] = np.diag([4.0, 1.0])
        expected = 1.0 + math.sqrt(2.0 * (0.5 * math.log(4.0) + math.log(20.0)))
        bw = beta_width(state, 1.0, 1.0, 1.0, 0.05)
        assert bw == pytest.approx(expected, abs=1e-12)
        assert bw == pytest.approx(3.716203031481239, abs=1e-12)

    def test_scales_with_lambda_floor(self):
        for lam in (1.0, 2.5, 7.0):
            bw = beta_width(DesignState(3, lam), m1=0.8, r=1.0, kappa=1.0, delta=1.0)
            assert bw == pytest.approx(math.sqrt(lam) * 0.8, rel=1e-12)

    def test_validation(self):
        state = DesignState(2, 1.0)
        for bad_delta in (0.0, -0.1, 1.5):
            with pytest.raises(ValueError):
                beta_width(state, 1.0, 1.0, 1.0, bad_delta)
        with pytest.raises(ValueError):
            beta_width(state, -1.0, 1.0, 1.0, 0.05)
        with pytest.raises(ValueError):
            beta_width(state, 1.0, 0.0, 1.0, 0.05)
        with pytest.raises(ValueError):
            beta_width(state, 1.0, 1.0, -2.0, 0.05)

    def test_rejects_non_pd_matrix(self):
        state = DesignState(2, 1.0)
        state.w_bar[:] = 0.0
        with pytest.raises(np.linalg.LinAlgError):
            beta_width(state, 1.0, 1.0, 1.0, 0.05)

    def test_nondecreasing_along_trajectory(self):
        rng = np.random.default_rng(1)
        state = DesignState(3, 1.0)
        prev = beta_width(state, 1.0, 1.0, 1.0, 0.05)
        for _ in range(60):
            x = ball_point(rng, 3)
            state.record_action(x)
            if rng.random() < 0.7:
                state.record_arrival(x)
            cur = beta_width(state, 1.0, 1.0, 1.0, 0.05)
            assert cur >= prev - 1e-12
            prev = cur

    def test_at_least_prior_term(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            lam = float(rng.uniform(0.5, 4.0))
            m1 = float(rng.uniform(0.2, 2.0))
            state = DesignState(2, lam)
            for _ in range(10):
                x = ball_point(rng, 2)
                state.record_action(x)
                state.record_arrival(x)
            assert beta_width(state, m1, 1.0, 1.0, 0.3) >= math.sqrt(lam) * m1


class TestMembership:
    def test_center_inside(self):
        cs = ConfidenceSet(np.array([0.3, -0.2]), 1.0, np.eye(2), 1.0)
        assert membership(cs, cs.theta_hat)

    def test_zero_radius_excludes_everything_else(self):
        cs = ConfidenceSet(np.zeros(2), 0.0, np.eye(2), 1.0)
        assert membership(cs, np.zeros(2))
        assert not membership(cs, np.array([1e-3, 0.0]))

    def test_boundary_point_within_slack(self):
        rng = np.random.default_rng(3)
        state = DesignState(3, 1.0)
        for _ in range(15):
            x = ball_point(rng, 3)
            state.record_action(x)
            state.record_arrival(x)
        cs = ConfidenceSet(rng.standard_normal(3), 1.7, state.w_bar, 1.0)
        v = rng.standard_normal(3)
        boundary = cs.theta_hat + cs.sqrt_beta * v / weighted_norm(cs.shape, v)
        assert membership(cs, boundary)
        assert not membership(cs, cs.theta_hat + 1.001 * (boundary - cs.theta_hat))


class TestOptimisticIndex:
    def test_unit_ball_example(self):
        cs = ConfidenceSet(np.zeros(2), 1.0, np.eye(2), 1.0)
        assert optimistic_index(cs, np.array([1.0, 0.0]), "identity") == 1.0

    def test_monotone_in_radius(self):
        rng = np.random.default_rng(4)
        x = ball_point(rng, 3)
        center = rng.standard_normal(3) * 0.2
        shape = np.eye(3) * 1.5
        small = optimistic_index(ConfidenceSet(center, 0.1, shape, 1.0), x, "logistic")
        big = optimistic_index(ConfidenceSet(center, 0.4, shape, 1.0), x, "logistic")
        assert big > small

    def test_matches_ellipsoid_sampling(self):
        rng = np.random.default_rng(5)
        for kind in ("identity", "logistic"):
            state = DesignState(3, 1.0)
            for _ in range(12):
                xa = ball_point(rng, 3)
                state.record_action(xa)
                state.record_arrival(xa)
            cs = ConfidenceSet(rng.standard_normal(3) * 0.3, 0.05, state.w_bar, 1.0)
            x = ball_point(rng, 3)
            idx = optimistic_index(cs, x, kind)
            thetas = sample_ellipsoid(cs, 4 * 10**5, rng)
            sampled = float(np.max(link_eval(kind, thetas @ x)))
            assert sampled <= idx + 1e-9
            assert idx - sampled < 1e-3

    def test_argmax_equivalence_with_joint_sampling(self):
        rng = np.random.default_rng(6)
        agree = 0
        trials = 100
        for _ in range(trials):
            state = DesignState(3, 1.0)
            for _ in range(10):
                xa = ball_point(rng, 3)
                state.record_action(xa)
                state.record_arrival(xa)
            cs = ConfidenceSet(rng.standard_normal(3) * 0.4, 0.02, state.w_bar, 1.0)
            actions = np.array([ball_point(rng, 3) for _ in range(8)])
            indices = np.array(
                [optimistic_index(cs, x, "logistic") for x in actions]
            )
            thetas = sample_ellipsoid(cs, 10**5, rng)
            joint = link_eval("logistic", actions @ thetas.T).max(axis=1)
            if int(np.argmax(indices)) == int(np.argmax(joint)):
                agree += 1
            else:
                top = np.sort(indices)[-2:]
                assert top[1] - top[0] < 1e-3  # disagreement only at near-ties
        assert agree >= 0.99 * trials
