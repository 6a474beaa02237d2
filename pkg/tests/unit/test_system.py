"""Tests for rollouts, cumulative errors and the system data model."""

import numpy as np
import pytest

from conftest import consistent_spec, make_spec
from mopul_sdp.models.system import ErrorNorm, SystemSpec
from mopul_sdp.system import (
    approx_cumulative_error,
    cumulative_error,
    epsilon_rollout,
    exact_cumulative_error,
    poly_error,
    rollout_approx,
    rollout_exact,
    stage_errors,
)


class TestSystemSpec:
    def test_dimensions(self, small_spec):
        assert (small_spec.n, small_spec.m, small_spec.p, small_spec.horizon) == (2, 2, 2, 3)

    def test_r0_is_c_x0(self, small_spec):
        np.testing.assert_allclose(small_spec.r0, small_spec.c @ small_spec.x0)
        np.testing.assert_allclose(small_spec.reference(0), small_spec.r0)
        assert small_spec.all_references().shape == (4, 2)

    def test_rank_deficient_c_rejected(self):
        with pytest.raises(ValueError, match="full column rank"):
            SystemSpec(
                b=np.eye(2),
                c=np.array([[1.0, 1.0], [2.0, 2.0]]),
                x0=np.zeros(2),
                references=np.zeros((1, 2)),
            )

    def test_reference_width_checked(self):
        with pytest.raises(ValueError, match="reference dimension"):
            SystemSpec(b=np.eye(2), c=np.eye(2), x0=np.zeros(2), references=np.zeros((2, 3)))

    def test_empty_horizon_rejected(self):
        with pytest.raises(ValueError, match="horizon"):
            SystemSpec(b=np.eye(2), c=np.eye(2), x0=np.zeros(2), references=np.zeros((0, 2)))

    def test_arrays_are_read_only(self, small_spec):
        with pytest.raises(ValueError):
            small_spec.b[0, 0] = 1.0

    def test_decision_shape_checked(self, small_spec):
        with pytest.raises(ValueError, match="A"):
            small_spec.check_decision(np.eye(3), np.zeros((3, 2)))
        with pytest.raises(ValueError, match="U"):
            small_spec.check_decision(np.eye(2), np.zeros((2, 2)))

    def test_reference_index_range(self, small_spec):
        with pytest.raises(IndexError):
            small_spec.reference(4)


class TestRollouts:
    def test_exact_rollout_recursion(self, small_spec, rng):
        a = rng.standard_normal((2, 2))
        u = rng.standard_normal((3, 2))
        traj = rollout_exact(small_spec, a, u)
        for t in range(1, 4):
            np.testing.assert_allclose(traj.states[t], a @ traj.states[t - 1] + small_spec.b @ u[t - 1])
        np.testing.assert_allclose(traj.outputs, traj.states @ small_spec.c.T)

    def test_approx_rollout_uses_references(self, small_spec, rng):
        a = rng.standard_normal((2, 2))
        u = rng.standard_normal((3, 2))
        traj = rollout_approx(small_spec, a, u)
        refs = small_spec.all_references()
        for t in range(1, 4):
            expected = a @ small_spec.c_pinv @ refs[t - 1] + small_spec.b @ u[t - 1]
            np.testing.assert_allclose(traj.states[t], expected)

    def test_rollouts_agree_on_consistent_references(self, rng):
        a = 0.3 * rng.standard_normal((3, 3))
        u = rng.standard_normal((4, 3))
        spec = consistent_spec(a, u, rng.standard_normal(3))
        assert exact_cumulative_error(spec, a, u) == pytest.approx(0.0, abs=1e-12)
        assert approx_cumulative_error(spec, a, u) == pytest.approx(0.0, abs=1e-12)

    def test_horizon_one_rollouts_coincide(self, rng):
        spec = make_spec(rng, horizon=1)
        a = rng.standard_normal((2, 2))
        u = rng.standard_normal((1, 2))
        assert exact_cumulative_error(spec, a, u) == pytest.approx(approx_cumulative_error(spec, a, u))

    def test_cumulative_error_sums_stage_errors(self, small_spec, rng):
        a = rng.standard_normal((2, 2))
        u = rng.standard_normal((3, 2))
        traj = rollout_exact(small_spec, a, u)
        errs = stage_errors(traj, small_spec)
        assert errs.shape == (3,)
        assert cumulative_error(traj, small_spec) == pytest.approx(errs.sum())

    def test_q_norm_errors(self, small_spec, rng):
        a = rng.standard_normal((2, 2))
        u = rng.standard_normal((3, 2))
        q = np.diag([4.0, 1.0])
        traj = rollout_exact(small_spec, a, u)
        res = traj.outputs[1:] - small_spec.references
        expected = np.sum(np.sqrt(np.einsum("ti,ij,tj->t", res, q, res)))
        assert cumulative_error(traj, small_spec, ErrorNorm(kind="q_norm", q=q)) == pytest.approx(expected)

    def test_epsilon_rollout_matches_exact_outputs_for_square_c(self, small_spec, rng):
        a = rng.standard_normal((2, 2))
        u = rng.standard_normal((3, 2))
        np.testing.assert_allclose(
            epsilon_rollout(small_spec, a, u), rollout_exact(small_spec, a, u).outputs, atol=1e-10
        )


class TestPolyError:
    @pytest.mark.parametrize("t", [1, 2, 3])
    def test_matches_rollout(self, small_spec, rng, t):
        a = rng.standard_normal((2, 2))
        u = rng.standard_normal((3, 2))
        traj = rollout_exact(small_spec, a, u)
        direct = np.sum((traj.outputs[t] - small_spec.reference(t)) ** 2)
        assert poly_error(small_spec, a, u, t) == pytest.approx(direct, rel=1e-10)

    def test_stage_out_of_range(self, small_spec):
        with pytest.raises(IndexError):
            poly_error(small_spec, np.eye(2), np.zeros((3, 2)), 0)


class TestErrorNorm:
    def test_q_required(self):
        with pytest.raises(ValueError, match="requires a weight"):
            ErrorNorm(kind="q_norm")

    def test_q_must_be_positive_definite(self):
        with pytest.raises(ValueError, match="not positive definite"):
            ErrorNorm(kind="q_norm", q=np.diag([1.0, 0.0]))

    def test_euclidean_has_no_factor(self):
        assert ErrorNorm().factor is None
        assert ErrorNorm().measure(np.array([3.0, 4.0])) == pytest.approx(5.0)
