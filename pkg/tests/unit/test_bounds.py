"""Tests for the guarantees relating decoupled and exact cumulative errors."""

import numpy as np
import pytest

from conftest import consistent_spec, make_spec
from mopul_sdp.exceptions import ProblemError
from mopul_sdp.models.problem import ConstraintSet, EntryBox, MopulProblem, ObjectiveSpec
from mopul_sdp.models.system import ErrorNorm, SystemSpec
from mopul_sdp.services.bounds import (
    contraction_factor,
    default_beta,
    geometric_sum,
    remark3_certificate,
    remark3_level,
    remark5_sandwich,
    theorem2_certificate,
    theorem3_check,
    theorem3_tighten,
    theorem4_bound,
    theorem4_certificate,
    theorem7_certificate,
    theorem56_ratio,
    z_epsilon_member,
)
from mopul_sdp.system import approx_cumulative_error, epsilon_rollout, exact_cumulative_error

SEEDS = range(5)


def _draw(seed: int, n: int = 3, horizon: int = 4):
    rng = np.random.default_rng(seed)
    spec = make_spec(rng, n=n, m=2, horizon=horizon)
    a = rng.standard_normal((n, n))
    a *= rng.uniform(0.3, 1.5) / np.linalg.norm(a, 2)
    u = rng.uniform(-0.5, 0.5, (horizon, 2))
    return spec, a, u


class TestHelpers:
    def test_geometric_sum(self):
        assert geometric_sum(0.0, 4) == 1.0
        assert geometric_sum(1.0, 4) == 4.0
        assert geometric_sum(2.0, 3) == 7.0
        with pytest.raises(ValueError):
            geometric_sum(-0.1, 3)

    def test_tighten(self):
        assert theorem3_tighten(7.0, 2.0, 3) == pytest.approx(1.0)
        with pytest.raises(ValueError):
            theorem3_tighten(-1.0, 2.0, 3)

    def test_theorem4_bound(self):
        assert theorem4_bound([1.0, 2.0, 3.0], 0.5) == pytest.approx(7.5)
        assert theorem4_bound([], 0.5) == 0.0
        with pytest.raises(ValueError):
            theorem4_bound([1.0, -1.0], 0.5)

    def test_contraction_with_identity_output(self):
        spec = SystemSpec(b=np.eye(2), c=np.eye(2), x0=np.zeros(2), references=np.zeros((2, 2)))
        assert contraction_factor(spec, np.diag([0.3, -0.7])) == pytest.approx(0.7)


class TestDefaultBeta:
    def _problem(self, spec, **constraints):
        return MopulProblem(system=spec, objective=ObjectiveSpec(), constraints=ConstraintSet(**constraints))

    def test_unbounded(self, small_spec):
        assert default_beta(self._problem(small_spec)) is None

    def test_box_and_balls(self):
        spec = SystemSpec(b=np.eye(2), c=np.eye(2), x0=np.zeros(2), references=np.zeros((2, 2)))
        assert default_beta(self._problem(spec, a_box=EntryBox.symmetric(0.4, (2, 2)))) == pytest.approx(0.8)
        both = self._problem(spec, a_box=EntryBox.symmetric(0.4, (2, 2)), spectral_ball=0.5)
        assert default_beta(both) == pytest.approx(0.5)
        assert default_beta(self._problem(spec, stochastic_columns=True)) == pytest.approx(np.sqrt(2.0))


class TestTheorem2:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_holds_at_tight_hypotheses(self, seed):
        spec, a, u = _draw(seed)
        beta = contraction_factor(spec, a)
        cert = theorem2_certificate(spec, a, u, beta, approx_cumulative_error(spec, a, u))
        assert cert.valid
        assert cert.holds
        assert cert.observed_value == pytest.approx(exact_cumulative_error(spec, a, u))

    def test_invalid_when_beta_too_small(self):
        spec, a, u = _draw(0)
        cert = theorem2_certificate(spec, a, u, 0.5 * contraction_factor(spec, a), 1e3)
        assert not cert.valid
        assert "exceeds beta" in cert.reason


class TestTheorem3:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_exact_error_within_control_level(self, seed):
        spec, a, u = _draw(seed)
        beta = contraction_factor(spec, a)
        omega_c = approx_cumulative_error(spec, a, u) * geometric_sum(beta, spec.horizon)
        cert = theorem3_check(spec, a, u, omega_c, beta)
        assert cert.valid
        assert cert.holds
        assert cert.inputs["omega_tilde"] == pytest.approx(approx_cumulative_error(spec, a, u))

    def test_level_not_met(self):
        spec, a, u = _draw(1)
        beta = contraction_factor(spec, a)
        cert = theorem3_check(spec, a, u, 1e-3, beta)
        assert not cert.valid
        assert "tightened level" in cert.reason

    def test_without_beta_only_compares(self):
        spec, a, u = _draw(2)
        cert = theorem3_check(spec, a, u, 1e6)
        assert cert.valid and cert.holds
        assert "beta" not in cert.inputs

    def test_theorem7_tags_objective(self):
        spec, a, u = _draw(3)
        beta = contraction_factor(spec, a)
        omega = approx_cumulative_error(spec, a, u) * geometric_sum(beta, spec.horizon)
        cert = theorem7_certificate(spec, omega, beta, a, u, objective=0.25)
        assert cert.theorem == "T7"
        assert cert.inputs["objective_upper"] == 0.25
        assert cert.holds and cert.valid


class TestTheorem4:
    def test_membership(self):
        spec, a, u = _draw(0)
        dist = np.linalg.norm(epsilon_rollout(spec, a, u)[1:] - spec.references, axis=1)
        assert z_epsilon_member(spec, a, u, dist)
        assert not z_epsilon_member(spec, a, u, 0.5 * dist)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_witness_error_below_bound(self, seed):
        spec, a, u = _draw(seed)
        eps = np.linalg.norm(epsilon_rollout(spec, a, u)[1:] - spec.references, axis=1)
        cert = theorem4_certificate(spec, a, u, approx_cumulative_error(spec, a, u), eps)
        assert cert.valid
        assert cert.per_solution
        assert cert.holds

    def test_zero_noise_gives_zero_bound(self, rng):
        a = np.array([[0.3, 0.1], [0.0, 0.2]])
        u = rng.uniform(-0.5, 0.5, (3, 2))
        spec = consistent_spec(a, u, np.array([0.2, -0.1]))
        cert = theorem4_certificate(spec, a, u, 0.0, np.zeros(3))
        assert cert.valid
        assert cert.bound_value == 0.0
        assert cert.holds


class TestOptimumComparison:
    @pytest.mark.parametrize("seed", SEEDS)
    def test_upper_and_lower(self, seed):
        spec, a, u = _draw(seed)
        v_a1 = approx_cumulative_error(spec, a, u)
        v_m1 = exact_cumulative_error(spec, a, u)
        upper, lower = theorem56_ratio(spec, a, u, v_a1, exact_m1_value=v_m1, m1_point=(a, u))
        assert upper.theorem == "T6" and upper.holds
        assert lower.theorem == "T5" and lower.holds

    def test_lower_needs_minimizer(self):
        spec, a, u = _draw(0)
        _, lower = theorem56_ratio(spec, a, u, 1.0, exact_m1_value=1.0)
        assert not lower.valid
        assert np.isnan(lower.bound_value)

    @pytest.mark.parametrize("seed", SEEDS)
    def test_sandwich(self, seed):
        spec, a, u = _draw(seed)
        v_a1 = approx_cumulative_error(spec, a, u)
        v_m1 = exact_cumulative_error(spec, a, u)
        cert = remark5_sandwich(spec, a, v_a1, v_m1, (a, u))
        assert cert.valid and cert.holds
        assert cert.inputs["lower"] <= cert.observed_value * (1 + 1e-9)

    def test_sandwich_zero_exact_optimum(self):
        spec, a, u = _draw(0)
        cert = remark5_sandwich(spec, a, 0.0, 0.0, (a, u))
        assert not cert.valid


class TestWeightedLevel:
    def test_identity_weight_matches_euclidean_tightening(self):
        assert remark3_level(5.0, 0.7, 4, np.eye(3)) == pytest.approx(theorem3_tighten(5.0, 0.7, 4))

    def test_ratio_power_grows_with_stage(self):
        # eta1 = 1/2, eta2 = 1: denominator (2 * 0.5)^2 + 2 + 2^2 * 0.5 = 5
        level = remark3_level(10.0, 0.5, 3, np.diag([4.0, 1.0]))
        assert level == pytest.approx(2.0)
        assert level != pytest.approx(theorem3_tighten(10.0, 0.5, 3) / 2.0)

    def test_single_stage(self):
        assert remark3_level(2.0, 3.0, 1, np.diag([4.0, 1.0])) == pytest.approx(2.0)

    def test_rejects_indefinite_weight(self):
        with pytest.raises(ProblemError, match="positive definite"):
            remark3_level(1.0, 0.5, 3, np.diag([1.0, -1.0]))

    @pytest.mark.parametrize("seed", SEEDS)
    def test_weighted_exact_error_within_level(self, seed):
        spec, a, u = _draw(seed)
        q = np.diag([4.0, 1.0, 2.0])
        beta = contraction_factor(spec, a)
        weighted = approx_cumulative_error(spec, a, u, ErrorNorm(kind="q_norm", q=q))
        unit_level = remark3_level(1.0, beta, spec.horizon, q)
        cert = remark3_certificate(spec, a, u, weighted / unit_level, beta, q)
        assert cert.valid
        assert cert.holds
