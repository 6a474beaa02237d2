"""Tests for conic program assembly and the map back to (A, U, omega)."""

import numpy as np
import pytest

from conftest import make_spec
from mopul_sdp.exceptions import DimensionError
from mopul_sdp.models.conic import PsdCone, SecondOrderCone
from mopul_sdp.models.experiment import NoiseSpec
from mopul_sdp.models.problem import ConstraintSet, ControlBall, EntryBox, MopulProblem, ObjectiveSpec, OmegaMode
from mopul_sdp.services.builder import build_amopul, extract_solution, lift_point, program_residuals
from mopul_sdp.services.cones import block_margin
from mopul_sdp.services.experiments import gen_ideal, perturb_refs
from mopul_sdp.services.presets import preset_amopul1_box, preset_amopul2
from mopul_sdp.services.solver import solve
from mopul_sdp.system import approx_cumulative_error, rollout_approx, stage_errors

STOCHASTIC_A = np.array([[0.7, 0.4], [0.3, 0.6]])


def _problem(spec, **constraints) -> MopulProblem:
    return MopulProblem(system=spec, objective=ObjectiveSpec(), constraints=ConstraintSet(**constraints))


@pytest.fixture
def boxed(small_spec) -> MopulProblem:
    return _problem(
        small_spec,
        a_box=EntryBox.symmetric(1.0, (2, 2)),
        u_box=EntryBox.symmetric(1.0, (1, 2)),
    )


class TestLayout:
    def test_variable_order(self, boxed):
        names = build_amopul(boxed).var_names
        assert list(names) == ["A", "U", "omega", "xi"]
        assert names["A"].start == 0
        assert names["U"].start == 4
        assert names["omega"].start == 10
        assert names["xi"].shape == (3,)

    def test_soc_form_blocks(self, boxed):
        program = build_amopul(boxed, form="soc")
        assert program.count_blocks("second_order") == 3
        assert program.count_blocks("psd") == 0
        assert all(b.dim == 3 for b in program.cone_blocks if b.kind == "second_order")
        assert [b.kind for b in program.cone_blocks][:1] == ["nonneg"]

    def test_lmi_form_blocks(self, boxed):
        program = build_amopul(boxed, form="lmi")
        assert program.count_blocks("psd") == 3
        assert program.count_blocks("second_order") == 0
        assert all(b.side == 3 for b in program.cone_blocks if b.kind == "psd")

    def test_unknown_form(self, boxed):
        with pytest.raises(ValueError, match="unknown form"):
            build_amopul(boxed, form="qp")

    def test_auxiliaries_allocated(self, small_spec):
        problem = MopulProblem(
            system=small_spec,
            objective=ObjectiveSpec(lambda1=1.0, f1="frobenius_dist", a_ref=np.eye(2), lambda2=0.5, f2="control_effort"),
            constraints=ConstraintSet(nuclear_ball=1.5),
        )
        names = build_amopul(problem).var_names
        assert names["frobenius"].size == 1
        assert names["effort"].size == 2
        assert names["W1"].size == names["W2"].size == 3
        assert build_amopul(problem).count_blocks("psd") == 1


class TestPinnedRows:
    def test_pinned_box_entry_is_equality(self, small_spec):
        lower = -np.ones((2, 2))
        upper = np.ones((2, 2))
        lower[0, 1] = upper[0, 1] = 0.25
        program = build_amopul(_problem(small_spec, a_box=EntryBox(lower=lower, upper=upper)))
        assert program.cone_blocks[0].kind == "zero"
        assert program.cone_blocks[0].dim == 1

    def test_zero_radius_ball_is_equality(self, small_spec):
        balls = [ControlBall(center=np.full(2, 0.1), radius=0.0)] + [
            ControlBall(center=np.zeros(2), radius=1.0) for _ in range(2)
        ]
        program = build_amopul(_problem(small_spec, u_balls=balls))
        assert program.cone_blocks[0].kind == "zero"
        assert program.cone_blocks[0].dim == 2
        assert program.count_blocks("second_order") == 3 + 2


class TestLiftAndExtract:
    @pytest.mark.parametrize("form", ["soc", "lmi"])
    def test_lifted_point_is_feasible(self, boxed, rng, form):
        program = build_amopul(boxed, form=form)
        a = rng.uniform(-0.9, 0.9, (2, 2))
        u = rng.uniform(-0.9, 0.9, (3, 2))
        x = lift_point(boxed, program, a, u)
        assert min(program_residuals(program, x)) >= -1e-9

    def test_stage_residuals_match_rollout(self, boxed, rng):
        program = build_amopul(boxed)
        a, u = rng.uniform(-0.9, 0.9, (2, 2)), rng.uniform(-0.9, 0.9, (3, 2))
        point = extract_solution(program, lift_point(boxed, program, a, u))
        spec = boxed.system
        np.testing.assert_allclose(point.xi, stage_errors(rollout_approx(spec, a, u), spec), atol=1e-12)
        assert point.omega == pytest.approx(approx_cumulative_error(spec, a, u))

    def test_extract_round_trip(self, boxed, rng):
        program = build_amopul(boxed)
        a, u = rng.uniform(-0.9, 0.9, (2, 2)), rng.uniform(-0.9, 0.9, (3, 2))
        point = extract_solution(program, lift_point(boxed, program, a, u, omega=7.0))
        np.testing.assert_array_equal(point.a, a)
        np.testing.assert_array_equal(point.u, u)
        assert point.omega == 7.0

    def test_objective_at_lifted_point(self, boxed, rng):
        program = build_amopul(boxed)
        a, u = rng.uniform(-0.9, 0.9, (2, 2)), rng.uniform(-0.9, 0.9, (3, 2))
        x = lift_point(boxed, program, a, u)
        assert program.objective_value(x) == pytest.approx(approx_cumulative_error(boxed.system, a, u))

    def test_box_violation_shows_in_margins(self, boxed):
        program = build_amopul(boxed)
        x = lift_point(boxed, program, np.full((2, 2), 1.5), np.zeros((3, 2)))
        assert min(program_residuals(program, x)) == pytest.approx(-0.5)

    def test_extract_rejects_wrong_size(self, boxed):
        program = build_amopul(boxed)
        with pytest.raises(DimensionError, match="program vector"):
            extract_solution(program, np.zeros(program.num_vars + 1))

    def test_fixed_omega(self, small_spec, rng):
        problem = MopulProblem(
            system=small_spec,
            objective=ObjectiveSpec(lambda1=1.0, f1="frobenius_dist", a_ref=np.zeros((2, 2)), lambda3=2.0),
            constraints=ConstraintSet(omega_mode=OmegaMode.fixed(3.0)),
        )
        program = build_amopul(problem)
        assert "omega" not in program.var_names
        assert program.objective_offset == pytest.approx(6.0)
        x = lift_point(problem, program, 0.1 * np.eye(2), np.zeros((3, 2)))
        assert extract_solution(program, x).omega == 3.0

    def test_nuclear_ball_lift(self, small_spec):
        problem = _problem(small_spec, stochastic_columns=True, nuclear_ball=1.9)
        program = build_amopul(problem)
        x = lift_point(problem, program, STOCHASTIC_A, np.zeros((3, 2)))
        assert min(program_residuals(program, x)) >= -1e-9

    def test_spectral_ball_violation(self, small_spec):
        problem = _problem(small_spec, spectral_ball=1.0)
        program = build_amopul(problem)
        inside = lift_point(problem, program, 0.5 * np.eye(2), np.zeros((3, 2)))
        outside = lift_point(problem, program, 2.0 * np.eye(2), np.zeros((3, 2)))
        assert min(program_residuals(program, inside)) >= -1e-9
        assert min(program_residuals(program, outside)) == pytest.approx(-1.0)


def test_soc_and_lmi_forms_agree(boxed, solver_config):
    soc = solve(build_amopul(boxed, form="soc"), solver_config)
    lmi = solve(build_amopul(boxed, form="lmi"), solver_config)
    assert soc.ok and lmi.ok
    assert soc.objective == pytest.approx(lmi.objective, rel=1e-6, abs=1e-6)

    program = build_amopul(boxed)
    point = extract_solution(program, soc.x)
    assert point.omega == pytest.approx(approx_cumulative_error(boxed.system, point.a, point.u), abs=1e-5)


class TestArrowLowering:
    def test_stage_psd_margin_is_xi_minus_error_norm(self, rng):
        spec = make_spec(rng, n=3, m=2, horizon=10)
        problem = _problem(spec)
        soc, lmi = build_amopul(problem, form="soc"), build_amopul(problem, form="lmi")
        assert soc.var_names == lmi.var_names
        xi = lmi.var_names["xi"]
        horizon = spec.horizon

        pairs = 0
        for _ in range(1000):
            x = rng.standard_normal(lmi.num_vars)
            x[xi.start : xi.stop] = 0.0
            # with xi = 0 the SOC margin is -||v_t||
            norms = -np.array(program_residuals(soc, x)[:horizon])
            ratio = rng.uniform(0.0, 2.0, horizon)
            ratio[rng.random(horizon) < 0.2] = 0.0
            x[xi.start : xi.stop] = ratio * norms
            psd = np.array(program_residuals(lmi, x)[:horizon])
            np.testing.assert_allclose(psd, (ratio - 1.0) * norms, atol=1e-9 * (1.0 + norms.max()))
            clear = np.abs(ratio - 1.0) > 1e-6
            np.testing.assert_array_equal((psd >= 0)[clear], (ratio >= 1.0)[clear])
            pairs += horizon
        assert pairs == 10_000

    def test_apex_pair_is_feasible(self):
        assert block_margin(PsdCone(side=4), np.zeros(10)) == 0.0
        assert block_margin(SecondOrderCone(dim=4), np.zeros(4)) == 0.0


def _random_amopul(k: int) -> MopulProblem:
    n, horizon = 1 + k % 5, 1 + (k // 5) % 5
    inst = gen_ideal(n, horizon, seed=k)
    refs = perturb_refs(inst, NoiseSpec(sigma=0.3), seed=k)
    spec = inst.spec(refs)
    if k % 2 == 0:
        return preset_amopul1_box(spec)
    level = 0.5 * approx_cumulative_error(spec, inst.a_hat, inst.u_hat)
    return preset_amopul2(spec, inst.a_hat, inst.u_hat, level, 0.5)


def test_forms_agree_on_random_instances(solver_config):
    solved = 0
    for k in range(50):
        problem = _random_amopul(k)
        soc = solve(build_amopul(problem, form="soc"), solver_config)
        lmi = solve(build_amopul(problem, form="lmi"), solver_config)
        assert soc.status == lmi.status, (k, soc.message, lmi.message)
        if soc.status != "optimal":
            assert soc.status == "primal_infeasible" and problem.name == "amopul2", k
            continue
        solved += 1
        scale = max(1.0, abs(soc.objective))
        assert abs(soc.objective - lmi.objective) <= 1e-6 * scale, k
    assert solved >= 25
