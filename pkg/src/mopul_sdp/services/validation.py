"""Independent feasibility check of a candidate (A, U, omega).

Works from the problem definition and the rollout semantics only; nothing here
touches the conic program or the solver.
"""

import numpy as np

from ..linalg import nuclear_norm, spectral_norm
from ..models.problem import MopulProblem
from ..models.validation import ConstraintCheck, ValidationReport
from ..system import approx_cumulative_error, exact_cumulative_error
from ..utils.logger import get_logger

logger = get_logger("validation")

DEFAULT_TOLERANCE = 1e-6


def _min(values: np.ndarray) -> float:
    values = np.asarray(values, dtype=float)
    return float(np.min(values)) if values.size else float("inf")


def constraint_margins(
    problem: MopulProblem, a: np.ndarray, u: np.ndarray, omega: float | None = None
) -> dict[str, float]:
    """Margin of every active constraint at (A, U, omega), keyed by constraint name."""
    spec, cons = problem.system, problem.constraints
    a, u = spec.check_decision(a, u)
    margins: dict[str, float] = {}

    approx = approx_cumulative_error(spec, a, u, problem.error_norm)
    if problem.omega_fixed is not None:
        margins["cumulative_error"] = problem.omega_fixed - approx
    else:
        level = approx if omega is None else omega
        margins["cumulative_error"] = level - approx
        margins["omega_upper"] = cons.omega_mode.upper - level
        margins["omega_nonneg"] = level

    if cons.a_box is not None:
        margins["a_box"] = min(_min(a - cons.a_box.lower), _min(cons.a_box.upper - a))
    u_bounds = problem.u_box_full()
    if u_bounds is not None:
        margins["u_box"] = min(_min(u - u_bounds[0]), _min(u_bounds[1] - u))
    if cons.u_rate is not None and spec.horizon > 1:
        steps = np.diff(u, axis=0)
        margins["u_rate"] = min(_min(steps - cons.u_rate.lower), _min(cons.u_rate.upper - steps))
    for t, ball in enumerate(cons.u_balls or []):
        margins[f"u_balls[{t}]"] = ball.radius - float(np.linalg.norm(u[t] - ball.center))
    for k, ineq in enumerate(cons.a_linear):
        margins[f"a_linear[{k}]"] = ineq.rhs - float(np.sum(ineq.coeffs * a))
    if cons.stochastic_columns:
        margins["stochastic_nonneg"] = _min(a)
        margins["stochastic_columns"] = -float(np.max(np.abs(a.sum(axis=0) - 1.0)))
    if cons.nuclear_ball is not None:
        margins["nuclear_ball"] = cons.nuclear_ball - nuclear_norm(a)
    if cons.spectral_ball is not None:
        margins["spectral_ball"] = cons.spectral_ball - spectral_norm(a)
    if cons.io_structure is not None:
        io = cons.io_structure
        pattern = io.assemble(np.zeros((io.m1, io.m1)), np.zeros((io.m2, io.m1)))
        mask = io.fixed_pattern()
        margins["io_pattern"] = -float(np.max(np.abs(a - pattern)[mask], initial=0.0))
        g, h = io.split(a)
        for k, ineq in enumerate(io.inequalities):
            lhs = float(np.sum(ineq.g_coeffs * g) + np.sum(ineq.h_coeffs * h))
            margins[f"io_inequality[{k}]"] = ineq.rhs - lhs
    return margins


def objective_value(problem: MopulProblem, a: np.ndarray, u: np.ndarray, omega: float | None = None) -> float:
    """lambda1 f1(A) + lambda2 f2(U) + lambda3 f3(omega) evaluated directly."""
    spec, obj = problem.system, problem.objective
    a, u = spec.check_decision(a, u)
    total = 0.0
    if "f1" in obj.active_terms:
        total += obj.lambda1 * float(np.linalg.norm(a - obj.a_ref))
    if "f2" in obj.active_terms:
        total += obj.lambda2 * float(np.sum(np.linalg.norm(np.diff(u, axis=0), axis=1)))
    if "f3" in obj.active_terms:
        if problem.omega_fixed is not None:
            level = problem.omega_fixed
        else:
            level = approx_cumulative_error(spec, a, u, problem.error_norm) if omega is None else omega
        total += obj.lambda3 * level
    return total


def validate(
    problem: MopulProblem,
    a: np.ndarray,
    u: np.ndarray,
    omega: float | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> ValidationReport:
    """Re-roll (A, U) and re-check every constraint within ``tolerance``."""
    margins = constraint_margins(problem, a, u, omega)
    checks = [
        ConstraintCheck(name=name, margin=margin, satisfied=margin >= -tolerance)
        for name, margin in margins.items()
    ]
    report = ValidationReport(
        problem=problem.name,
        tolerance=tolerance,
        checks=checks,
        exact_error=exact_cumulative_error(problem.system, a, u, problem.error_norm),
        approx_error=approx_cumulative_error(problem.system, a, u, problem.error_norm),
        objective=objective_value(problem, a, u, omega),
    )
    if report.ok:
        logger.info("Validation passed", problem=problem.name, checks=len(checks))
    else:
        logger.warning(
            "Validation failed", problem=problem.name, violated=[c.name for c in report.violations]
        )
    return report
