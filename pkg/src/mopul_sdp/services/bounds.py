"""Guarantees linking the decoupled problem to the exact one, evaluated per solution.

All rollout errors here are exact (nested) rollouts from ``system``; the
decoupled error is only used to check hypotheses.
"""

import numpy as np

from ..exceptions import ProblemError
from ..linalg import spectral_norm, sym_eigs
from ..models.certificate import BoundCertificate
from ..models.problem import MopulProblem
from ..models.system import ErrorNorm, SystemSpec
from ..system import (
    approx_cumulative_error,
    epsilon_rollout,
    exact_cumulative_error,
    rollout_exact,
    stage_errors,
)
from ..utils.logger import get_logger

logger = get_logger("bounds")

# slack granted to hypotheses met only up to solver tolerance
HYPOTHESIS_RTOL = 1e-6


def _within(value: float, limit: float) -> bool:
    return value <= limit * (1.0 + HYPOTHESIS_RTOL) + 1e-9


def contraction_factor(spec: SystemSpec, a: np.ndarray) -> float:
    """||C A C^+||_2."""
    return spectral_norm(spec.c @ np.asarray(a, dtype=float) @ spec.c_pinv)


def geometric_sum(beta: float, horizon: int) -> float:
    """sum_{i=0}^{N-1} beta^i; equals 1 at beta = 0."""
    if beta < 0:
        raise ValueError(f"beta must be >= 0, got {beta}")
    return float(np.sum(beta ** np.arange(horizon, dtype=float)))


def default_beta(problem: MopulProblem) -> float | None:
    """Smallest known bound on ||A||_2 over the feasible set, times ||C||_2 ||C^+||_2.

    Uses an entry box (||A||_2 <= n max|a_ij|), a spectral or nuclear ball, or
    column stochasticity (||A||_2 <= sqrt(n)). None when A is unbounded.
    """
    spec, cons = problem.system, problem.constraints
    candidates = []
    if cons.a_box is not None:
        candidates.append(cons.a_box.magnitude * spec.n)
    if cons.spectral_ball is not None:
        candidates.append(cons.spectral_ball)
    if cons.nuclear_ball is not None:
        candidates.append(cons.nuclear_ball)
    if cons.stochastic_columns:
        candidates.append(float(np.sqrt(spec.n)))
    if not candidates:
        return None
    return min(candidates) * spectral_norm(spec.c) * spectral_norm(spec.c_pinv)


def theorem2_certificate(
    spec: SystemSpec, a: np.ndarray, u: np.ndarray, beta: float, omega_u: float
) -> BoundCertificate:
    """Exact cumulative error of a decoupled optimum <= (sum beta^i) * omega^u."""
    zeta = contraction_factor(spec, a)
    approx = approx_cumulative_error(spec, a, u)
    reasons = []
    if not _within(zeta, beta):
        reasons.append(f"||C A C^+||_2 = {zeta:.6g} exceeds beta = {beta:.6g}")
    if not _within(approx, omega_u):
        reasons.append(f"approximate error {approx:.6g} exceeds omega^u = {omega_u:.6g}")
    cert = BoundCertificate(
        theorem="T2",
        inputs={"beta": beta, "omega_u": omega_u, "zeta": zeta, "approx_error": approx},
        bound_value=geometric_sum(beta, spec.horizon) * omega_u,
        observed_value=exact_cumulative_error(spec, a, u),
        valid=not reasons,
        reason="; ".join(reasons),
    )
    logger.debug("Certificate evaluated", theorem="T2", holds=cert.holds, valid=cert.valid)
    return cert


def theorem3_tighten(omega_c: float, beta: float, horizon: int) -> float:
    """Control level omega^c / sum_{i<N} beta^i for the decoupled problem."""
    if omega_c < 0:
        raise ValueError(f"omega_c must be >= 0, got {omega_c}")
    return omega_c / geometric_sum(beta, horizon)


def theorem3_check(
    spec: SystemSpec, a: np.ndarray, u: np.ndarray, omega_c: float, beta: float | None = None
) -> BoundCertificate:
    """Exact cumulative error <= omega^c for a point feasible under the tightened level."""
    zeta = contraction_factor(spec, a)
    inputs: dict[str, float] = {"omega_c": omega_c, "zeta": zeta}
    reason = ""
    if beta is not None:
        inputs["beta"] = beta
        level = theorem3_tighten(omega_c, beta, spec.horizon)
        inputs["omega_tilde"] = level
        approx = approx_cumulative_error(spec, a, u)
        if not _within(zeta, beta):
            reason = f"||C A C^+||_2 = {zeta:.6g} exceeds beta = {beta:.6g}"
        elif not _within(approx, level):
            reason = f"approximate error {approx:.6g} exceeds tightened level {level:.6g}"
    return BoundCertificate(
        theorem="T3",
        inputs=inputs,
        bound_value=omega_c,
        observed_value=exact_cumulative_error(spec, a, u),
        valid=not reason,
        reason=reason,
    )


def theorem4_bound(eps: np.ndarray, gamma: float) -> float:
    """(1 + gamma) sum_{t<N} eps_t + eps_N."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps < 0) or gamma < 0:
        raise ValueError("eps and gamma must be nonnegative")
    if eps.size == 0:
        return 0.0
    return float((1.0 + gamma) * np.sum(eps[:-1]) + eps[-1])


def z_epsilon_member(
    spec: SystemSpec, a: np.ndarray, u: np.ndarray, eps: np.ndarray, tol: float = 1e-9
) -> bool:
    """Whether the output recursion of (A, U) stays within eps_t of r_t at every stage."""
    eps = np.asarray(eps, dtype=float)
    outputs = epsilon_rollout(spec, a, u)
    dist = np.linalg.norm(outputs[1:] - spec.references, axis=1)
    return bool(np.all(dist <= eps + tol))


def theorem4_certificate(
    spec: SystemSpec,
    a: np.ndarray,
    u: np.ndarray,
    v_a1: float,
    eps: np.ndarray,
    gamma: float | None = None,
) -> BoundCertificate:
    """Decoupled optimum v_A1 <= (1 + gamma) sum_{t<N} eps_t + eps_N.

    (A, U) is the point witnessing membership of the eps-set; gamma defaults to
    its ||C A C^+||_2, which bounds the infimum over the set from above.
    """
    eps = np.asarray(eps, dtype=float)
    per_solution = gamma is None
    gamma = contraction_factor(spec, a) if gamma is None else gamma
    member = z_epsilon_member(spec, a, u, eps)
    return BoundCertificate(
        theorem="T4",
        inputs={"eps": eps.tolist(), "gamma": gamma},
        bound_value=theorem4_bound(eps, gamma),
        observed_value=v_a1,
        valid=member,
        per_solution=per_solution,
        reason="" if member else "witness is outside the eps-set",
    )


def theorem56_ratio(
    spec: SystemSpec,
    a_opt: np.ndarray,
    u_opt: np.ndarray,
    v_a1: float,
    exact_m1_value: float | None = None,
    m1_point: tuple[np.ndarray, np.ndarray] | None = None,
) -> tuple[BoundCertificate, BoundCertificate]:
    """(upper, lower) comparison between the exact and decoupled optima.

    The first certificate checks exact error of the decoupled optimum <=
    (sum zeta^i) v_A1, which implies v_M1 <= (sum zeta^i) v_A1. The second checks
    v_A1 <= (1 + gamma) v_M1 with gamma read off an exact minimizer; it is
    marked not evaluated unless both ``exact_m1_value`` and ``m1_point`` are given.
    """
    zeta = contraction_factor(spec, a_opt)
    upper = BoundCertificate(
        theorem="T6",
        inputs={"zeta": zeta, "v_a1": v_a1}
        | ({} if exact_m1_value is None else {"v_m1": exact_m1_value}),
        bound_value=geometric_sum(zeta, spec.horizon) * v_a1,
        observed_value=exact_cumulative_error(spec, a_opt, u_opt),
        per_solution=True,
    )
    if exact_m1_value is None or m1_point is None:
        lower = BoundCertificate.not_evaluated(
            "T5", "exact optimum and minimizer not supplied", v_a1=v_a1
        )
        return upper, lower

    a_star, u_star = m1_point
    gamma = contraction_factor(spec, a_star)
    eps_star = stage_errors(rollout_exact(spec, a_star, u_star), spec)
    lower = BoundCertificate(
        theorem="T5",
        inputs={"gamma": gamma, "v_m1": exact_m1_value, "eps": eps_star.tolist()},
        bound_value=(1.0 + gamma) * exact_m1_value,
        observed_value=v_a1,
        per_solution=True,
    )
    return upper, lower


def remark5_sandwich(
    spec: SystemSpec,
    a_opt: np.ndarray,
    v_a1: float,
    v_m1: float,
    m1_point: tuple[np.ndarray, np.ndarray],
) -> BoundCertificate:
    """v_A1 / v_M1 <= 1 + gamma, with the lower end 1 / sum zeta^i recorded as ``lower``."""
    zeta = contraction_factor(spec, a_opt)
    gamma = contraction_factor(spec, m1_point[0])
    lower = 1.0 / geometric_sum(zeta, spec.horizon)
    if v_m1 <= 0:
        return BoundCertificate.not_evaluated("R5", "exact optimum is zero", v_a1=v_a1, v_m1=v_m1)
    ratio = v_a1 / v_m1
    below = ratio < lower * (1.0 - HYPOTHESIS_RTOL)
    return BoundCertificate(
        theorem="R5",
        inputs={"lower": lower, "zeta": zeta, "gamma": gamma, "v_a1": v_a1, "v_m1": v_m1},
        bound_value=1.0 + gamma,
        observed_value=ratio,
        valid=not below,
        per_solution=True,
        reason=f"ratio {ratio:.6g} below lower end {lower:.6g}" if below else "",
    )


def theorem7_certificate(
    spec: SystemSpec,
    omega: float,
    beta: float,
    a: np.ndarray,
    u: np.ndarray,
    objective: float,
) -> BoundCertificate:
    """A decoupled solution solved at the tightened level keeps exact error <= omega.

    ``objective`` (the Frobenius distance achieved) is recorded as an upper bound
    on the exact problem's optimum.
    """
    cert = theorem3_check(spec, a, u, omega, beta)
    return cert.model_copy(
        update={"theorem": "T7", "inputs": cert.inputs | {"objective_upper": objective}}
    )


def _equivalence_constants(q: np.ndarray) -> tuple[float, float]:
    """(eta1, eta2) with eta1 ||x||_Q <= ||x||_2 <= eta2 ||x||_Q."""
    eigs = sym_eigs(q)
    if eigs[0] <= 0:
        raise ProblemError("Q must be positive definite")
    return 1.0 / np.sqrt(eigs[-1]), 1.0 / np.sqrt(eigs[0])


def remark3_level(omega_c: float, beta: float, horizon: int, q: np.ndarray) -> float:
    """Tightened level for a Q-weighted cumulative error.

    omega^c / ((eta2 beta / eta1)^{N-1} + sum_{i=0}^{N-2} eta2^{i+1} beta^i / eta1^{i+1}).
    """
    eta1, eta2 = _equivalence_constants(np.asarray(q, dtype=float))
    ratio = eta2 / eta1
    head = (ratio * beta) ** (horizon - 1) if horizon > 1 else 1.0
    i = np.arange(horizon - 1, dtype=float)
    tail = float(np.sum(ratio ** (i + 1) * beta**i))
    return omega_c / (head + tail)


def remark3_certificate(
    spec: SystemSpec,
    a: np.ndarray,
    u: np.ndarray,
    omega_c: float,
    beta: float,
    q: np.ndarray,
) -> BoundCertificate:
    """Exact Q-weighted cumulative error <= omega^c at the Q-norm tightened level."""
    norm = ErrorNorm(kind="q_norm", q=q)
    level = remark3_level(omega_c, beta, spec.horizon, q)
    zeta = contraction_factor(spec, a)
    approx = approx_cumulative_error(spec, a, u, norm)
    reason = ""
    if not _within(zeta, beta):
        reason = f"||C A C^+||_2 = {zeta:.6g} exceeds beta = {beta:.6g}"
    elif not _within(approx, level):
        reason = f"weighted approximate error {approx:.6g} exceeds level {level:.6g}"
    return BoundCertificate(
        theorem="R3",
        inputs={"omega_c": omega_c, "beta": beta, "level": level, "zeta": zeta},
        bound_value=omega_c,
        observed_value=exact_cumulative_error(spec, a, u, norm),
        valid=not reason,
        reason=reason,
    )
