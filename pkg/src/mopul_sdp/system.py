"""Finite-horizon linear-system semantics.

Exact (nested) rollouts, decoupled rollouts driven by the references, cumulative
error evaluation and the closed-form polynomial expansion of a stage error.
"""

import numpy as np

from .models.system import ErrorNorm, SystemSpec, Trajectory

EUCLIDEAN = ErrorNorm()


def _trajectory(spec: SystemSpec, states: np.ndarray) -> Trajectory:
    return Trajectory(states=states, outputs=states @ spec.c.T)


def rollout_exact(spec: SystemSpec, a: np.ndarray, u: np.ndarray) -> Trajectory:
    """x_t = A x_{t-1} + B u_{t-1} from x_0, for t = 1..N."""
    a, u = spec.check_decision(a, u)
    states = np.empty((spec.horizon + 1, spec.n))
    states[0] = spec.x0
    for t in range(1, spec.horizon + 1):
        states[t] = a @ states[t - 1] + spec.b @ u[t - 1]
    return _trajectory(spec, states)


def rollout_approx(spec: SystemSpec, a: np.ndarray, u: np.ndarray) -> Trajectory:
    """Decoupled iteration x_t = A C^+ r_{t-1} + B u_{t-1}, with x_0 kept."""
    a, u = spec.check_decision(a, u)
    refs = spec.all_references()
    states = np.empty((spec.horizon + 1, spec.n))
    states[0] = spec.x0
    states[1:] = (refs[:-1] @ spec.c_pinv.T) @ a.T + u @ spec.b.T
    return _trajectory(spec, states)


def stage_errors(traj: Trajectory, spec: SystemSpec, norm: ErrorNorm | None = None) -> np.ndarray:
    """||y_t - r_t|| for t = 1..N."""
    norm = norm or EUCLIDEAN
    residuals = traj.outputs[1:] - spec.references
    return np.array([norm.measure(r) for r in residuals])


def cumulative_error(traj: Trajectory, spec: SystemSpec, norm: ErrorNorm | None = None) -> float:
    """Sum over t = 1..N of ||y_t - r_t|| under the selected norm."""
    return float(np.sum(stage_errors(traj, spec, norm)))


def exact_cumulative_error(
    spec: SystemSpec, a: np.ndarray, u: np.ndarray, norm: ErrorNorm | None = None
) -> float:
    return cumulative_error(rollout_exact(spec, a, u), spec, norm)


def approx_cumulative_error(
    spec: SystemSpec, a: np.ndarray, u: np.ndarray, norm: ErrorNorm | None = None
) -> float:
    return cumulative_error(rollout_approx(spec, a, u), spec, norm)


def epsilon_rollout(spec: SystemSpec, a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Output-space recursion y_t = C A C^+ y_{t-1} + C B u_{t-1} from y_0 = C x_0.

    Returns rows y_0..y_N.
    """
    a, u = spec.check_decision(a, u)
    closed = spec.c @ a @ spec.c_pinv
    drive = u @ (spec.c @ spec.b).T
    out = np.empty((spec.horizon + 1, spec.p))
    out[0] = spec.r0
    for t in range(1, spec.horizon + 1):
        out[t] = closed @ out[t - 1] + drive[t - 1]
    return out


def poly_error(spec: SystemSpec, a: np.ndarray, u: np.ndarray, t: int) -> float:
    """||y_t - r_t||_2^2 through its six-term expansion in powers of A.

    With a = C A^t x_0 and b_j = C A^j B u_{t-1-j} the terms are
    a'a, 2 sum_j a'b_j, sum_{i,j} b_i'b_j, -2 a'r_t, -2 sum_i b_i'r_t and r_t'r_t.
    """
    a_mat, u = spec.check_decision(a, u)
    if not 1 <= t <= spec.horizon:
        raise IndexError(f"stage {t} outside 1..{spec.horizon}")

    powers = [np.eye(spec.n)]
    for _ in range(t):
        powers.append(powers[-1] @ a_mat)

    r_t = spec.reference(t)
    lead = spec.c @ powers[t] @ spec.x0
    drives = np.array([spec.c @ powers[j] @ spec.b @ u[t - 1 - j] for j in range(t)])

    gram = drives @ drives.T
    term1 = lead @ lead
    term2 = 2.0 * np.sum(drives @ lead)
    term3 = np.sum(gram)
    term4 = -2.0 * lead @ r_t
    term5 = -2.0 * np.sum(drives @ r_t)
    term6 = r_t @ r_t
    return float(term1 + term2 + term3 + term4 + term5 + term6)
