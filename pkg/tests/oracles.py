"""Brute-force reference solutions for tiny instances.

Only meant for n <= 2 and N <= 2, where a multi-start local search over the
exact (nested) cumulative error is cheap and reliable enough to compare against.
"""

import numpy as np
from scipy.optimize import minimize

from mopul_sdp.models.problem import MopulProblem
from mopul_sdp.system import exact_cumulative_error


def exact_box_optimum(
    problem: MopulProblem,
    starts: int = 20,
    seed: int = 0,
    extra_starts: list[tuple[np.ndarray, np.ndarray]] | None = None,
) -> tuple[float, np.ndarray, np.ndarray]:
    """Smallest exact cumulative error found over the A and U boxes of ``problem``.

    ``extra_starts`` are evaluated as given and used as starting points, so the
    returned value never exceeds the error at any of them.
    """
    spec = problem.system
    n, m, horizon = spec.n, spec.m, spec.horizon
    if n > 2 or horizon > 2:
        raise ValueError("oracle is limited to n <= 2 and N <= 2")
    a_box, u_box = problem.constraints.a_box, problem.u_box_full()
    bounds = list(zip(a_box.lower.ravel(), a_box.upper.ravel())) + list(
        zip(u_box[0].ravel(), u_box[1].ravel())
    )
    lower = np.array([b[0] for b in bounds])
    upper = np.array([b[1] for b in bounds])

    def unpack(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        return z[: n * n].reshape(n, n), z[n * n :].reshape(horizon, m)

    def objective(z: np.ndarray) -> float:
        return exact_cumulative_error(spec, *unpack(np.clip(z, lower, upper)), problem.error_norm)

    rng = np.random.default_rng(seed)
    points = [np.concatenate([a.ravel(), u.ravel()]) for a, u in extra_starts or []]
    points += [rng.uniform(lower, upper) for _ in range(starts)]

    best_value, best = np.inf, None
    for z0 in points:
        if objective(z0) < best_value:
            best_value, best = objective(z0), z0
        res = minimize(objective, z0, method="Powell", bounds=bounds, options={"xtol": 1e-10, "ftol": 1e-12})
        z = np.clip(res.x, lower, upper)
        if objective(z) < best_value:
            best_value, best = objective(z), z
    a, u = unpack(best)
    return float(best_value), a, u
