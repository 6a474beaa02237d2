"""Constructors for the application models and the two experiment models."""

import numpy as np

from ..exceptions import DimensionError, ProblemError
from ..models.problem import (
    ConstraintSet,
    ControlBall,
    EntryBox,
    IoInequality,
    IoStructure,
    MopulProblem,
    ObjectiveSpec,
    OmegaMode,
    RateBounds,
)
from ..models.system import SystemSpec


def _merge(extra: ConstraintSet | None, **fields) -> ConstraintSet:
    if extra is None:
        return ConstraintSet(**fields)
    return extra.model_copy(update=fields)


def preset_mpc(
    spec: SystemSpec,
    lam: float,
    extra: ConstraintSet | None = None,
    u_rate: tuple[np.ndarray, np.ndarray] | None = None,
) -> MopulProblem:
    """Model predictive control: minimize omega + lam * control effort.

    ``u_rate`` gives componentwise bounds alpha1 <= u_t - u_{t-1} <= alpha2.
    """
    if lam < 0:
        raise ProblemError(f"lambda must be >= 0, got {lam}")
    objective = ObjectiveSpec(lambda1=0.0, lambda2=lam, lambda3=1.0, f2="control_effort")
    fields = {}
    if u_rate is not None:
        lower, upper = u_rate
        fields["u_rate"] = RateBounds(
            lower=np.broadcast_to(lower, (spec.m,)), upper=np.broadcast_to(upper, (spec.m,))
        )
    return MopulProblem(name="mpc", system=spec, objective=objective, constraints=_merge(extra, **fields))


def preset_covid(spec: SystemSpec, extra: ConstraintSet | None = None) -> MopulProblem:
    """Four-group epidemic model with B = C = I and references as expected group counts."""
    if (spec.n, spec.m, spec.p) != (4, 4, 4):
        raise DimensionError("covid (n, m, p)", (4, 4, 4), (spec.n, spec.m, spec.p))
    eye = np.eye(4)
    if not (np.array_equal(spec.b, eye) and np.array_equal(spec.c, eye)):
        raise ProblemError("covid model requires B = C = I")
    return MopulProblem(
        name="covid",
        system=spec,
        objective=ObjectiveSpec(lambda3=1.0),
        constraints=extra or ConstraintSet(),
    )


def preset_markov(
    num_states: int,
    alpha: float,
    observations: np.ndarray,
    initial: np.ndarray | None = None,
) -> MopulProblem:
    """Transition-matrix estimation from N observed state-frequency vectors.

    B = O and C = I, so U is inert and pinned to zero. The initial distribution
    defaults to uniform.
    """
    obs = np.atleast_2d(np.asarray(observations, dtype=float))
    if obs.shape[1] != num_states:
        raise DimensionError("observation width", num_states, obs.shape[1])
    if np.any(obs < -1e-12) or np.any(np.abs(obs.sum(axis=1) - 1.0) > 1e-6):
        raise ProblemError("observations must be probability vectors (>= 0, summing to 1)")
    if not 0 < alpha < num_states:
        raise ProblemError(f"nuclear-norm radius must lie in (0, {num_states}), got {alpha}")
    x0 = np.full(num_states, 1.0 / num_states) if initial is None else np.asarray(initial, dtype=float)

    spec = SystemSpec(
        b=np.zeros((num_states, num_states)),
        c=np.eye(num_states),
        x0=x0,
        references=obs,
    )
    constraints = ConstraintSet(
        u_box=EntryBox.symmetric(0.0, (1, num_states)),
        stochastic_columns=True,
        nuclear_ball=alpha,
    )
    return MopulProblem(
        name="markov", system=spec, objective=ObjectiveSpec(lambda3=1.0), constraints=constraints
    )


def _io_spec(m1: int, m2: int, refs: np.ndarray, x0: np.ndarray | None) -> SystemSpec:
    n = m1 + m2
    refs = np.atleast_2d(np.asarray(refs, dtype=float))
    if refs.shape[1] != n:
        raise DimensionError("io reference width", n, refs.shape[1])
    return SystemSpec(b=np.eye(n), c=np.eye(n), x0=np.zeros(n) if x0 is None else x0, references=refs)


def preset_io1(
    m1: int,
    m2: int,
    refs: np.ndarray,
    io_ineqs: list[IoInequality] | None = None,
    x0: np.ndarray | None = None,
) -> MopulProblem:
    """Input-output model: fit the technical coefficients G, H by minimizing omega."""
    spec = _io_spec(m1, m2, refs, x0)
    structure = IoStructure(m1=m1, m2=m2, inequalities=io_ineqs or [])
    return MopulProblem(
        name="io1",
        system=spec,
        objective=ObjectiveSpec(lambda3=1.0),
        constraints=ConstraintSet(io_structure=structure),
    )


def preset_io2(
    m1: int,
    m2: int,
    refs: np.ndarray,
    a_ref: np.ndarray,
    u_refs: np.ndarray,
    omega: float,
    omega_t: float | np.ndarray,
    io_ineqs: list[IoInequality] | None = None,
    x0: np.ndarray | None = None,
) -> MopulProblem:
    """Input-output model: stay closest to A_ref under a fixed error level and control balls."""
    spec = _io_spec(m1, m2, refs, x0)
    structure = IoStructure(m1=m1, m2=m2, inequalities=io_ineqs or [])
    constraints = ConstraintSet(
        io_structure=structure,
        omega_mode=OmegaMode.fixed(omega),
        u_balls=_balls(spec, u_refs, omega_t),
    )
    objective = ObjectiveSpec(lambda1=1.0, lambda3=0.0, f1="frobenius_dist", f3="zero", a_ref=a_ref)
    return MopulProblem(name="io2", system=spec, objective=objective, constraints=constraints)


def _balls(spec: SystemSpec, u_refs: np.ndarray, radii: float | np.ndarray) -> list[ControlBall]:
    u_refs = np.asarray(u_refs, dtype=float).reshape(spec.horizon, spec.m)
    radii = np.broadcast_to(np.asarray(radii, dtype=float), (spec.horizon,))
    return [ControlBall(center=c, radius=float(r)) for c, r in zip(u_refs, radii)]


def preset_amopul1_box(spec: SystemSpec, a_bound: float = 0.4, u_bound: float = 0.5) -> MopulProblem:
    """Minimize the approximate cumulative error with |a_ij| <= a_bound, |u_t^i| <= u_bound."""
    constraints = ConstraintSet(
        a_box=EntryBox.symmetric(a_bound, (spec.n, spec.n)),
        u_box=EntryBox.symmetric(u_bound, (1, spec.m)),
    )
    return MopulProblem(
        name="amopul1", system=spec, objective=ObjectiveSpec(lambda3=1.0), constraints=constraints
    )


def preset_amopul2(
    spec: SystemSpec,
    a_ref: np.ndarray,
    u_refs: np.ndarray,
    omega_tilde: float,
    omega_t: float | np.ndarray,
) -> MopulProblem:
    """Minimize ||A - A_ref||_F with sum_t xi_t <= omega_tilde and ||u_t - u_t^r|| <= omega_t."""
    constraints = ConstraintSet(
        omega_mode=OmegaMode.fixed(omega_tilde),
        u_balls=_balls(spec, u_refs, omega_t),
    )
    objective = ObjectiveSpec(lambda1=1.0, lambda3=0.0, f1="frobenius_dist", f3="zero", a_ref=a_ref)
    return MopulProblem(name="amopul2", system=spec, objective=objective, constraints=constraints)
