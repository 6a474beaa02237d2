"""Problem data model: objective catalog, constraint catalog and full instances."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..exceptions import DimensionError, ProblemError
from .arrays import Matrix, Vector
from .system import ErrorNorm, SystemSpec

SCHEMA_VERSION = 1

_ARRAY_MODEL = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")


class ObjectiveSpec(BaseModel):
    """lambda1 * f1(A) + lambda2 * f2(U) + lambda3 * f3(omega).

    f1: ``frobenius_dist`` is ||A - A_ref||_F.
    f2: ``control_effort`` is sum_{t=1}^{N-1} ||u_t - u_{t-1}||_2.
    f3: ``identity`` is omega itself.
    """

    model_config = _ARRAY_MODEL

    lambda1: float = Field(default=0.0, ge=0, description="Weight of f1(A)")
    lambda2: float = Field(default=0.0, ge=0, description="Weight of f2(U)")
    lambda3: float = Field(default=1.0, ge=0, description="Weight of f3(omega)")
    f1: Literal["zero", "frobenius_dist"] = Field(default="zero")
    f2: Literal["zero", "control_effort"] = Field(default="zero")
    f3: Literal["zero", "identity"] = Field(default="identity")
    a_ref: Matrix | None = Field(default=None, description="A_ref for frobenius_dist")

    @model_validator(mode="after")
    def check_active_terms(self) -> "ObjectiveSpec":
        if self.f1 == "frobenius_dist" and self.a_ref is None:
            raise ProblemError("frobenius_dist requires a_ref")
        if not self.active_terms:
            raise ProblemError("objective is constant: no term has a positive weight")
        return self

    @property
    def active_terms(self) -> list[str]:
        terms = []
        if self.lambda1 > 0 and self.f1 != "zero":
            terms.append("f1")
        if self.lambda2 > 0 and self.f2 != "zero":
            terms.append("f2")
        if self.lambda3 > 0 and self.f3 != "zero":
            terms.append("f3")
        return terms


class EntryBox(BaseModel):
    """Entrywise bounds lower <= X <= upper."""

    model_config = _ARRAY_MODEL

    lower: Matrix
    upper: Matrix

    @model_validator(mode="after")
    def check_order(self) -> "EntryBox":
        if self.lower.shape != self.upper.shape:
            raise DimensionError("box bounds", self.lower.shape, self.upper.shape)
        if np.any(self.lower > self.upper):
            raise ProblemError("box has lower > upper")
        return self

    @classmethod
    def symmetric(cls, bound: float, shape: tuple[int, int]) -> "EntryBox":
        if bound < 0:
            raise ProblemError(f"box magnitude must be >= 0, got {bound}")
        return cls(lower=np.full(shape, -bound), upper=np.full(shape, bound))

    @property
    def magnitude(self) -> float:
        return float(max(np.max(np.abs(self.lower)), np.max(np.abs(self.upper))))

    def contains(self, x: np.ndarray, tol: float = 0.0) -> bool:
        x = np.broadcast_to(x, self.lower.shape)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))


class RateBounds(BaseModel):
    """Componentwise lower <= u_t - u_{t-1} <= upper for t = 1..N-1."""

    model_config = _ARRAY_MODEL

    lower: Vector
    upper: Vector

    @model_validator(mode="after")
    def check_order(self) -> "RateBounds":
        if self.lower.shape != self.upper.shape:
            raise DimensionError("rate bounds", self.lower.shape, self.upper.shape)
        if np.any(self.lower > self.upper):
            raise ProblemError("rate bounds have lower > upper")
        return self


class ControlBall(BaseModel):
    """||u_t - center||_2 <= radius."""

    model_config = _ARRAY_MODEL

    center: Vector
    radius: float = Field(ge=0)


class OmegaMode(BaseModel):
    """Control level omega: a decision variable capped at ``upper``, or a fixed constant."""

    model_config = _ARRAY_MODEL

    kind: Literal["variable", "fixed"] = "variable"
    value: float | None = Field(default=None, ge=0, description="omega^c for fixed mode")
    upper: float = Field(default=1e4, gt=0, description="omega^u for variable mode")

    @model_validator(mode="after")
    def check_value(self) -> "OmegaMode":
        if self.kind == "fixed" and self.value is None:
            raise ProblemError("fixed omega mode requires a value")
        return self

    @classmethod
    def fixed(cls, value: float) -> "OmegaMode":
        return cls(kind="fixed", value=value)


class LinearInequality(BaseModel):
    """<coeffs, A> <= rhs (entrywise inner product)."""

    model_config = _ARRAY_MODEL

    coeffs: Matrix
    rhs: float


class IoInequality(BaseModel):
    """<g_coeffs, G> + <h_coeffs, H> <= rhs."""

    model_config = _ARRAY_MODEL

    g_coeffs: Matrix
    h_coeffs: Matrix
    rhs: float


class IoStructure(BaseModel):
    """A = [[I - G, O], [-H, I]] with G (m1 x m1) and H (m2 x m1) free."""

    model_config = _ARRAY_MODEL

    m1: int = Field(ge=1)
    m2: int = Field(ge=0)
    inequalities: list[IoInequality] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_blocks(self) -> "IoStructure":
        for k, ineq in enumerate(self.inequalities):
            if ineq.g_coeffs.shape != (self.m1, self.m1):
                raise DimensionError(f"io inequality {k} G coeffs", (self.m1, self.m1), ineq.g_coeffs.shape)
            if ineq.h_coeffs.shape != (self.m2, self.m1):
                raise DimensionError(f"io inequality {k} H coeffs", (self.m2, self.m1), ineq.h_coeffs.shape)
        return self

    @property
    def size(self) -> int:
        return self.m1 + self.m2

    def assemble(self, g: np.ndarray, h: np.ndarray) -> np.ndarray:
        n = self.size
        a = np.eye(n)
        a[: self.m1, : self.m1] -= g
        a[self.m1 :, : self.m1] = -h
        return a

    def split(self, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(G, H) read off a structured A."""
        g = np.eye(self.m1) - a[: self.m1, : self.m1]
        h = -a[self.m1 :, : self.m1]
        return g, h

    def fixed_pattern(self) -> np.ndarray:
        """Mask of A entries the structure pins (to the values of ``assemble(0, 0)``)."""
        mask = np.ones((self.size, self.size), dtype=bool)
        mask[:, : self.m1] = False
        return mask


class ConstraintSet(BaseModel):
    """Catalog of convex restrictions on (A, U, omega)."""

    model_config = _ARRAY_MODEL

    a_box: EntryBox | None = Field(default=None, description="Entrywise bounds on A")
    u_box: EntryBox | None = Field(
        default=None, description="Entrywise bounds on u_t, shape (N, m) or (1, m) broadcast"
    )
    u_rate: RateBounds | None = Field(default=None, description="Bounds on u_t - u_{t-1}")
    u_balls: list[ControlBall] | None = Field(default=None, description="One ball per stage u_0..u_{N-1}")
    omega_mode: OmegaMode = Field(default_factory=OmegaMode)
    a_linear: list[LinearInequality] = Field(default_factory=list)
    stochastic_columns: bool = Field(default=False, description="A >= 0 and columns sum to 1")
    nuclear_ball: float | None = Field(default=None, gt=0, description="||A||_* <= alpha")
    spectral_ball: float | None = Field(default=None, gt=0, description="||A||_2 <= alpha")
    io_structure: IoStructure | None = None

    @field_validator("u_balls")
    @classmethod
    def check_balls_nonempty(cls, v: list[ControlBall] | None) -> list[ControlBall] | None:
        if v is not None and not v:
            raise ValueError("u_balls must list one ball per stage")
        return v


class MopulProblem(BaseModel):
    """A complete instance: system data, objective, constraints and error norm."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    schema_version: int = Field(default=SCHEMA_VERSION)
    name: str = Field(default="custom", description="Free-form label (preset name)")
    system: SystemSpec
    objective: ObjectiveSpec
    constraints: ConstraintSet = Field(default_factory=ConstraintSet)
    error_norm: ErrorNorm = Field(default_factory=ErrorNorm)

    @model_validator(mode="after")
    def check_coherence(self) -> "MopulProblem":
        spec, cons = self.system, self.constraints
        n, m, p, horizon = spec.n, spec.m, spec.p, spec.horizon

        if self.objective.a_ref is not None and self.objective.a_ref.shape != (n, n):
            raise DimensionError("a_ref", (n, n), self.objective.a_ref.shape)
        if self.error_norm.q is not None and self.error_norm.q.shape != (p, p):
            raise DimensionError("Q", (p, p), self.error_norm.q.shape)
        if cons.a_box is not None and cons.a_box.lower.shape != (n, n):
            raise DimensionError("a_box", (n, n), cons.a_box.lower.shape)
        if cons.u_box is not None and cons.u_box.lower.shape not in {(horizon, m), (1, m)}:
            raise DimensionError("u_box", (horizon, m), cons.u_box.lower.shape)
        if cons.u_rate is not None and cons.u_rate.lower.shape != (m,):
            raise DimensionError("u_rate", (m,), cons.u_rate.lower.shape)
        if cons.u_balls is not None:
            if len(cons.u_balls) != horizon:
                raise DimensionError("u_balls", horizon, len(cons.u_balls))
            for t, ball in enumerate(cons.u_balls):
                if ball.center.shape != (m,):
                    raise DimensionError(f"u_balls[{t}] center", (m,), ball.center.shape)
        for k, ineq in enumerate(cons.a_linear):
            if ineq.coeffs.shape != (n, n):
                raise DimensionError(f"a_linear[{k}]", (n, n), ineq.coeffs.shape)
        if cons.nuclear_ball is not None and not 0 < cons.nuclear_ball < n:
            raise ProblemError(f"nuclear_ball requires 0 < alpha < {n}, got {cons.nuclear_ball}")
        if cons.io_structure is not None and cons.io_structure.size != n:
            raise DimensionError("io_structure m1 + m2", n, cons.io_structure.size)
        return self

    @property
    def omega_fixed(self) -> float | None:
        mode = self.constraints.omega_mode
        return mode.value if mode.kind == "fixed" else None

    def u_box_full(self) -> tuple[np.ndarray, np.ndarray] | None:
        """u_box bounds broadcast to (N, m)."""
        box = self.constraints.u_box
        if box is None:
            return None
        shape = (self.system.horizon, self.system.m)
        return np.broadcast_to(box.lower, shape), np.broadcast_to(box.upper, shape)
