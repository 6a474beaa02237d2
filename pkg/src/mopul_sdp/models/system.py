"""Linear-system data models: system data, trajectories and error norms."""

from functools import cached_property
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import DimensionError, ProblemError
from ..linalg import cholesky_factor, pinv, rank
from .arrays import Matrix, Vector


class ErrorNorm(BaseModel):
    """Norm applied to each stage residual y_t - r_t."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    kind: Literal["euclidean", "q_norm"] = Field(default="euclidean", description="Norm selector")
    q: Matrix | None = Field(default=None, description="SPD weight matrix for q_norm")

    @model_validator(mode="after")
    def check_weight(self) -> "ErrorNorm":
        if self.kind == "q_norm":
            if self.q is None:
                raise ValueError("q_norm requires a weight matrix q")
            cholesky_factor(self.q)
        elif self.q is not None:
            raise ValueError("q is only allowed with kind='q_norm'")
        return self

    @cached_property
    def factor(self) -> np.ndarray | None:
        """Lower Cholesky factor of Q, or None for the Euclidean norm."""
        return None if self.q is None else cholesky_factor(self.q)

    def measure(self, v: np.ndarray) -> float:
        v = np.asarray(v, dtype=float)
        if self.factor is None:
            return float(np.linalg.norm(v))
        return float(np.linalg.norm(self.factor.T @ v))


class SystemSpec(BaseModel):
    """Known part of x_t = A x_{t-1} + B u_{t-1}, y_t = C x_t on stages 1..N.

    ``references`` holds r_1..r_N as rows. r_0 is always C x_0.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    b: Matrix = Field(description="Input matrix B (n x m)")
    c: Matrix = Field(description="Output matrix C (p x n), full column rank")
    x0: Vector = Field(description="Initial state x_0 (n)")
    references: Matrix = Field(description="Reference outputs r_1..r_N, one row per stage (N x p)")

    @model_validator(mode="after")
    def check_dimensions(self) -> "SystemSpec":
        n = self.x0.shape[0]
        if self.b.shape[0] != n:
            raise DimensionError("B rows", n, self.b.shape[0])
        if self.c.shape[1] != n:
            raise DimensionError("C columns", n, self.c.shape[1])
        if self.references.shape[0] < 1:
            raise ProblemError("horizon N must be at least 1")
        if self.references.shape[1] != self.c.shape[0]:
            raise DimensionError("reference dimension", self.c.shape[0], self.references.shape[1])
        if rank(self.c) != n:
            raise ProblemError(f"C must have full column rank {n}, got rank {rank(self.c)}")
        return self

    @property
    def n(self) -> int:
        return int(self.x0.shape[0])

    @property
    def m(self) -> int:
        return int(self.b.shape[1])

    @property
    def p(self) -> int:
        return int(self.c.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.references.shape[0])

    @cached_property
    def r0(self) -> np.ndarray:
        return self.c @ self.x0

    @cached_property
    def c_pinv(self) -> np.ndarray:
        return pinv(self.c)

    def reference(self, t: int) -> np.ndarray:
        """r_t for t in 0..N."""
        if not 0 <= t <= self.horizon:
            raise IndexError(f"stage {t} outside 0..{self.horizon}")
        return self.r0 if t == 0 else self.references[t - 1]

    def all_references(self) -> np.ndarray:
        """Stacked r_0..r_N, shape (N+1, p)."""
        return np.vstack([self.r0[None, :], self.references])

    def with_references(self, references: np.ndarray) -> "SystemSpec":
        return SystemSpec(b=self.b, c=self.c, x0=self.x0, references=references)

    def check_decision(self, a: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Coerce (A, U) to arrays and verify shapes (A: n x n, U: N x m)."""
        a = np.asarray(a, dtype=float)
        u = np.asarray(u, dtype=float)
        if a.shape != (self.n, self.n):
            raise DimensionError("A", (self.n, self.n), a.shape)
        if u.ndim == 1 and self.m == 1:
            u = u.reshape(-1, 1)
        if u.shape != (self.horizon, self.m):
            raise DimensionError("U", (self.horizon, self.m), u.shape)
        return a, u


class Trajectory(BaseModel):
    """States x_0..x_N and outputs y_0..y_N as rows."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    states: Matrix = Field(description="x_0..x_N, shape (N+1, n)")
    outputs: Matrix = Field(description="y_0..y_N, shape (N+1, p)")

    @model_validator(mode="after")
    def check_lengths(self) -> "Trajectory":
        if self.states.shape[0] != self.outputs.shape[0]:
            raise DimensionError("trajectory length", self.states.shape[0], self.outputs.shape[0])
        return self
