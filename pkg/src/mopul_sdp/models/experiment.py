"""Experiment data models: ideal instances, noise settings, results and manifests."""

from datetime import datetime, timezone
from typing import Any, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from ..exceptions import DimensionError
from .arrays import Matrix
from .solution import SolveStatus
from .system import SystemSpec

Metric = Literal["CE", "ACE", "REA", "REU"]

_ARRAY_MODEL = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")


class IdealInstance(BaseModel):
    """Ground-truth (A_hat, U_hat) and its exact states x_hat_0..x_hat_N (B = C = I)."""

    model_config = _ARRAY_MODEL

    schema_version: int = 1
    a_hat: Matrix
    u_hat: Matrix = Field(description="u_hat_0..u_hat_{N-1} as rows")
    x_hat: Matrix = Field(description="x_hat_0..x_hat_N as rows")
    seed: int

    @model_validator(mode="after")
    def check_recursion(self) -> "IdealInstance":
        n = self.a_hat.shape[0]
        horizon = self.u_hat.shape[0]
        if self.x_hat.shape != (horizon + 1, n):
            raise DimensionError("x_hat", (horizon + 1, n), self.x_hat.shape)
        drift = self.x_hat[1:] - self.x_hat[:-1] @ self.a_hat.T - self.u_hat
        if np.max(np.abs(drift), initial=0.0) > 1e-9 * max(1.0, float(np.max(np.abs(self.x_hat)))):
            raise ValueError("x_hat does not follow x_t = A_hat x_{t-1} + u_{t-1}")
        return self

    @property
    def n(self) -> int:
        return int(self.a_hat.shape[0])

    @property
    def horizon(self) -> int:
        return int(self.u_hat.shape[0])

    def spec(self, references: np.ndarray | None = None) -> SystemSpec:
        """System with B = C = I, x_0 = x_hat_0 and the given (default exact) references."""
        eye = np.eye(self.n)
        refs = self.x_hat[1:] if references is None else references
        return SystemSpec(b=eye, c=eye, x0=self.x_hat[0], references=refs)


class NoiseSpec(BaseModel):
    """Componentwise N(mu, sigma^2) reference noise."""

    model_config = ConfigDict(frozen=True)

    mu: float = 0.0
    sigma: float = Field(default=0.0, ge=0)


class InstanceResult(BaseModel):
    """Outcome of one solve inside a sweep; metrics are None for failed solves."""

    model_config = ConfigDict(frozen=True)

    cell: dict[str, float]
    instance: int
    status: SolveStatus
    metrics: dict[str, float | None] = Field(default_factory=dict)
    iterations: int = 0
    solve_time_sec: float = 0.0


class MetricSummary(BaseModel):
    """Sample statistics of one metric over the successful instances of a cell."""

    model_config = ConfigDict(frozen=True)

    metric: Metric
    mean: float
    std: float = Field(ge=0, description="Sample (n-1) standard deviation, 0 for one instance")
    count: int = Field(ge=1)
    failures: int = Field(default=0, ge=0)
    config: dict[str, float] = Field(default_factory=dict)


class RunManifest(BaseModel):
    """Parameter echo and artifact index written beside every output set."""

    model_config = ConfigDict(frozen=True)

    schema_version: int = 1
    command: str
    config: dict[str, Any] = Field(default_factory=dict)
    seed: int | None = None
    artifacts: list[str] = Field(default_factory=list)
    tool_version: str
    wall_time_sec: float = Field(ge=0)
    created_at: datetime = Field(default_factory=lambda: datetime.now(timezone.utc))

    @field_validator("artifacts")
    @classmethod
    def sort_artifacts(cls, v: list[str]) -> list[str]:
        return sorted(set(v))
