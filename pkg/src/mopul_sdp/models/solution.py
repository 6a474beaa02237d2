"""Solver configuration and result models."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..config import MopulSettings
from .arrays import Matrix, Vector

SolveStatus = Literal[
    "optimal", "primal_infeasible", "dual_infeasible", "iteration_limit", "numerical_failure"
]


class SolverConfig(BaseModel):
    """Interior-point settings."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    tol_primal: float = Field(default=1e-8, gt=0)
    tol_dual: float = Field(default=1e-8, gt=0)
    tol_gap: float = Field(default=1e-8, gt=0)
    max_iters: int = Field(default=200, ge=1)
    psd_side_cap: int = Field(default=50, ge=1)
    regularization: float = Field(default=1e-9, gt=0)
    step_fraction: float = Field(default=0.99, gt=0, lt=1)
    refinement_steps: int = Field(default=3, ge=0)

    @classmethod
    def from_settings(cls, settings: MopulSettings) -> "SolverConfig":
        return cls(
            tol_primal=settings.tol_primal,
            tol_dual=settings.tol_dual,
            tol_gap=settings.tol_gap,
            max_iters=settings.max_iters,
            psd_side_cap=settings.psd_side_cap,
            regularization=settings.kkt_regularization,
            step_fraction=settings.step_fraction,
        )


class Residuals(BaseModel):
    model_config = ConfigDict(frozen=True)

    primal: float
    dual: float
    gap: float


class IterationRecord(BaseModel):
    """One interior-point iteration, as written to the trace."""

    model_config = ConfigDict(frozen=True)

    iteration: int
    mu: float
    primal: float
    dual: float
    gap: float
    step: float
    sigma: float
    tau: float
    kappa: float


class Solution(BaseModel):
    """Solver output in program row/column order.

    ``duals`` covers every row: free multipliers on Zero rows, cone duals elsewhere.
    ``certificate`` is the normalized improving ray when a problem is infeasible
    (a dual ray with offsets @ ray == -1, or a primal ray with c @ ray == -1).
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    status: SolveStatus
    x: Vector
    slacks: Vector
    duals: Vector
    y: Vector = Field(default_factory=lambda: np.zeros(0), description="Equality (Zero-row) duals")
    z: Vector = Field(default_factory=lambda: np.zeros(0), description="Conic duals on the remaining rows")
    objective: float
    dual_objective: float
    residuals: Residuals
    iterations: int = Field(ge=0)
    certificate: Vector | None = None
    history: list[IterationRecord] = Field(default_factory=list)
    message: str = ""
    solve_time_sec: float = Field(default=0.0, ge=0)

    @property
    def ok(self) -> bool:
        return self.status == "optimal"


class BlockMargin(BaseModel):
    """Distance-like margin of one cone block (negative = outside)."""

    model_config = ConfigDict(frozen=True)

    index: int
    kind: str
    primal: float
    dual: float


class KktReport(BaseModel):
    """Residuals recomputed from (program, solution) outside the solve loop."""

    model_config = ConfigDict(frozen=True)

    primal_residual: float
    dual_residual: float
    gap: float
    margins: list[BlockMargin]
    min_primal_margin: float
    min_dual_margin: float
    certificate_residual: float | None = None
    certificate_value: float | None = None
    certificate_margin: float | None = None

    @property
    def certificate_verified(self) -> bool:
        return (
            self.certificate_residual is not None
            and self.certificate_value is not None
            and self.certificate_residual <= 1e-6
            and self.certificate_value <= -1.0 + 1e-6
            and self.certificate_margin is not None
            and self.certificate_margin >= -1e-6
        )


class SolutionRecord(BaseModel):
    """Solver output mapped back to the problem's symbols, as saved by the CLI."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    schema_version: int = 1
    problem: str
    form: str
    status: SolveStatus
    objective: float
    a: Matrix
    u: Matrix
    omega: float | None = Field(default=None, description="Control level (fixed or solved)")
    xi: Vector
    residuals: Residuals
    iterations: int
    certificate: Vector | None = None
    message: str = ""
