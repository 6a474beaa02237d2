"""Standard-form cone program emitted by the builder and consumed by the solver.

The program reads

    minimize    objective_coeffs @ x + objective_offset
    subject to  constraint_matrix @ x + s == offsets,  s in K_1 x ... x K_k

with the cones K_i listed in ``cone_blocks`` in row order. PSD blocks are
stored in symmetric-vector packing (lower triangle, off-diagonals times sqrt 2).
"""

from typing import Annotated, Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import DimensionError
from ..linalg import svec_dim
from .arrays import Matrix, Vector


class ZeroCone(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["zero"] = "zero"
    dim: int = Field(ge=1)

    @property
    def rows(self) -> int:
        return self.dim


class NonnegCone(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["nonneg"] = "nonneg"
    dim: int = Field(ge=1)

    @property
    def rows(self) -> int:
        return self.dim


class SecondOrderCone(BaseModel):
    """{(t, v) : ||v||_2 <= t}; ``dim`` counts the head."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["second_order"] = "second_order"
    dim: int = Field(ge=1)

    @property
    def rows(self) -> int:
        return self.dim


class PsdCone(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    kind: Literal["psd"] = "psd"
    side: int = Field(ge=1)

    @property
    def rows(self) -> int:
        return svec_dim(self.side)


ConeBlock = Annotated[
    ZeroCone | NonnegCone | SecondOrderCone | PsdCone, Field(discriminator="kind")
]


class VariableSlice(BaseModel):
    """Contiguous run of program variables holding one named symbol."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    start: int = Field(ge=0)
    stop: int = Field(ge=0)
    shape: tuple[int, ...] = Field(description="Shape the run reshapes to (row-major)")

    @property
    def size(self) -> int:
        return self.stop - self.start

    def take(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x[self.start : self.stop]).reshape(self.shape)


class ConicProgram(BaseModel):
    """Dense cone program with a symbol map back to (A, U, omega, xi, auxiliaries)."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True, extra="forbid")

    form: Literal["soc", "lmi", "raw"] = Field(default="raw", description="Error-term encoding")
    num_vars: int = Field(ge=1)
    objective_coeffs: Vector
    objective_offset: float = Field(default=0.0, description="Constant objective term")
    constraint_matrix: Matrix
    offsets: Vector
    cone_blocks: list[ConeBlock]
    var_names: dict[str, VariableSlice] = Field(default_factory=dict)
    fixed_omega: float | None = Field(default=None, description="omega^c when omega is not a variable")
    dims: dict[str, int] = Field(default_factory=dict, description="n, m, p, N of the source problem")

    @model_validator(mode="after")
    def check_shapes(self) -> "ConicProgram":
        rows = sum(block.rows for block in self.cone_blocks)
        if self.constraint_matrix.shape != (rows, self.num_vars):
            raise DimensionError("constraint matrix", (rows, self.num_vars), self.constraint_matrix.shape)
        if self.offsets.shape != (rows,):
            raise DimensionError("offsets", (rows,), self.offsets.shape)
        if self.objective_coeffs.shape != (self.num_vars,):
            raise DimensionError("objective", (self.num_vars,), self.objective_coeffs.shape)
        for name, sl in self.var_names.items():
            if sl.stop > self.num_vars or int(np.prod(sl.shape)) != sl.size:
                raise DimensionError(f"variable slice {name}", self.num_vars, (sl.start, sl.stop))
        return self

    @property
    def num_rows(self) -> int:
        return int(self.constraint_matrix.shape[0])

    def block_slices(self) -> list[tuple[ConeBlock, slice]]:
        out = []
        start = 0
        for block in self.cone_blocks:
            out.append((block, slice(start, start + block.rows)))
            start += block.rows
        return out

    def count_blocks(self, kind: str) -> int:
        return sum(1 for block in self.cone_blocks if block.kind == kind)

    def slack(self, x: np.ndarray) -> np.ndarray:
        return self.offsets - self.constraint_matrix @ np.asarray(x, dtype=float)

    def objective_value(self, x: np.ndarray) -> float:
        return float(self.objective_coeffs @ np.asarray(x, dtype=float) + self.objective_offset)
