"""Post-hoc constraint check results."""

from pydantic import BaseModel, ConfigDict, Field


class ConstraintCheck(BaseModel):
    """Margin of one named constraint; negative means violated."""

    model_config = ConfigDict(frozen=True)

    name: str
    margin: float
    satisfied: bool


class ValidationReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    problem: str
    tolerance: float
    checks: list[ConstraintCheck] = Field(default_factory=list)
    exact_error: float
    approx_error: float
    objective: float

    @property
    def ok(self) -> bool:
        return all(c.satisfied for c in self.checks)

    @property
    def violations(self) -> list[ConstraintCheck]:
        return [c for c in self.checks if not c.satisfied]
