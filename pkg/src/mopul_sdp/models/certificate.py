"""Bound certificates: a theoretical bound checked against an observed value."""

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

TheoremTag = Literal["T2", "T3", "T4", "T5", "T6", "T7", "R3", "R5"]

HOLD_RTOL = 1e-7


def bound_holds(observed: float, bound: float) -> bool:
    """observed <= bound + 1e-7 * max(1, bound); False if either side is NaN."""
    if math.isnan(observed) or math.isnan(bound):
        return False
    return observed <= bound + HOLD_RTOL * max(1.0, bound)


class BoundCertificate(BaseModel):
    """One evaluated guarantee.

    ``valid`` is False when a precondition of the guarantee failed (``reason``
    says which); ``holds`` is still computed from the numbers. ``per_solution``
    marks bounds where an infimum over the optimal set was replaced by the
    value at the solved point.
    """

    model_config = ConfigDict(frozen=True)

    theorem: TheoremTag
    inputs: dict[str, float | list[float]] = Field(default_factory=dict)
    bound_value: float
    observed_value: float
    holds: bool = False
    slack: float = float("nan")
    valid: bool = True
    per_solution: bool = False
    reason: str = ""

    @model_validator(mode="before")
    @classmethod
    def derive_outcome(cls, data: dict) -> dict:
        if isinstance(data, dict) and "bound_value" in data and "observed_value" in data:
            bound, observed = float(data["bound_value"]), float(data["observed_value"])
            data = {**data, "holds": bound_holds(observed, bound), "slack": bound - observed}
        return data

    @classmethod
    def not_evaluated(cls, theorem: TheoremTag, reason: str, **inputs) -> "BoundCertificate":
        return cls(
            theorem=theorem,
            inputs=inputs,
            bound_value=float("nan"),
            observed_value=float("nan"),
            valid=False,
            reason=reason,
        )
