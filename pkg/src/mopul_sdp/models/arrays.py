"""Pydantic field types for dense numpy arrays.

Arrays validate from nested lists (JSON) or existing arrays, are stored as
float64 ``np.ndarray`` and serialize back to nested row lists.
"""

from typing import Annotated, Any

import numpy as np
from pydantic import BeforeValidator, PlainSerializer, WithJsonSchema


def _coerce(value: Any, ndim: int) -> np.ndarray:
    arr = np.array(value, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-D array, got {arr.ndim}-D")
    if not np.all(np.isfinite(arr)):
        raise ValueError("array has non-finite entries")
    arr.setflags(write=False)
    return arr


def _to_list(arr: np.ndarray) -> list:
    return np.asarray(arr).tolist()


Matrix = Annotated[
    np.ndarray,
    BeforeValidator(lambda v: _coerce(v, 2)),
    PlainSerializer(_to_list, return_type=list),
    WithJsonSchema(
        {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
    ),
]

Vector = Annotated[
    np.ndarray,
    BeforeValidator(lambda v: _coerce(v, 1)),
    PlainSerializer(_to_list, return_type=list),
    WithJsonSchema({"type": "array", "items": {"type": "number"}}),
]
