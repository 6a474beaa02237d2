"""Shared fixtures: seeded generators, small systems and solver settings."""

import numpy as np
import pytest

from mopul_sdp.models.conic import ConicProgram
from mopul_sdp.models.solution import SolverConfig
from mopul_sdp.models.system import SystemSpec


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20261017)


@pytest.fixture
def solver_config() -> SolverConfig:
    return SolverConfig()


def make_spec(
    rng: np.random.Generator, n: int = 2, m: int = 2, p: int | None = None, horizon: int = 3
) -> SystemSpec:
    """Random system with a well-conditioned full-column-rank C."""
    p = n if p is None else p
    c = np.eye(p, n) + 0.1 * rng.standard_normal((p, n))
    return SystemSpec(
        b=rng.standard_normal((n, m)),
        c=c,
        x0=rng.uniform(-0.5, 0.5, n),
        references=rng.uniform(-1.0, 1.0, (horizon, p)),
    )


def consistent_spec(
    a: np.ndarray, u: np.ndarray, x0: np.ndarray, b: np.ndarray | None = None, c: np.ndarray | None = None
) -> SystemSpec:
    """System whose references are the exact outputs of (A, U) from x0."""
    n = a.shape[0]
    b = np.eye(n) if b is None else b
    c = np.eye(n) if c is None else c
    states = [x0]
    for u_t in u:
        states.append(a @ states[-1] + b @ u_t)
    return SystemSpec(b=b, c=c, x0=x0, references=np.array(states[1:]) @ c.T)


def raw_program(c, m, h, blocks, offset: float = 0.0) -> ConicProgram:
    """ConicProgram from plain lists: minimize c x s.t. m x + s = h, s in blocks."""
    c = np.asarray(c, dtype=float)
    return ConicProgram(
        num_vars=c.size,
        objective_coeffs=c,
        objective_offset=offset,
        constraint_matrix=np.atleast_2d(np.asarray(m, dtype=float)),
        offsets=np.asarray(h, dtype=float),
        cone_blocks=blocks,
    )


@pytest.fixture
def small_spec(rng) -> SystemSpec:
    return make_spec(rng)
