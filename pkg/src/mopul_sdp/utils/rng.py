"""Keyed random streams for experiments.

Every draw comes from its own Philox stream keyed by
``SeedSequence(seed, spawn_key=(purpose, instance, cell, ...))``, so adding
instances or grid cells never shifts the numbers another cell sees. Cells are
keyed by a digest of their parameters, not their position in the grid.
"""

import hashlib

import numpy as np
from scipy.special import ndtri

PURPOSES = {"ideal": 1, "noise": 2}


def cell_key(*params: float | str) -> int:
    """Stable 32-bit key for a tuple of cell parameters."""
    text = "/".join(f"{p:.12g}" if isinstance(p, float) else str(p) for p in params)
    return int.from_bytes(hashlib.blake2b(text.encode(), digest_size=4).digest(), "big")


def stream(seed: int, purpose: str, *key: int) -> np.random.Generator:
    if purpose not in PURPOSES:
        raise KeyError(f"unknown stream purpose {purpose!r}")
    seq = np.random.SeedSequence(seed, spawn_key=(PURPOSES[purpose], *key))
    return np.random.Generator(np.random.Philox(seq))


def uniform(gen: np.random.Generator, low: float, high: float, size) -> np.ndarray:
    return gen.uniform(low, high, size)


def normal(gen: np.random.Generator, mean: float, std: float, size) -> np.ndarray:
    """Normal variates by inverse CDF of uniforms on (0, 1)."""
    u = gen.random(size)
    # random() can return exactly 0
    u = np.where(u == 0.0, np.nextafter(0.0, 1.0), u)
    return mean + std * ndtri(u)
