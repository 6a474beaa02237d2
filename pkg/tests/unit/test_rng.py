"""Tests for keyed random streams."""

import numpy as np
import pytest

from mopul_sdp.utils import rng


def test_streams_are_reproducible():
    a = rng.stream(7, "noise", 0, 11).random(5)
    b = rng.stream(7, "noise", 0, 11).random(5)
    np.testing.assert_array_equal(a, b)


def test_keys_separate_streams():
    base = rng.stream(7, "noise", 0, 11).random(5)
    assert not np.array_equal(base, rng.stream(7, "noise", 1, 11).random(5))
    assert not np.array_equal(base, rng.stream(7, "noise", 0, 12).random(5))
    assert not np.array_equal(base, rng.stream(7, "ideal", 0, 11).random(5))
    assert not np.array_equal(base, rng.stream(8, "noise", 0, 11).random(5))


def test_unknown_purpose():
    with pytest.raises(KeyError, match="purpose"):
        rng.stream(0, "weights")


def test_cell_key_is_stable():
    assert rng.cell_key(0.0, 0.1) == rng.cell_key(0.0, 0.1)
    assert rng.cell_key(0.0, 0.1) != rng.cell_key(0.1, 0.0)
    assert 0 <= rng.cell_key("table", 3) < 2**32


def test_normal_moments():
    draws = rng.normal(rng.stream(1, "noise", 0), 1.0, 2.0, 20000)
    assert np.all(np.isfinite(draws))
    assert draws.mean() == pytest.approx(1.0, abs=0.05)
    assert draws.std() == pytest.approx(2.0, abs=0.05)


def test_uniform_range():
    draws = rng.uniform(rng.stream(1, "ideal", 0), -0.5, 0.5, 1000)
    assert draws.min() >= -0.5 and draws.max() < 0.5
