"""Rank correlation and regression metrics against slow reference code."""

import numpy as np
import pytest

import oracles
from anbkit.metrics import (DegenerateInputError, kendall_tau,
                            mean_abs_error, r_squared)


def _random_tied_pair(rng):
    """A vector pair with ties but neither axis fully constant."""
    while True:
        n = int(rng.integers(2, 60))
        hi = int(rng.integers(2, 8))
        xs = rng.integers(0, hi, size=n).astype(float)
        ys = rng.integers(0, hi, size=n).astype(float)
        if np.any(xs != xs[0]) and np.any(ys != ys[0]):
            return xs, ys


def test_tau_matches_pair_oracle():
    rng = np.random.default_rng(2)
    for _ in range(1_000):
        xs, ys = _random_tied_pair(rng)
        assert kendall_tau(xs, ys) == oracles.kendall_tau_quadratic(
            list(xs), list(ys))


def test_tau_hand_cases():
    assert kendall_tau([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0
    assert kendall_tau([1, 2, 3, 4], [40, 30, 20, 10]) == -1.0
    # one discordant pair out of six
    assert abs(kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) - 4 / 6) <= 1e-9
    # ties on both axes, tau-b normalization
    xs = [1, 1, 2, 3]
    ys = [1, 2, 2, 3]
    want = oracles.kendall_tau_quadratic(xs, ys)
    assert abs(kendall_tau(xs, ys) - want) <= 1e-9
    assert abs(want - 4 / np.sqrt(5 * 5)) <= 1e-9


def test_tau_degenerate_axis_raises():
    with pytest.raises(DegenerateInputError):
        kendall_tau([1, 1, 1], [1, 2, 3])
    with pytest.raises(DegenerateInputError):
        kendall_tau([1, 2, 3], [5, 5, 5])


def test_tau_input_validation():
    with pytest.raises(ValueError):
        kendall_tau([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        kendall_tau([1], [2])
    with pytest.raises(ValueError):
        kendall_tau([1, np.nan, 3], [1, 2, 3])


def test_r_squared_cases():
    assert r_squared([1, 2, 3], [1, 2, 3]) == 1.0
    assert r_squared([0, 1, 2, 3], [1.5, 1.5, 1.5, 1.5]) == 0.0
    assert abs(r_squared([0, 1, 2, 3], [0, 1, 2, 4]) - 0.8) <= 1e-12


def test_r_squared_constant_truth_raises():
    with pytest.raises(DegenerateInputError):
        r_squared([2, 2, 2], [1, 2, 3])


def test_mean_abs_error():
    assert mean_abs_error([0, 1], [1, 3]) == 1.5
    assert mean_abs_error([5, 5], [5, 5]) == 0.0
