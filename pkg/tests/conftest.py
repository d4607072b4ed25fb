"""
Shared Pytest fixtures for Opgauss tests.
"""

import logging
import sys

import numpy as np
import pytest

from opgauss.gaussian import NoiseStream
from opgauss.grid import GridFunction


def pytest_configure(config):  # pylint: disable=unused-argument
    logging.basicConfig(
        stream=sys.stderr, level=logging.DEBUG, format="%(name)s:%(lineno)d %(message)s"
    )


@pytest.fixture
def stream():
    """A fresh noise stream with a fixed seed."""
    return NoiseStream(seed=12345)


@pytest.fixture
def rng():
    """Numpy generator for test data (independent of the package stream)."""
    return np.random.default_rng(2024)


@pytest.fixture
def random_function_maker(rng):
    """
    Returns a function that draws a random grid function with L2 norm at most
    `max_norm`, to avoid code duplication in tests.
    """

    def _make(n, max_norm=1.0):
        values = rng.standard_normal(n)
        norm = np.sqrt(np.mean(values**2))
        return GridFunction(values * (max_norm * rng.uniform(0.2, 1.0) / norm))

    return _make


@pytest.fixture
def csv_maker(tmp_path):
    """Writes (u, y) rows to a CSV file and returns its path."""

    def _make(u, y, header=True, name="data.csv", newline="\n"):
        lines = ["u,y"] if header else []
        lines += [f"{a!r},{b!r}" for a, b in zip(u, y)]
        path = tmp_path / name
        path.write_bytes((newline.join(lines) + newline).encode("utf-8"))
        return path

    return _make
