"""Tests for the grid module."""

import numpy as np
import pytest

from opgauss.exceptions import DomainError
from opgauss.grid import (
    GridFunction,
    Samples,
    embed_piecewise_constant,
    indicator,
    inner_product,
    integral,
    midpoints,
    norm_squared,
)
from opgauss.loader import parse_rows


def test_midpoints_convention():
    """Cell i is represented by (i - 1/2) / n."""
    assert np.allclose(midpoints(4), [0.125, 0.375, 0.625, 0.875])
    assert np.allclose(midpoints(2, length=10.0), [2.5, 7.5])
    with pytest.raises(DomainError):
        midpoints(0)


def test_grid_function_is_frozen_copy():
    """Values are copied on construction and cannot be written."""
    raw = np.array([1.0, 2.0])
    f = GridFunction(raw)
    raw[0] = 99.0
    assert f.values[0] == 1.0
    with pytest.raises(ValueError):
        f.values[0] = 5.0


@pytest.mark.parametrize("bad", [[], [1.0, np.nan], [np.inf]])
def test_grid_function_rejects_bad_values(bad):
    """Empty or non-finite values are rejected."""
    with pytest.raises(DomainError):
        GridFunction(np.array(bad))


def test_grid_function_arithmetic():
    """Sum, difference and scalar multiples act cellwise."""
    f = GridFunction([1.0, 2.0])
    g = GridFunction([3.0, -1.0])
    assert f + g == GridFunction([4.0, 1.0])
    assert f - g == GridFunction([-2.0, 3.0])
    assert 2 * f == GridFunction([2.0, 4.0])
    assert -f == GridFunction([-1.0, -2.0])
    with pytest.raises(DomainError, match="grid mismatch"):
        _ = f + GridFunction.constant(1.0, 3)


def test_embed_one_sample_per_cell():
    """m = n = 3 with midpoint positions keeps the values."""
    s = Samples([1 / 6, 3 / 6, 5 / 6], [1.0, 2.0, 3.0])
    assert np.allclose(embed_piecewise_constant(s, 3).values, [1.0, 2.0, 3.0])


def test_embed_zero_data():
    """y = 0 embeds to the zero function."""
    s = Samples([0.1, 0.35, 0.9], [0.0, 0.0, 0.0])
    assert not np.any(embed_piecewise_constant(s, 7).values)


def test_embed_nearest_fill():
    """Empty cells copy the nearest nonempty cell."""
    s = Samples([0.2, 0.7], [1.0, 3.0])
    assert np.allclose(embed_piecewise_constant(s, 4).values, [1.0, 1.0, 3.0, 3.0])


def test_embed_tie_goes_to_lower_cell():
    """A cell equidistant from two filled cells takes the lower one."""
    s = Samples([0.1, 0.9], [1.0, 5.0])
    # cells 0 and 4 filled; cell 2 is equidistant
    assert np.allclose(embed_piecewise_constant(s, 5).values, [1, 1, 1, 5, 5])


def test_embed_cell_means():
    """Several samples in a cell are averaged; cell edges belong to the left."""
    s = Samples([0.0, 0.1, 0.5, 0.75], [1.0, 3.0, 4.0, 8.0])
    assert np.allclose(embed_piecewise_constant(s, 2).values, [8 / 3, 8.0])


@pytest.mark.parametrize("m", [3, 7, 10, 100, 1000])
def test_embed_right_endpoints(m):
    """u = k/m at n = m puts sample k in cell k despite rounding in u * n."""
    y = np.arange(1.0, m + 1.0)
    s = Samples(np.arange(1, m + 1) / m, y)
    assert np.array_equal(embed_piecewise_constant(s, m).values, y)


def test_embed_decimal_right_endpoints():
    """Two-decimal positions read from text land in their own cells."""
    rows = [(f"{k / 100:.2f}", str(k)) for k in range(1, 101)]
    s = parse_rows(rows)
    f = embed_piecewise_constant(s, 100)
    assert np.array_equal(f.values, np.arange(1.0, 101.0))


def test_embed_no_data():
    """Empty Samples are an error."""
    with pytest.raises(DomainError, match="no data"):
        embed_piecewise_constant(Samples([], []), 4)


@pytest.mark.parametrize(
    "u, y",
    [
        ([0.5, 0.2], [1, 2]),
        ([0.2, 0.2], [1, 2]),
        ([-0.1, 0.5], [1, 2]),
        ([0.1], [1, 2]),
    ],
)
def test_samples_validation(u, y):
    """Positions must be strictly increasing in [0, 1] and match the values."""
    with pytest.raises(DomainError):
        Samples(u, y)


def test_inner_product_examples():
    """Constant, half-interval and disjoint indicators."""
    ones = GridFunction.constant(1.0, 6)
    assert inner_product(ones, ones) == pytest.approx(1.0)
    left = indicator(0.0, 0.5, 6)
    right = indicator(0.5, 1.0, 6)
    assert inner_product(left, left) == pytest.approx(0.5)
    assert inner_product(left, right) == 0.0
    with pytest.raises(DomainError):
        inner_product(ones, GridFunction.constant(1.0, 5))


def test_indicator_examples():
    """Partial cells carry the covered fraction."""
    assert np.allclose(indicator(0.0, 1.0, 4).values, [1, 1, 1, 1])
    assert np.allclose(indicator(0.0, 0.5, 2).values, [1, 0])
    assert np.allclose(indicator(0.25, 0.75, 2).values, [0.5, 0.5])
    assert integral(indicator(0.13, 0.71, 7)) == pytest.approx(0.58, abs=1e-15)
    with pytest.raises(DomainError):
        indicator(0.5, 0.5, 4)


def test_integral_examples():
    """integral is the mean of the cell values."""
    assert integral(GridFunction.constant(3.5, 9)) == pytest.approx(3.5)
    assert integral(indicator(0.0, 0.5, 10)) == pytest.approx(0.5)
    assert integral(GridFunction([1.0, 2.0, 3.0, 4.0])) == pytest.approx(2.5)


def test_norm_squared_zero_only_for_zero():
    """<f, f> = 0 exactly for the zero function."""
    assert norm_squared(GridFunction.constant(0.0, 3)) == 0.0
    assert norm_squared(GridFunction([0.0, 1e-150, 0.0])) > 0.0


def test_embed_restrict_identity(random_function_maker):
    """Embedding the midpoint samples at the same n is the identity."""
    f = random_function_maker(37)
    assert embed_piecewise_constant(f.restrict(), 37) == f
