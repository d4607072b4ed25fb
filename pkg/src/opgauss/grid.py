"""
Discrete representation of L2[0,1] functions on an n-cell equipartition.

Cell i (1-based) is the interval ((i-1)/n, i/n] and is represented by its
midpoint (i-1/2)/n everywhere in the package.
"""

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from opgauss.exceptions import DomainError

Number = Union[int, float]

# Positions this many ulps from a cell edge k/n count as sitting on it.
_EDGE_ULPS = 4


def midpoints(n: int, length: float = 1.0) -> np.ndarray:
    """Midpoints (i - 1/2) * length / n, i = 1..n."""
    if n < 1:
        raise DomainError(f"grid size must be at least 1, got {n}")
    return (np.arange(n, dtype=float) + 0.5) * (length / n)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """
    A function on [0,1], constant on each of the n cells of the equipartition.
    Values are copied and frozen on construction.
    """

    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.array(self.values, dtype=float).reshape(-1)
        if vals.size < 1:
            raise DomainError("a grid function needs at least one cell")
        if not np.all(np.isfinite(vals)):
            raise DomainError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        """Number of cells."""
        return self.values.size

    @property
    def midpoints(self) -> np.ndarray:
        """Cell midpoints on [0,1]."""
        return midpoints(self.n)

    @classmethod
    def constant(cls, c: Number, n: int) -> "GridFunction":
        """The constant function c on n cells."""
        return cls(np.full(n, float(c)))

    @classmethod
    def from_function(
        cls, func: Callable[[np.ndarray], np.ndarray], n: int
    ) -> "GridFunction":
        """Samples a vectorised function at the cell midpoints."""
        return cls(np.broadcast_to(func(midpoints(n)), (n,)))

    def restrict(self) -> "Samples":
        """Midpoint samples of this function."""
        return Samples(self.midpoints, self.values)

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _check_same_grid(self, other)
        return GridFunction(self.values - other.values)

    def __mul__(self, c: Number) -> "GridFunction":
        return GridFunction(float(c) * self.values)

    __rmul__ = __mul__

    def __neg__(self) -> "GridFunction":
        return GridFunction(-self.values)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GridFunction):
            return NotImplemented
        return self.n == other.n and bool(np.array_equal(self.values, other.values))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class Samples:
    """Discrete observations (u_k, y_k), k = 1..m, with u strictly increasing."""

    u: np.ndarray
    y: np.ndarray

    def __post_init__(self) -> None:
        u = np.array(self.u, dtype=float).reshape(-1)
        y = np.array(self.y, dtype=float).reshape(-1)
        if u.shape != y.shape:
            raise DomainError(
                f"sample positions and values differ in length ({u.size} != {y.size})"
            )
        if not (np.all(np.isfinite(u)) and np.all(np.isfinite(y))):
            raise DomainError("samples must be finite")
        if u.size and (u[0] < 0.0 or u[-1] > 1.0):
            raise DomainError("sample positions must lie in [0, 1]")
        if np.any(np.diff(u) <= 0.0):
            raise DomainError("sample positions must be strictly increasing")
        u.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "y", y)

    @property
    def m(self) -> int:
        """Number of observations."""
        return self.u.size


def _check_same_grid(f: GridFunction, g: GridFunction) -> None:
    if f.n != g.n:
        raise DomainError(f"grid mismatch: {f.n} cells vs {g.n} cells")


def _cell_index(u: np.ndarray, n: int) -> np.ndarray:
    """0-based index of the cell ((i-1)/n, i/n] holding each u."""
    scaled = u * n
    edges = np.rint(scaled)
    near = np.abs(scaled - edges) <= _EDGE_ULPS * np.spacing(np.maximum(edges, 1.0))
    return np.ceil(np.where(near, edges, scaled)).astype(int) - 1


def embed_piecewise_constant(samples: Samples, n: int) -> GridFunction:
    """
    Step-function embedding of discrete data on n cells.

    Each cell takes the mean of the samples falling in it. Empty cells copy the
    nearest nonempty cell, ties going to the lower index.
    """
    if samples.m == 0:
        raise DomainError("no data")
    if n < 1:
        raise DomainError(f"grid size must be at least 1, got {n}")

    cells = np.clip(_cell_index(samples.u, n), 0, n - 1)
    counts = np.bincount(cells, minlength=n)
    sums = np.bincount(cells, weights=samples.y, minlength=n)
    filled = np.flatnonzero(counts)
    means = sums[filled] / counts[filled]

    # Nearest filled cell for every cell
    idx = np.arange(n)
    right = np.clip(np.searchsorted(filled, idx), 0, filled.size - 1)
    left = np.clip(right - 1, 0, filled.size - 1)
    take_left = np.abs(idx - filled[left]) <= np.abs(filled[right] - idx)
    nearest = np.where(take_left, left, right)
    return GridFunction(means[nearest])


def inner_product(f: GridFunction, g: GridFunction) -> float:
    """Discrete L2 inner product (1/n) sum f_i g_i."""
    _check_same_grid(f, g)
    return float(np.dot(f.values, g.values)) / f.n


def norm_squared(f: GridFunction) -> float:
    """Squared L2 norm of a grid function."""
    return inner_product(f, f)


def indicator(a: float, b: float, n: int) -> GridFunction:
    """
    Indicator of [a, b]. Partially covered cells carry the covered fraction so
    that the integral is b - a.
    """
    if not 0.0 <= a < b <= 1.0:
        raise DomainError(f"indicator needs 0 <= a < b <= 1, got a={a}, b={b}")
    edges = np.arange(n + 1, dtype=float) / n
    overlap = np.minimum(b, edges[1:]) - np.maximum(a, edges[:-1])
    return GridFunction(np.clip(overlap, 0.0, None) * n)


def integral(f: GridFunction) -> float:
    """Integral over [0,1]."""
    return float(np.sum(f.values)) / f.n
