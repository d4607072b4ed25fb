"""
Symbolic operator algebra on L2[0,1].

Operators are immutable expression trees. They are discretized on demand by
the midpoint rule: an integral kernel K becomes the matrix K(m_i, m_j) / n with
m_i = (i - 1/2) / n, and a multiplication operator D becomes diag(D(m_i)).
Kernels are called as K(t, s) where t is the output point and s the
integration variable, so (Kf)(t) = int K(t, s) f(s) ds.
"""

import abc
import functools
import re
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np

from opgauss.common import DEFAULT_N_QUAD, logger
from opgauss.exceptions import DomainError
from opgauss.grid import GridFunction, midpoints

KernelFunc = Callable[[np.ndarray, np.ndarray], np.ndarray]
ScalarFunc = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Kernel:
    """
    A bivariate kernel K(t, s) with structural flags.

    `triangular` means K(t, s) = 0 for s > t. `func` must evaluate the
    diagonal s = t as the limit from the lower triangle. A transposed kernel
    evaluates func(s, t) and, if triangular, lives on the upper triangle.
    """

    name: str
    func: KernelFunc = field(compare=True, repr=False)
    symmetric: bool = False
    triangular: bool = False
    scale: float = 1.0
    transposed: bool = False

    def __call__(self, t, s) -> np.ndarray:
        t, s = np.broadcast_arrays(
            np.asarray(t, dtype=float), np.asarray(s, dtype=float)
        )
        if self.transposed:
            t, s = s, t
        values = np.broadcast_to(np.asarray(self.func(t, s), dtype=float), t.shape)
        return self.scale * values

    @property
    def lower(self) -> bool:
        """Supported on the lower triangle s <= t."""
        return self.triangular and not self.transposed

    @property
    def upper(self) -> bool:
        """Supported on the upper triangle s >= t."""
        return self.triangular and self.transposed

    def scaled(self, c: float) -> "Kernel":
        """The kernel c * K."""
        return replace(self, scale=self.scale * float(c))

    def transpose(self) -> "Kernel":
        """The kernel (t, s) -> K(s, t)."""
        if self.symmetric:
            return self
        return replace(self, transposed=not self.transposed)

    def matrix(self, n: int) -> np.ndarray:
        """
        Midpoint discretization Q_ij = K(m_i, m_j) / n. Kernels that jump
        across the diagonal get half weight there, since only half of the
        diagonal cell lies in their support.
        """
        m = midpoints(n)
        q = self(m[:, None], m[None, :]) / n
        if self.triangular:
            q[np.diag_indices(n)] *= 0.5
        return q

    def support(self, t1: float, t2: float, length: float) -> Tuple[float, float]:
        """Integration range of int K(t1, s) K(t2, s) ds on [0, length]."""
        if self.lower:
            return 0.0, min(t1, t2)
        if self.upper:
            return max(t1, t2), length
        return 0.0, length


def _ones(t: np.ndarray, _s: np.ndarray) -> np.ndarray:
    return np.ones_like(t)


def _brownian(t: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.minimum(t, s)


def _bridge(t: np.ndarray, s: np.ndarray) -> np.ndarray:
    return np.minimum(t, s) - t * s


def _forward(t: np.ndarray, s: np.ndarray) -> np.ndarray:
    return (s <= t).astype(float)


def _ou(t: np.ndarray, s: np.ndarray, alpha: float, lam: float) -> np.ndarray:
    lag = t - s
    return np.where(lag >= 0.0, alpha * np.exp(-lam * np.maximum(lag, 0.0)), 0.0)


ONES = Kernel("ones", _ones, symmetric=True)
BROWNIAN = Kernel("brownian", _brownian, symmetric=True)
BRIDGE = Kernel("bb", _bridge, symmetric=True)
FORWARD = Kernel("fwd", _forward, triangular=True)

KERNEL_REGISTRY: Dict[str, Kernel] = {
    k.name: k for k in (ONES, BROWNIAN, BRIDGE, FORWARD)
}

_OU_PATTERN = re.compile(r"^ou\(\s*([^,\s]+)\s*,\s*([^)\s]+)\s*\)$")


@functools.lru_cache(maxsize=None)
def ou_kernel(alpha: float, lam: float) -> Kernel:
    """Causal Ornstein-Uhlenbeck kernel alpha * exp(-lam (t - s)) 1{s <= t}."""
    if alpha <= 0 or lam <= 0:
        raise DomainError(f"ou kernel needs alpha, lambda > 0, got {alpha}, {lam}")
    func = functools.partial(_ou, alpha=float(alpha), lam=float(lam))
    return Kernel(f"ou({alpha:g},{lam:g})", func, triangular=True)


def kernel_from_name(name: str) -> Kernel:
    """Looks up `ones`, `brownian`, `bb`, `fwd` or parses `ou(alpha,lambda)`."""
    key = name.strip()
    if key in KERNEL_REGISTRY:
        return KERNEL_REGISTRY[key]
    match = _OU_PATTERN.match(key)
    if match:
        try:
            return ou_kernel(float(match.group(1)), float(match.group(2)))
        except ValueError as exc:
            raise DomainError(f"bad ou parameters in {name!r}") from exc
    known = ", ".join(sorted(KERNEL_REGISTRY) + ["ou(alpha,lambda)"])
    raise DomainError(f"unknown kernel {name!r} (known: {known})")


# ==========
# Operators
# ==========


class OperatorSpec(abc.ABC):
    """Base class of the operator expression tree."""

    #: Number of stacked copies of [0,1] the operator acts on.
    blocks = 1

    @abc.abstractmethod
    def act(self, values: np.ndarray) -> np.ndarray:
        """Discrete action on the values of a grid function."""

    @abc.abstractmethod
    def discretize(self, n: int) -> np.ndarray:
        """Midpoint matrix on n cells (per block)."""

    @abc.abstractmethod
    def adjoint(self) -> "OperatorSpec":
        """The adjoint operator."""


@dataclass(frozen=True)
class Identity(OperatorSpec):
    """The identity operator I."""

    def act(self, values: np.ndarray) -> np.ndarray:
        return values.copy()

    def discretize(self, n: int) -> np.ndarray:
        return np.eye(n)

    def adjoint(self) -> OperatorSpec:
        return self


@dataclass(frozen=True)
class Multiplication(OperatorSpec):
    """(Df)(t) = D(t) f(t)."""

    func: ScalarFunc = field(repr=False)
    name: str = "D"

    def values_on(self, n: int) -> np.ndarray:
        """D evaluated at the midpoints of n cells."""
        return np.broadcast_to(
            np.asarray(self.func(midpoints(n)), dtype=float), (n,)
        ).copy()

    def act(self, values: np.ndarray) -> np.ndarray:
        return self.values_on(values.size) * values

    def discretize(self, n: int) -> np.ndarray:
        return np.diag(self.values_on(n))

    def adjoint(self) -> OperatorSpec:
        return self


@dataclass(frozen=True)
class Integral(OperatorSpec):
    """(Kf)(t) = int_0^1 K(t, s) f(s) ds."""

    kernel: Kernel

    def act(self, values: np.ndarray) -> np.ndarray:
        return self.kernel.matrix(values.size) @ values

    def discretize(self, n: int) -> np.ndarray:
        return self.kernel.matrix(n)

    def adjoint(self) -> OperatorSpec:
        if self.kernel.symmetric:
            return self
        transposed = self.kernel.transpose()
        if transposed.lower:
            return Triangular(transposed)
        return Integral(transposed)


@dataclass(frozen=True)
class Triangular(Integral):
    """Volterra operator (Kf)(t) = int_0^t K(t, s) f(s) ds."""

    def __post_init__(self) -> None:
        if not self.kernel.lower:
            raise DomainError(f"kernel {self.kernel.name!r} is not lower triangular")

    def adjoint(self) -> OperatorSpec:
        return Integral(self.kernel.transpose())


@dataclass(frozen=True)
class Scaled(OperatorSpec):
    """c * O."""

    factor: float
    operator: OperatorSpec

    @property
    def blocks(self) -> int:  # type: ignore[override]
        return self.operator.blocks

    def act(self, values: np.ndarray) -> np.ndarray:
        return self.factor * self.operator.act(values)

    def discretize(self, n: int) -> np.ndarray:
        return self.factor * self.operator.discretize(n)

    def adjoint(self) -> OperatorSpec:
        return Scaled(self.factor, self.operator.adjoint())


@dataclass(frozen=True)
class Sum(OperatorSpec):
    """A + B."""

    left: OperatorSpec
    right: OperatorSpec

    def __post_init__(self) -> None:
        _check_blocks(self.left, self.right)

    @property
    def blocks(self) -> int:  # type: ignore[override]
        return self.left.blocks

    def act(self, values: np.ndarray) -> np.ndarray:
        return self.left.act(values) + self.right.act(values)

    def discretize(self, n: int) -> np.ndarray:
        return self.left.discretize(n) + self.right.discretize(n)

    def adjoint(self) -> OperatorSpec:
        return Sum(self.left.adjoint(), self.right.adjoint())


@dataclass(frozen=True)
class Compose(OperatorSpec):
    """A B, i.e. apply B first."""

    left: OperatorSpec
    right: OperatorSpec

    def __post_init__(self) -> None:
        _check_blocks(self.left, self.right)

    @property
    def blocks(self) -> int:  # type: ignore[override]
        return self.left.blocks

    def act(self, values: np.ndarray) -> np.ndarray:
        return self.left.act(self.right.act(values))

    def discretize(self, n: int) -> np.ndarray:
        return self.left.discretize(n) @ self.right.discretize(n)

    def adjoint(self) -> OperatorSpec:
        return Compose(self.right.adjoint(), self.left.adjoint())


@dataclass(frozen=True)
class CompositeDKD(OperatorSpec):
    """O = D (I + K) D with D a multiplication and K an integral operator."""

    func: ScalarFunc = field(repr=False)
    kernel: Kernel = ONES

    def scaling(self, n: int) -> np.ndarray:
        """D at the midpoints; must be strictly positive and finite."""
        d = Multiplication(self.func).values_on(n)
        if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
            raise DomainError("D not bounded below: D(t) must be positive on the grid")
        return d

    def core(self, n: int) -> np.ndarray:
        """R_n = I + Q_n."""
        return np.eye(n) + self.kernel.matrix(n)

    def act(self, values: np.ndarray) -> np.ndarray:
        d = self.scaling(values.size)
        g = d * values
        return d * (g + self.kernel.matrix(values.size) @ g)

    def discretize(self, n: int) -> np.ndarray:
        d = self.scaling(n)
        return (d[:, None] * self.core(n)) * d[None, :]

    def adjoint(self) -> OperatorSpec:
        if self.kernel.symmetric:
            return self
        return CompositeDKD(self.func, self.kernel.transpose())


@dataclass(frozen=True)
class Block2x2(OperatorSpec):
    """
    A 2x2 operator matrix acting on L2[0,1] + L2[0,1], represented on a doubled
    grid whose first half is component 1.
    """

    o11: OperatorSpec
    o12: OperatorSpec
    o21: OperatorSpec
    o22: OperatorSpec

    blocks = 2

    def __post_init__(self) -> None:
        for sub in (self.o11, self.o12, self.o21, self.o22):
            if sub.blocks != 1:
                raise DomainError("Block2x2 entries must act on a single copy of [0,1]")

    def act(self, values: np.ndarray) -> np.ndarray:
        if values.size % 2:
            raise DomainError("a block operator needs an even number of cells")
        half = values.size // 2
        first, second = values[:half], values[half:]
        return np.concatenate(
            [
                self.o11.act(first) + self.o12.act(second),
                self.o21.act(first) + self.o22.act(second),
            ]
        )

    def discretize(self, n: int) -> np.ndarray:
        return np.block(
            [
                [self.o11.discretize(n), self.o12.discretize(n)],
                [self.o21.discretize(n), self.o22.discretize(n)],
            ]
        )

    def adjoint(self) -> OperatorSpec:
        return Block2x2(
            self.o11.adjoint(),
            self.o21.adjoint(),
            self.o12.adjoint(),
            self.o22.adjoint(),
        )


@dataclass(frozen=True)
class SpectralOperator(OperatorSpec):
    """
    Self-adjoint operator with eigenfunctions sqrt(2) sin(k pi t), k = 1..m,
    and the given eigenvalues; it acts as the identity on the orthogonal
    complement of that span.
    """

    eigenvalues: Tuple[float, ...]

    def __post_init__(self) -> None:
        eig = tuple(float(v) for v in self.eigenvalues)
        if not eig:
            raise DomainError("a spectral operator needs at least one eigenvalue")
        if not all(np.isfinite(eig)):
            raise DomainError("eigenvalues must be finite")
        object.__setattr__(self, "eigenvalues", eig)

    @property
    def m(self) -> int:
        """Truncation level."""
        return len(self.eigenvalues)

    def basis(self, points: np.ndarray) -> np.ndarray:
        """Eigenfunctions evaluated at points, shape (len(points), m)."""
        k = np.arange(1, self.m + 1)
        return np.sqrt(2.0) * np.sin(np.pi * np.outer(points, k))

    def discretize(self, n: int) -> np.ndarray:
        phi = self.basis(midpoints(n))
        shift = np.asarray(self.eigenvalues) - 1.0
        return np.eye(n) + (phi * shift) @ phi.T / n

    def act(self, values: np.ndarray) -> np.ndarray:
        phi = self.basis(midpoints(values.size))
        coeffs = phi.T @ values / values.size
        shift = np.asarray(self.eigenvalues) - 1.0
        return values + phi @ (shift * coeffs)

    def adjoint(self) -> OperatorSpec:
        return self

    def squared(self) -> "SpectralOperator":
        """R^2, with squared eigenvalues."""
        return SpectralOperator(tuple(v * v for v in self.eigenvalues))

    def kernel_of_square_minus_identity(self, s, t) -> np.ndarray:
        """Truncated Mercer series of R^2 - I at (s, t)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        t = np.atleast_1d(np.asarray(t, dtype=float))
        weights = np.asarray(self.eigenvalues) ** 2 - 1.0
        return np.einsum("ik,k,ik->i", self.basis(s), weights, self.basis(t))


def _check_blocks(left: OperatorSpec, right: OperatorSpec) -> None:
    if left.blocks != right.blocks:
        raise DomainError("operands act on different numbers of components")


@dataclass(frozen=True)
class MatrixApprox:
    """A discretized operator; S_n and R_n are present for D(I+K)D operators."""

    matrix: np.ndarray
    scaling: Optional[np.ndarray] = None
    core: Optional[np.ndarray] = None


# ==========
# Operations
# ==========


def apply(op: OperatorSpec, f: GridFunction) -> GridFunction:
    """Midpoint discretization of Of."""
    if f.n % op.blocks:
        raise DomainError(
            f"grid of {f.n} cells does not fit a {op.blocks}-block operator"
        )
    return GridFunction(op.act(np.asarray(f.values)))


def adjoint(op: OperatorSpec) -> OperatorSpec:
    """The adjoint O*."""
    return op.adjoint()


def matrix_approx(op: OperatorSpec, n: int) -> MatrixApprox:
    """
    The n x n midpoint matrix of O (2n x 2n for block operators). For
    O = D(I+K)D the factors S_n = diag(D(m_i)) and R_n = I + Q_n come along,
    and M_n is assembled as S_n R_n S_n entrywise.
    """
    if n < 1:
        raise DomainError(f"grid size must be at least 1, got {n}")
    if isinstance(op, CompositeDKD):
        d = op.scaling(n)
        core = op.core(n)
        return MatrixApprox((d[:, None] * core) * d[None, :], np.diag(d), core)
    return MatrixApprox(op.discretize(n))


def _unwrap_kernel(op: OperatorSpec) -> Tuple[Kernel, float]:
    factor = 1.0
    while isinstance(op, Scaled):
        factor *= op.factor
        op = op.operator
    if not isinstance(op, Integral):
        raise DomainError(f"no local continuity formula for {type(op).__name__}")
    return op.kernel, factor


def _midpoint_nodes(a: float, b: float, n_quad: int) -> np.ndarray:
    return a + (np.arange(n_quad) + 0.5) * ((b - a) / n_quad)


def pointwise_covariance(
    op: OperatorSpec,
    t1: float,
    t2: float,
    n_quad: int = DEFAULT_N_QUAD,
    length: float = 1.0,
) -> float:
    """
    Covariance of the process values at t1 and t2, int K(t1, s) K(t2, s) ds,
    by the midpoint rule over the support of the integrand (for triangular
    kernels, [0, min(t1, t2)]).
    """
    kernel, factor = _unwrap_kernel(op)
    for t in (t1, t2):
        if not 0.0 <= t <= length:
            raise DomainError(f"point {t} outside [0, {length}]")
    a, b = kernel.support(t1, t2, length)
    if b <= a:
        return 0.0
    s = _midpoint_nodes(a, b, n_quad)
    total = np.sum(kernel(t1, s) * kernel(t2, s)) * (b - a) / n_quad
    return float(factor * factor * total)


def pointwise_covariance_matrix(
    op: OperatorSpec,
    points: Sequence[float],
    n_quad: int = DEFAULT_N_QUAD,
    length: float = 1.0,
) -> np.ndarray:
    """Covariance matrix of the process at the given points."""
    kernel, factor = _unwrap_kernel(op)
    pts = np.asarray(points, dtype=float)
    if np.any(pts < 0.0) or np.any(pts > length):
        raise DomainError(f"points must lie in [0, {length}]")
    size = pts.size
    cov = np.zeros((size, size))
    q = (np.arange(n_quad) + 0.5) / n_quad
    for i in range(size):
        others = pts[i:]
        if kernel.lower:
            a, b = np.zeros_like(others), np.minimum(pts[i], others)
        elif kernel.upper:
            a, b = np.maximum(pts[i], others), np.full_like(others, length)
        else:
            a, b = np.zeros_like(others), np.full_like(others, length)
        width = np.clip(b - a, 0.0, None)
        nodes = a[:, None] + q[None, :] * width[:, None]
        row = np.sum(kernel(pts[i], nodes) * kernel(others[:, None], nodes), axis=1)
        cov[i, i:] = row * width / n_quad
        cov[i:, i] = cov[i, i:]
    logger.debug("pointwise covariance matrix of size %d (n_quad=%d)", size, n_quad)
    return factor * factor * cov


def operator_variance(op: OperatorSpec) -> OperatorSpec:
    """The variance operator O O*."""
    return Compose(op, op.adjoint())


def same_law(a: OperatorSpec, b: OperatorSpec, n: int, atol: float = 1e-10) -> bool:
    """Whether the discretized variances A A* and B B* agree on n cells."""
    va = matrix_approx(operator_variance(a), n).matrix
    vb = matrix_approx(operator_variance(b), n).matrix
    return va.shape == vb.shape and bool(np.allclose(va, vb, rtol=0.0, atol=atol))


def _require_block(op: OperatorSpec) -> Block2x2:
    if not isinstance(op, Block2x2):
        raise DomainError(f"expected a Block2x2 operator, got {type(op).__name__}")
    return op


def block_cross_covariance(op: OperatorSpec) -> OperatorSpec:
    """Covariance operator between the two components: block (1,2) of O O*."""
    b = _require_block(op)
    return Sum(Compose(b.o11, b.o21.adjoint()), Compose(b.o12, b.o22.adjoint()))


def block_component_variance(op: OperatorSpec, component: int) -> OperatorSpec:
    """Variance operator of component 1 or 2: a diagonal block of O O*."""
    b = _require_block(op)
    if component == 1:
        first, second = b.o11, b.o12
    elif component == 2:
        first, second = b.o21, b.o22
    else:
        raise DomainError(f"component must be 1 or 2, got {component}")
    return Sum(Compose(first, first.adjoint()), Compose(second, second.adjoint()))


def bb_noise_operator(m: int) -> SpectralOperator:
    """
    Square root of I + (Brownian bridge covariance), truncated to the first m
    sine modes: eigenvalues sqrt(1 + 1 / (k pi)^2).
    """
    if m < 1:
        raise DomainError(f"truncation level must be at least 1, got {m}")
    k = np.arange(1, m + 1, dtype=float)
    return SpectralOperator(tuple(np.sqrt(1.0 + 1.0 / (k * np.pi) ** 2)))
