"""
Sampling of Gaussian white noise and operator-defined Gaussian processes.

Two sampling routes coexist: the literal basis expansion W(f) = sum <f, e_i> X_i
over the orthonormal cell family e_i = sqrt(n) 1_{cell i}, and joint Gaussian
draws through a Cholesky factor of the Gram matrix. The first serves as an
oracle for the second.
"""

from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np
import scipy.linalg

from opgauss.common import (
    DEFAULT_N_QUAD,
    JITTER_RETRIES,
    JITTER_SCALE,
    logger,
)
from opgauss.exceptions import DomainError, NumericalError
from opgauss.grid import GridFunction, inner_product, midpoints
from opgauss.operators import (
    OperatorSpec,
    adjoint,
    apply,
    matrix_approx,
    pointwise_covariance_matrix,
)

# Blocks of the Philox counter space are addressed through its top 64-bit word.
_BLOCK_SHIFT = 192


@dataclass
class NoiseStream:
    """
    Counter-based source of standard normals.

    Every call to `normals` consumes one block of the Philox counter space, so
    the k-th block of a given seed is always the same, whatever happened
    before. Disjoint block indices give independent draws, which is how
    parallel workers partition the stream.
    """

    seed: int
    counter: int = 0

    def __post_init__(self) -> None:
        if not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be in [0, 2**64), got {self.seed}")
        if self.counter < 0:
            raise DomainError(f"counter must be non-negative, got {self.counter}")

    def block(self, index: int, shape) -> np.ndarray:
        """Standard normals of block `index`; does not move the counter."""
        bit_generator = np.random.Philox(key=self.seed, counter=index << _BLOCK_SHIFT)
        return np.random.Generator(bit_generator).standard_normal(shape)

    def normals(self, shape) -> np.ndarray:
        """The next block of standard normals."""
        draws = self.block(self.counter, shape)
        self.counter += 1
        return draws


@dataclass(frozen=True)
class JointSample:
    """One replicate of (W(f_1), ..., W(f_k)) or (O~(f_1), ..., O~(f_k))."""

    values: np.ndarray
    replicate: int


def _common_grid(fs: Sequence[GridFunction]) -> int:
    if not fs:
        raise DomainError("no test functions given")
    n = fs[0].n
    if any(f.n != n for f in fs):
        raise DomainError("test functions must share one grid")
    return n


def _to_samples(draws: np.ndarray) -> List[JointSample]:
    return [JointSample(row, r) for r, row in enumerate(draws)]


def cholesky_with_jitter(cov: np.ndarray) -> np.ndarray:
    """
    Lower Cholesky factor of a covariance matrix. On failure, JITTER_SCALE *
    max(diag) is added to the diagonal, up to JITTER_RETRIES times.
    """
    cov = np.asarray(cov, dtype=float)
    scale = float(np.max(np.diag(cov))) if cov.size else 0.0
    if scale == 0.0 and not np.any(cov):
        return np.zeros_like(cov)
    jitter = JITTER_SCALE * abs(scale)
    for attempt in range(JITTER_RETRIES + 1):
        try:
            return scipy.linalg.cholesky(
                cov + attempt * jitter * np.eye(cov.shape[0]), lower=True
            )
        except np.linalg.LinAlgError:
            logger.debug("cholesky failed, retry %d with jitter", attempt + 1)
    raise NumericalError("covariance not PSD")


def sample_white_noise_basis(
    fs: Sequence[GridFunction], stream: NoiseStream, reps: int = 1
) -> List[JointSample]:
    """
    Draws (W(f_1), ..., W(f_k)) by the truncated basis expansion with the
    n cell functions; exact in distribution for grid functions.
    """
    n = _common_grid(fs)
    coeffs = np.stack([f.values for f in fs]) / np.sqrt(n)  # <f_j, e_i>
    x = stream.normals((reps, n))
    return _to_samples(x @ coeffs.T)


def gram_matrix(op: OperatorSpec, fs: Sequence[GridFunction]) -> np.ndarray:
    """Gamma_jk = <O* f_j, O* f_k>."""
    _common_grid(fs)
    op_star = adjoint(op)
    images = [apply(op_star, f) for f in fs]
    k = len(images)
    gram = np.empty((k, k))
    for j in range(k):
        for i in range(j, k):
            gram[i, j] = gram[j, i] = inner_product(images[i], images[j])
    return gram


def sample_process(
    op: OperatorSpec, fs: Sequence[GridFunction], stream: NoiseStream, reps: int = 1
) -> List[JointSample]:
    """Draws (O~(f_1), ..., O~(f_k)) from the Cholesky factor of the Gram matrix."""
    chol = cholesky_with_jitter(gram_matrix(op, fs))
    z = stream.normals((reps, chol.shape[0]))
    return _to_samples(z @ chol.T)


def sample_set_noise(
    sets: Sequence[Tuple[float, float]], stream: NoiseStream, reps: int = 1
) -> List[JointSample]:
    """
    Draws (W(A_1), ..., W(A_k)) for intervals A_j. The basis is the family of
    normalised indicators of the cells cut out by all interval endpoints, in
    which every W(A_j) is an exact finite sum, so Cov(W(A), W(B)) = mu(A & B)
    and W(A u B) = W(A) + W(B) for adjacent intervals draw by draw.
    """
    if not sets:
        raise DomainError("no sets given")
    for a, b in sets:
        if not 0.0 <= a <= b <= 1.0:
            raise DomainError(f"interval [{a}, {b}] not within [0, 1]")
    edges = np.unique(np.concatenate([[0.0, 1.0], np.ravel(sets)]))
    lo, hi = edges[:-1], edges[1:]
    weights = np.stack(
        [np.where((lo >= a) & (hi <= b), np.sqrt(hi - lo), 0.0) for a, b in sets]
    )
    x = stream.normals((reps, lo.size))
    return _to_samples(x @ weights.T)


def sample_paths(
    op: OperatorSpec,
    n: int,
    stream: NoiseStream,
    reps: int = 1,
    n_quad: int = DEFAULT_N_QUAD,
    length: float = 1.0,
) -> List[GridFunction]:
    """Process values at the n midpoints of [0, length], reps independent paths."""
    points = midpoints(n, length)
    chol = cholesky_with_jitter(pointwise_covariance_matrix(op, points, n_quad, length))
    z = stream.normals((reps, n))
    return [GridFunction(row) for row in z @ chol.T]


def sample_path(
    op: OperatorSpec,
    n: int,
    stream: NoiseStream,
    n_quad: int = DEFAULT_N_QUAD,
    length: float = 1.0,
) -> GridFunction:
    """One path of the process at the n midpoints of [0, length]."""
    return sample_paths(op, n, stream, 1, n_quad, length)[0]


def sample_model_data(model, n: int, stream: NoiseStream, reps: int = 1) -> np.ndarray:
    """
    Draws y ~ N(0, M_n) where M_n is the midpoint matrix of the model operator
    (the discretely observed version of the model). Shape (reps, n).
    """
    if model.family not in ("mixed", "bm-noise"):
        raise DomainError(f"no covariance form for the {model.family!r} family")
    chol = cholesky_with_jitter(matrix_approx(model.operator(), n).matrix)
    return stream.normals((reps, n)) @ chol.T


def empirical_cov(samples: Sequence[JointSample]) -> np.ndarray:
    """Unbiased sample covariance across replicates."""
    if len(samples) < 2:
        raise DomainError("at least two replicates are needed")
    data = np.stack([s.values for s in samples])
    return np.atleast_2d(np.cov(data, rowvar=False, ddof=1))
