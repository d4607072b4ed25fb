"""
Fredholm determinants d(K) of integral operators on L2[0,1].

Three routes:
  * series   -- the defining series, truncated, with midpoint product
                quadrature (an oracle; capped order and grid),
  * matrix   -- log det(I + Q_n) with Q_n = K(m_i, m_j) / n,
  * analytic -- closed forms for the mixed and Brownian-with-noise families.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np

from opgauss.common import SERIES_MAX_GRID, SERIES_MAX_ORDER, logger
from opgauss.exceptions import DomainError, NumericalError
from opgauss.grid import midpoints
from opgauss.operators import Kernel

# Largest number of k-tuples enumerated literally by the series route.
_LITERAL_TUPLES = 1 << 16


@dataclass(frozen=True)
class DetResult:
    """A Fredholm determinant with its provenance."""

    det: float
    log_det: Optional[float]
    route: str
    n: Optional[int] = None
    k_max: Optional[int] = None
    terms: Tuple[float, ...] = ()

    @property
    def log_defined(self) -> bool:
        """False when the determinant is not positive."""
        return self.log_det is not None

    def to_dict(self) -> dict:
        """JSON-ready view."""
        return {
            "det": self.det,
            "log_det": self.log_det,
            "route": self.route,
            "n": self.n,
            "k_max": self.k_max,
        }


def _det_from_log(log_abs: float, sign: float = 1.0) -> float:
    """sign * exp(log_abs), as a signed inf when it overflows a float."""
    try:
        return sign * math.exp(log_abs)
    except OverflowError:
        logger.warning("determinant overflows a float (log |det| = %.6g)", log_abs)
        return math.copysign(math.inf, sign)


def log_cosh(x: float) -> float:
    """log cosh x without overflow."""
    x = abs(float(x))
    return x + math.log1p(math.exp(-2.0 * x)) - math.log(2.0)


def _series_term_literal(q: np.ndarray, k: int) -> float:
    n = q.shape[0]
    idx = np.array(list(itertools.product(range(n), repeat=k)), dtype=int)
    minors = q[idx[:, :, None], idx[:, None, :]]
    return float(np.sum(np.linalg.det(minors))) / math.factorial(k)


def _series_terms(q: np.ndarray, k_max: int) -> Tuple[float, ...]:
    """
    Terms (1/k!) sum over k-tuples of det[Q(x_p, x_q)], k = 0..k_max. Tuples
    with a repeated node give a zero determinant, so the k-th term equals the
    sum of the k x k principal minors of Q, which is the k-th coefficient of
    det(I + zQ); that form is used once the tuple count gets large.
    """
    n = q.shape[0]
    terms = [1.0]
    coeffs = None
    for k in range(1, k_max + 1):
        if k > n:
            terms.append(0.0)
        elif n**k <= _LITERAL_TUPLES:
            terms.append(_series_term_literal(q, k))
        else:
            if coeffs is None:
                coeffs = np.real_if_close(np.poly(q))
            terms.append(float((-1) ** k * np.real(coeffs[k])))
    return tuple(terms)


def fredholm_det_series(kernel: Kernel, grid_n: int, k_max: int) -> DetResult:
    """
    Truncated defining series of d(K) on the midpoint product grid. Capped at
    k_max <= SERIES_MAX_ORDER and grid_n <= SERIES_MAX_GRID.
    """
    if not 0 <= k_max <= SERIES_MAX_ORDER:
        raise DomainError(f"k_max must be in [0, {SERIES_MAX_ORDER}], got {k_max}")
    if not 1 <= grid_n <= SERIES_MAX_GRID:
        raise DomainError(f"grid_n must be in [1, {SERIES_MAX_GRID}], got {grid_n}")
    terms = _series_terms(kernel.matrix(grid_n), k_max)
    det = math.fsum(terms)
    log_det = math.log(det) if det > 0.0 else None
    if log_det is None:
        logger.warning("series determinant %g is not positive; log undefined", det)
    return DetResult(det, log_det, "series", grid_n, k_max, terms)


def fredholm_det_matrix(kernel: Kernel, n: int) -> DetResult:
    """log det(I + Q_n) through a pivoted LU factorization."""
    if n < 1:
        raise DomainError(f"grid size must be at least 1, got {n}")
    sign, log_abs = np.linalg.slogdet(np.eye(n) + kernel.matrix(n))
    if sign == 0.0 or not np.isfinite(log_abs):
        raise NumericalError(f"determinant zero for kernel {kernel.name!r} at n={n}")
    det = _det_from_log(float(log_abs), float(sign))
    log_det = float(log_abs) if sign > 0 else None
    return DetResult(det, log_det, "matrix", n)


def fredholm_det_analytic(model) -> DetResult:
    """
    Closed forms: d(delta 1) = 1 + delta for the mixed family and
    d(lambda^2 B) = cosh(lambda) for Brownian motion with noise.
    """
    if model.family == "mixed":
        return DetResult(1.0 + model.delta, math.log1p(model.delta), "analytic")
    if model.family == "bm-noise":
        lc = log_cosh(model.lam)
        return DetResult(_det_from_log(lc), lc, "analytic")
    raise DomainError(f"no closed form for the {model.family!r} family")


def log_det_multiplication(
    func: Callable[[np.ndarray], np.ndarray], n: int
) -> Tuple[float, float]:
    """
    (1/n) log det S_n with S_n = diag(D(m_i)), and the midpoint estimate of
    int_0^1 log D(t) dt. The two coincide on the midpoint grid.
    """
    d = np.broadcast_to(np.asarray(func(midpoints(n)), dtype=float), (n,))
    if not np.all(np.isfinite(d)) or np.any(d <= 0.0):
        raise DomainError("D not bounded below: D(t) must be positive on the grid")
    logs = np.log(d)
    riemann = float(np.sum(logs)) / n
    quadrature = float(np.mean(logs))
    return riemann, quadrature
