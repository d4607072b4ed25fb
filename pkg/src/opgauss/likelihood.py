"""
Multivariate and functional log-likelihoods (on the -2 log L scale, up to
constants), and the quadratic-form solvers of the two model families:

  mixed     K = alpha (I + delta 1),          D = sqrt(alpha), K = delta * ones
  bm-noise  K = alpha^2 (I + lambda^2 B),     D = alpha,       K = lambda^2 * min
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import scipy.linalg

from opgauss.common import MODEL_FAMILIES
from opgauss.exceptions import DomainError, NumericalError
from opgauss.fredholm import fredholm_det_analytic
from opgauss.grid import GridFunction, integral, norm_squared
from opgauss.operators import (
    BROWNIAN,
    ONES,
    CompositeDKD,
    OperatorSpec,
    Triangular,
    ou_kernel,
)


def _constant(value: float):
    def func(t: np.ndarray) -> np.ndarray:
        return np.full_like(t, value)

    return func


@dataclass(frozen=True)
class ModelParams:
    """Parameters of a model family: (alpha, delta) or (alpha, lambda)."""

    family: str
    alpha: float
    delta: Optional[float] = None
    lam: Optional[float] = None

    def __post_init__(self) -> None:
        if self.family not in MODEL_FAMILIES:
            raise DomainError(f"unknown model family {self.family!r}")
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"alpha must be positive, got {self.alpha}")
        if self.family == "mixed":
            if self.delta is None or not (
                math.isfinite(self.delta) and self.delta >= 0
            ):
                raise DomainError(f"delta must be non-negative, got {self.delta}")
        elif self.lam is None or not (math.isfinite(self.lam) and self.lam >= 0):
            raise DomainError(f"lambda must be non-negative, got {self.lam}")

    @classmethod
    def mixed(cls, alpha: float, delta: float) -> "ModelParams":
        """Noise of variance alpha plus a shared level of variance alpha * delta."""
        return cls("mixed", float(alpha), delta=float(delta))

    @classmethod
    def bm_noise(cls, alpha: float, lam: float) -> "ModelParams":
        """Brownian motion with noise, alpha^2 (I + lambda^2 B)."""
        return cls("bm-noise", float(alpha), lam=float(lam))

    @classmethod
    def ou(cls, alpha: float, lam: float) -> "ModelParams":
        """Ornstein-Uhlenbeck operator alpha exp(-lambda (t - s)) 1{s <= t}."""
        return cls("ou", float(alpha), lam=float(lam))

    @property
    def noise_scale(self) -> float:
        """The constant multiplication operator D of O = D (I + K) D."""
        if self.family == "mixed":
            return math.sqrt(self.alpha)
        if self.family == "bm-noise":
            return self.alpha
        raise DomainError("the ou family has no D (I + K) D decomposition")

    def operator(self) -> OperatorSpec:
        """The model operator; D (I + K) D for mixed and bm-noise."""
        if self.family == "mixed":
            return CompositeDKD(_constant(self.noise_scale), ONES.scaled(self.delta))
        if self.family == "bm-noise":
            return CompositeDKD(
                _constant(self.noise_scale), BROWNIAN.scaled(self.lam**2)
            )
        return Triangular(ou_kernel(self.alpha, self.lam))

    def to_dict(self) -> dict:
        """JSON-ready view; lambda is written as `lambda`."""
        out = {"family": self.family, "alpha": self.alpha}
        if self.delta is not None:
            out["delta"] = self.delta
        if self.lam is not None:
            out["lambda"] = self.lam
        return out


@dataclass(frozen=True)
class LoglikValue:
    """A functional log-likelihood split into its three parts."""

    quad: float
    log_d_term: float
    det_term: float
    corrected: bool
    n_used: Optional[int]

    @property
    def total(self) -> float:
        """quad + log_d_term + det_term."""
        return self.quad + self.log_d_term + self.det_term

    def to_dict(self) -> dict:
        """JSON-ready view."""
        return {
            "total": self.total,
            "quad": self.quad,
            "log_d_term": self.log_d_term,
            "det_term": self.det_term,
            "corrected": self.corrected,
            "n_used": self.n_used,
        }


def mv_parts(y: np.ndarray, cov: np.ndarray) -> Tuple[float, float]:
    """(y^T M^-1 y, log det M) from one Cholesky factorization."""
    y = np.asarray(y, dtype=float).reshape(-1)
    try:
        factor = scipy.linalg.cho_factor(cov, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError("M not PD") from exc
    quad = float(y @ scipy.linalg.cho_solve(factor, y))
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    return quad, log_det


def mv_loglik(y: np.ndarray, cov: np.ndarray) -> float:
    """y^T M^-1 y + log det M."""
    quad, log_det = mv_parts(y, cov)
    return quad + log_det


def quad_form_mixed(f: GridFunction, alpha: float, delta: float) -> float:
    """<f, K^-1 f> = alpha^-1 (||f||^2 - delta / (delta + 1) (int f)^2)."""
    if alpha <= 0 or delta < 0:
        raise DomainError(f"need alpha > 0 and delta >= 0, got {alpha}, {delta}")
    mean = integral(f)
    return (norm_squared(f) - delta / (delta + 1.0) * mean * mean) / alpha


def quad_form_bm(f: GridFunction, alpha: float, lam: float) -> float:
    """
    <f, K^-1 f> for K = alpha^2 (I + lambda^2 B), as alpha^-2 int g^2 where
    g(t) = f(t) - lambda int_0^t tanh(lambda s) g(s) ds.

    The Volterra equation is marched forward over the midpoints in O(n): full
    cells behind the current node enter through a running sum, the current
    node's half cell with weight 1/(2n).
    """
    if alpha <= 0 or lam < 0:
        raise DomainError(f"need alpha > 0 and lambda >= 0, got {alpha}, {lam}")
    h = 1.0 / f.n
    lh = lam * h
    weights = np.tanh(lam * f.midpoints).tolist()
    running = 0.0
    total = 0.0
    for fi, wi in zip(f.values.tolist(), weights):
        gi = (fi - lh * running) / (1.0 + 0.5 * lh * wi)
        running += wi * gi
        total += gi * gi
    return total * h / (alpha * alpha)


def functional_loglik(
    f: GridFunction,
    model: ModelParams,
    n_pen: Optional[int] = None,
    corrected: bool = False,
) -> LoglikValue:
    """
    <f, O^-1 f> + log alpha + c log d(K), with c = 1 (naive) or 1 / n_pen
    (corrected). The log-D term is log alpha for both families.
    """
    if model.family == "mixed":
        quad = quad_form_mixed(f, model.alpha, model.delta)
    elif model.family == "bm-noise":
        quad = quad_form_bm(f, model.alpha, model.lam)
    else:
        raise DomainError(f"no functional likelihood for the {model.family!r} family")

    if corrected:
        if n_pen is None or n_pen < 1:
            raise DomainError("the corrected likelihood needs n_pen >= 1")
        weight = 1.0 / n_pen
    else:
        weight = 1.0
    det = fredholm_det_analytic(model)
    return LoglikValue(
        quad=quad,
        log_d_term=math.log(model.alpha),
        det_term=weight * det.log_det,
        corrected=corrected,
        n_used=n_pen if corrected else None,
    )


def profile_delta_functional(
    f: GridFunction, alpha: float, clamp: bool = True
) -> float:
    """Optimal delta at fixed alpha: alpha^-1 (int f)^2 - 1, clamped at 0."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    mean = integral(f)
    raw = mean * mean / alpha - 1.0
    return max(0.0, raw) if clamp else raw


def profile_delta_mv(y: np.ndarray, alpha: float, clamp: bool = True) -> float:
    """Optimal delta at fixed alpha: alpha^-1 n^-2 (sum y)^2 - 1/n, clamped at 0."""
    if alpha <= 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.size
    mean = float(np.sum(y)) / n
    raw = mean * mean / alpha - 1.0 / n
    return max(0.0, raw) if clamp else raw
