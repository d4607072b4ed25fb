"""
Maximum-likelihood fitting of the mixed and Brownian-motion-with-noise
families, by nested profile optimization.
"""

import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np
import scipy.optimize

from opgauss.common import LAMBDA_BOUNDS, logger
from opgauss.exceptions import DomainError, NumericalError
from opgauss.fredholm import log_cosh
from opgauss.grid import GridFunction, integral, norm_squared
from opgauss.likelihood import (
    ModelParams,
    functional_loglik,
    profile_delta_functional,
    profile_delta_mv,
    quad_form_bm,
)

ROUTES = ("functional", "multivariate")
_ROUTE_ALIASES = {"mv": "multivariate"}

# Slack allowed on the monotone-descent check between accepted iterates.
_DESCENT_SLACK = 1e-10
# Relative part of the bounded Brent termination tolerance.
_BRENT_REL = math.sqrt(np.finfo(float).eps)


@dataclass(frozen=True)
class FitResult:
    """Fitted parameters, the objective value there, and search diagnostics."""

    params: ModelParams
    loglik: float
    route: str
    iterations: int
    converged: bool
    at_bound: bool = False
    history: Tuple[float, ...] = field(default=(), repr=False)
    # Multivariate mixed fit: shared covariance of two observations over alpha.
    delta_pairwise: Optional[float] = None

    def to_dict(self) -> dict:
        """JSON-ready view."""
        out = {
            "params": self.params.to_dict(),
            "loglik": self.loglik,
            "route": self.route,
            "iterations": self.iterations,
            "converged": self.converged,
            "at_bound": self.at_bound,
        }
        if self.delta_pairwise is not None:
            out["delta_pairwise"] = self.delta_pairwise
        return out


def normalize_route(route: str) -> str:
    """Accepts `mv` for `multivariate`."""
    route = _ROUTE_ALIASES.get(route, route)
    if route not in ROUTES:
        raise DomainError(f"unknown route {route!r}; expected one of {ROUTES}")
    return route


def _check_finite(value: float, **params: float) -> float:
    if not math.isfinite(value):
        raise NumericalError(f"non-finite likelihood at {params}")
    return value


class _MixedProblem:
    """
    Closed-form coordinate updates for one of the two mixed-model objectives.

    functional:   Q/alpha + log alpha + log(1 + delta),
                  Q = ||f||^2 - delta/(delta+1) (int f)^2
    multivariate: Q/alpha + n log alpha + log(1 + n delta),
                  Q = sum y^2 - delta/(1+n delta) (sum y)^2

    In the multivariate objective delta scales the covariance shared by two
    observations (M = alpha (I + delta J)), which makes the printed profile
    alpha^-1 n^-2 (sum y)^2 - 1/n its exact stationary point. As a
    mixed-model delta on the M_n scale that is n times the pairwise value.
    """

    def __init__(self, data: Union[GridFunction, np.ndarray], route: str):
        self.route = route
        if route == "functional":
            if not isinstance(data, GridFunction):
                data = GridFunction(data)
            self.data = data
            self.n = 1
            self.sq = norm_squared(data)
            self.total = integral(data)
        else:
            y = np.asarray(data.values if isinstance(data, GridFunction) else data)
            y = np.asarray(y, dtype=float).reshape(-1)
            if y.size < 1 or not np.all(np.isfinite(y)):
                raise DomainError("data must be a non-empty finite vector")
            self.data = y
            self.n = y.size
            self.sq = float(y @ y)
            self.total = float(np.sum(y))
        if self.sq == 0.0:
            raise DomainError("data must be nonzero")

    def shrink(self, delta: float) -> float:
        """Weight of the squared total in the quadratic form."""
        if self.route == "functional":
            return delta / (delta + 1.0)
        return delta / (1.0 + self.n * delta)

    def objective(self, alpha: float, delta: float) -> float:
        quad = self.sq - self.shrink(delta) * self.total**2
        value = quad / alpha + self.n * math.log(alpha) + math.log1p(self.n * delta)
        return _check_finite(value, alpha=alpha, delta=delta)

    def best_delta(self, alpha: float) -> float:
        if self.route == "functional":
            return profile_delta_functional(self.data, alpha)
        return profile_delta_mv(self.data, alpha)

    def best_alpha(self, delta: float) -> float:
        alpha = (self.sq - self.shrink(delta) * self.total**2) / self.n
        if alpha <= 0.0:
            # Only reachable for a constant vector at its degenerate delta.
            alpha = self.sq / self.n
        return alpha


def fit_mixed(
    data: Union[GridFunction, np.ndarray],
    route: str = "functional",
    tol: float = 1e-8,
    max_iter: int = 200,
) -> FitResult:
    """
    Alternates delta <- profile delta at the current alpha and alpha <- its
    closed-form minimizer at that delta, until both move by less than tol
    (relative to 1 + |value|).

    The multivariate route iterates on the pairwise delta and reports it as
    `delta_pairwise`; `params` carries n times it, the delta whose M_n is the
    fitted covariance, so that mv_loglik at matrix_approx(params.operator(), n)
    reproduces `loglik`.
    """
    route = normalize_route(route)
    if tol <= 0:
        raise DomainError(f"tol must be positive, got {tol}")
    problem = _MixedProblem(data, route)

    alpha = problem.sq / problem.n
    delta = 0.0
    history: List[float] = [problem.objective(alpha, delta)]
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        new_delta = problem.best_delta(alpha)
        new_alpha = problem.best_alpha(new_delta)
        value = problem.objective(new_alpha, new_delta)
        if value > history[-1] + _DESCENT_SLACK * (1.0 + abs(history[-1])):
            raise NumericalError(
                f"objective increased at iteration {iterations}: "
                f"{history[-1]} -> {value}"
            )
        history.append(value)
        logger.debug(
            "fit_mixed[%s] iter %d: alpha=%.10g delta=%.10g objective=%.12g",
            route,
            iterations,
            new_alpha,
            new_delta,
            value,
        )
        step = max(
            abs(new_alpha - alpha) / (1.0 + abs(alpha)),
            abs(new_delta - delta) / (1.0 + abs(delta)),
        )
        alpha, delta = new_alpha, new_delta
        if step < tol:
            converged = True
            break

    if not converged:
        logger.warning("fit_mixed did not converge in %d iterations", max_iter)
    # M_n of ModelParams.mixed(alpha, d) is alpha (I + (d / n) J).
    pairwise = delta if route == "multivariate" else None
    return FitResult(
        params=ModelParams.mixed(alpha, problem.n * delta),
        loglik=history[-1],
        route=route,
        iterations=iterations,
        converged=converged,
        at_bound=delta == 0.0,
        history=tuple(history),
        delta_pairwise=pairwise,
    )


def bm_profile_objective(f: GridFunction, lam: float, n_pen: int) -> float:
    """
    Corrected bm-noise likelihood with alpha profiled out. With
    G = <f, (I + lambda^2 B)^-1 f>, the minimizing alpha is sqrt(2 G) and the
    objective is 1/2 + log(2 G) / 2 + log cosh(lambda) / n_pen.
    """
    gram = quad_form_bm(f, 1.0, lam)
    if not gram > 0.0:
        raise NumericalError(f"non-positive quadratic form {gram} at lambda={lam}")
    value = 0.5 + 0.5 * math.log(2.0 * gram) + log_cosh(lam) / n_pen
    return _check_finite(value, lam=lam)


def profile_alpha_bm(f: GridFunction, lam: float) -> float:
    """alpha minimizing the bm-noise likelihood at fixed lambda."""
    return math.sqrt(2.0 * quad_form_bm(f, 1.0, lam))


def fit_bm_noise(  # pylint: disable=too-many-locals
    f: GridFunction,
    n_pen: Optional[int] = None,
    tol: float = 1e-8,
    bounds: Tuple[float, float] = LAMBDA_BOUNDS,
    grid_points: int = 41,
) -> FitResult:
    """
    Minimizes the corrected functional likelihood over (alpha, lambda).

    A coarse grid over log lambda brackets the minimum, a bounded Brent search
    refines it inside the bracket, and alpha is profiled in closed form at
    every lambda. n_pen defaults to the number of grid cells.
    """
    if not np.any(f.values):
        raise DomainError("data must be nonzero")
    n_pen = f.n if n_pen is None else n_pen
    if n_pen < 1:
        raise DomainError(f"n_pen must be at least 1, got {n_pen}")
    lo, hi = bounds
    if not 0.0 < lo < hi:
        raise DomainError(f"invalid lambda bounds {bounds}")

    def objective(log_lam: float) -> float:
        return bm_profile_objective(f, math.exp(log_lam), n_pen)

    grid = np.linspace(math.log(lo), math.log(hi), grid_points)
    values = [objective(x) for x in grid]
    best = int(np.argmin(values))
    logger.debug(
        "fit_bm_noise grid: best lambda=%.6g objective=%.12g",
        math.exp(grid[best]),
        values[best],
    )

    bracket = (grid[max(best - 1, 0)], grid[min(best + 1, grid_points - 1)])
    res = scipy.optimize.minimize_scalar(
        objective, bounds=bracket, method="bounded", options={"xatol": tol}
    )
    if res.fun < values[best]:
        log_lam, value = float(res.x), float(res.fun)
    else:
        log_lam, value = float(grid[best]), float(values[best])
    # Bounded Brent stops a few of its own tolerances short of a bracket end.
    snap = 10.0 * (tol + _BRENT_REL * abs(log_lam))
    if log_lam - grid[0] <= snap:
        lam = lo
    elif grid[-1] - log_lam <= snap:
        lam = hi
    else:
        lam = math.exp(log_lam)
    at_bound = lam in (lo, hi)
    if at_bound:
        logger.info("lambda estimate %.6g sits on the search bound", lam)

    params = ModelParams.bm_noise(profile_alpha_bm(f, lam), lam)
    loglik = functional_loglik(f, params, n_pen=n_pen, corrected=True).total
    return FitResult(
        params=params,
        loglik=loglik,
        route="functional",
        iterations=grid_points + int(res.nfev),
        converged=bool(res.success),
        at_bound=at_bound,
        history=tuple(values) + (value,),
    )
