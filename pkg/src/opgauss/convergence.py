"""
Convergence harness: compares (1/n)(y^T M_n^-1 y + log det M_n) with the
corrected functional likelihood of the aligned step function, along an
increasing schedule of grid sizes.
"""

import csv
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from opgauss.common import DATA_RULES, DEFAULT_N_SCHEDULE, logger
from opgauss.exceptions import DomainError, NumericalError
from opgauss.fredholm import fredholm_det_analytic, log_det_multiplication
from opgauss.gaussian import NoiseStream, sample_model_data
from opgauss.grid import GridFunction, midpoints
from opgauss.likelihood import ModelParams, functional_loglik, mv_parts
from opgauss.operators import matrix_approx

GAP_COLUMNS = ("gap_quad", "gap_det", "gap_d", "gap_total")

# M_n must equal S_n R_n S_n entrywise to this tolerance.
FACTORIZATION_TOL = 1e-14
# gap_total computed directly and from its parts must agree to this tolerance.
PARTS_TOL = 1e-10


def default_function(t: np.ndarray) -> np.ndarray:
    """The bounded function sampled by the fixed-function data rule."""
    return np.sin(2.0 * np.pi * t) + 0.5


@dataclass(frozen=True)
class ConvergenceRow:
    """The four gaps at one grid size."""

    n: int
    gap_quad: float
    gap_det: float
    gap_d: float
    gap_total: float


@dataclass(frozen=True)
class ConvergenceReport:
    """Harness output, one row per grid size in increasing order."""

    model: ModelParams
    data_rule: str
    seed: Optional[int]
    rows: Tuple[ConvergenceRow, ...]

    def to_dict(self) -> dict:
        """JSON-ready view."""
        return {
            "model": self.model.to_dict(),
            "data_rule": self.data_rule,
            "seed": self.seed,
            "columns": list(GAP_COLUMNS),
            "rows": [asdict(row) for row in self.rows],
        }


def _data(model: ModelParams, n: int, data_rule: str, seed: int, func) -> np.ndarray:
    if data_rule == "fixed-function":
        return np.broadcast_to(np.asarray(func(midpoints(n)), dtype=float), (n,))
    # One counter block per grid size, independent of evaluation order.
    return sample_model_data(model, n, NoiseStream(seed, counter=n))[0]


def _row(
    model: ModelParams, n: int, data_rule: str, seed: int, func
) -> ConvergenceRow:
    # pylint: disable=too-many-locals
    y = _data(model, n, data_rule, seed, func)
    f_n = GridFunction(y)
    mats = matrix_approx(model.operator(), n)

    assembled = mats.scaling @ mats.core @ mats.scaling
    mismatch = float(np.max(np.abs(mats.matrix - assembled)))
    if mismatch > FACTORIZATION_TOL * max(1.0, float(np.max(np.abs(mats.matrix)))):
        raise NumericalError(f"M_n != S_n R_n S_n at n={n} (max error {mismatch:.3g})")

    try:
        quad_mv, log_det_m = mv_parts(y, mats.matrix)
    except NumericalError as exc:
        raise NumericalError(f"factorization failed at n={n}: {exc}") from exc
    sign, log_det_r = np.linalg.slogdet(mats.core)
    if sign <= 0:
        raise NumericalError(f"R_n not positive definite at n={n}")
    noise = model.noise_scale
    log_det_s, _ = log_det_multiplication(lambda t: np.full_like(t, noise), n)

    value = functional_loglik(f_n, model, n_pen=n, corrected=True)
    d_k = fredholm_det_analytic(model).log_det
    int_log_d = math.log(noise)

    gap_quad = quad_mv / n - value.quad
    gap_det = float(log_det_r) - d_k
    gap_d = log_det_s - int_log_d
    gap_total = (quad_mv + log_det_m) / n - value.total

    from_parts = (
        gap_quad
        + (2.0 * log_det_s - value.log_d_term)
        + (float(log_det_r) / n - value.det_term)
    )
    if abs(from_parts - gap_total) > PARTS_TOL:
        raise NumericalError(
            f"gap_total inconsistent with its parts at n={n}: "
            f"{gap_total} vs {from_parts}"
        )
    logger.debug("converge n=%d: total gap %.3e", n, abs(gap_total))
    return ConvergenceRow(n, abs(gap_quad), abs(gap_det), abs(gap_d), abs(gap_total))


def run_convergence(
    model: ModelParams,
    n_schedule: Sequence[int] = DEFAULT_N_SCHEDULE,
    data_rule: str = "fixed-function",
    seed: int = 0,
    func: Callable[[np.ndarray], np.ndarray] = default_function,
    jobs: int = 1,
) -> ConvergenceReport:
    """
    Builds y_n, f_n, M_n = S_n R_n S_n at every n of the schedule and records
    the four gaps. Rows are independent and evaluated on `jobs` threads.
    """
    if model.family not in ("mixed", "bm-noise"):
        raise DomainError(f"no D (I + K) D form for the {model.family!r} family")
    if data_rule not in DATA_RULES:
        raise DomainError(f"unknown data rule {data_rule!r}")
    schedule = [int(n) for n in n_schedule]
    if not schedule:
        raise DomainError("empty n schedule")
    if any(b <= a for a, b in zip(schedule, schedule[1:])) or schedule[0] < 1:
        raise DomainError(f"n schedule must be increasing and positive: {schedule}")

    def work(n: int) -> ConvergenceRow:
        return _row(model, n, data_rule, seed, func)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = tuple(pool.map(work, schedule))
    return ConvergenceReport(
        model=model,
        data_rule=data_rule,
        seed=seed if data_rule == "simulated" else None,
        rows=rows,
    )


def write_flat(report: ConvergenceReport, path: Path) -> None:
    """CSV of n and the gaps, columns in fixed order."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(("n",) + GAP_COLUMNS)
        for row in report.rows:
            writer.writerow([row.n] + [repr(getattr(row, c)) for c in GAP_COLUMNS])


def report_cmd(
    report: ConvergenceReport,
    out: Optional[Path] = None,
    flat: Optional[Path] = None,
) -> List[Path]:
    """
    Writes the report as JSON (to `out`, or stdout), and optionally the flat
    CSV table. Returns the files written.
    """
    if not report.rows:
        raise DomainError("empty convergence report")
    written: List[Path] = []
    if out is None:
        json.dump(report.to_dict(), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        out = Path(out)
        with open(out, "w", encoding="utf-8") as f:
            json.dump(report.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        written.append(out)
    if flat is not None:
        write_flat(report, Path(flat))
        written.append(Path(flat))
    return written
