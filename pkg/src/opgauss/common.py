"""
Shared configuration, constants, and types for Opgauss.
"""

import argparse
import logging
from pathlib import Path
from typing import Any, Optional, Tuple

logger = logging.getLogger("opgauss")


DEFAULT_N_SCHEDULE: Tuple[int, ...] = (32, 64, 128, 256, 512)
DEFAULT_N_QUAD = 1024

# Cholesky jitter: JITTER_SCALE * max(diag) is added up to JITTER_RETRIES times.
JITTER_SCALE = 1e-12
JITTER_RETRIES = 3

# The defining Fredholm series grows as grid_n**k * k!.
SERIES_MAX_ORDER = 6
SERIES_MAX_GRID = 64

LAMBDA_BOUNDS: Tuple[float, float] = (1e-3, 1e3)

MODEL_FAMILIES = ("mixed", "bm-noise", "ou")
SIMULATE_MODELS = ("bm", "ou", "mixed", "bm-noise", "white")
DATA_RULES = ("fixed-function", "simulated")


def eprint(*args: Any, **_kwargs: Any) -> None:
    """Prints to stderr to avoid polluting stdout (which is used for piping)."""
    msg = " ".join(str(a) for a in args)
    logger.error(msg)


class Config:
    """
    Holds configuration state for a CLI invocation.
    """

    # pylint: disable=too-many-instance-attributes
    # pylint: disable=too-few-public-methods
    def __init__(self, args: argparse.Namespace):
        self.command = getattr(args, "command", None)

        # Randomness funnels through this one value
        self.seed = getattr(args, "seed", 0)
        if self.seed is None or not 0 <= self.seed < 2**64:
            raise ValueError("Invalid argument for seed: must be in [0, 2**64).")

        # Model parameters
        self.model_name = getattr(args, "model", None)
        self.alpha = getattr(args, "alpha", 1.0)
        self.delta = getattr(args, "delta", None)
        self.lam = getattr(args, "lam", None)
        if self.alpha is not None and self.alpha <= 0:
            raise ValueError("Invalid argument for alpha: must be greater than 0.")
        if self.delta is not None and self.delta < 0:
            raise ValueError("Invalid argument for delta: must be non-negative.")
        if self.lam is not None and self.lam < 0:
            raise ValueError("Invalid argument for lambda: must be non-negative.")

        # Grids
        self.n = getattr(args, "n", 256)
        self.n_embed = getattr(args, "n_embed", None)
        self.n_quad = getattr(args, "n_quad", DEFAULT_N_QUAD)
        self.length = getattr(args, "length", 1.0)
        for name in ("n", "n_embed", "n_quad"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"Invalid argument for {name}: must be at least 1.")
        if self.length <= 0:
            raise ValueError("Invalid argument for length: must be greater than 0.")

        # Simulation
        self.reps = getattr(args, "reps", 1)
        if self.reps < 0:
            raise ValueError("Invalid argument for reps: must be non-negative.")
        self.out_dir = Path(getattr(args, "out_dir", "."))

        # Likelihood
        self.data_file: Optional[Path] = None
        if getattr(args, "data", None):
            self.data_file = Path(args.data)
        self.corrected = getattr(args, "corrected", False)
        self.n_pen = getattr(args, "n_pen", None)
        if self.n_pen is not None and self.n_pen < 1:
            raise ValueError("Invalid argument for n_pen: must be at least 1.")

        # Fredholm determinants
        self.kernel = getattr(args, "kernel", "brownian")
        self.route = getattr(args, "route", None)
        self.kmax = getattr(args, "kmax", 4)
        self.scale = getattr(args, "scale", 1.0)
        if self.kmax < 0:
            raise ValueError("Invalid argument for kmax: must be non-negative.")

        # Fitting
        self.tol = getattr(args, "tol", 1e-8)
        self.max_iter = getattr(args, "max_iter", 200)
        if self.tol <= 0:
            raise ValueError("Invalid argument for tol: must be greater than 0.")
        if self.max_iter < 1:
            raise ValueError("Invalid argument for max_iter: must be at least 1.")

        # Convergence harness
        self.schedule = tuple(getattr(args, "schedule", None) or DEFAULT_N_SCHEDULE)
        if any(b <= a for a, b in zip(self.schedule, self.schedule[1:])):
            raise ValueError("Invalid argument for schedule: must be increasing.")
        if self.schedule[0] < 1:
            raise ValueError("Invalid argument for schedule: sizes must be >= 1.")
        self.data_rule = getattr(args, "data_rule", "fixed-function")
        self.report_file = getattr(args, "out", None)
        self.flat_file = getattr(args, "flat", None)
        self.jobs = getattr(args, "jobs", 1)
        if self.jobs < 1:
            raise ValueError("Invalid argument for jobs: must be at least 1.")

    def model(self):
        """Builds the ModelParams named by the configuration."""
        # pylint: disable=import-outside-toplevel
        from opgauss.likelihood import ModelParams

        if self.model_name == "mixed":
            return ModelParams.mixed(self.alpha, self.delta or 0.0)
        if self.model_name == "bm-noise":
            return ModelParams.bm_noise(self.alpha, _required(self.lam, "lambda"))
        if self.model_name == "ou":
            return ModelParams.ou(self.alpha, _required(self.lam, "lambda"))
        raise ValueError(f"Invalid argument for model: {self.model_name!r}")


def _required(value: Optional[float], name: str) -> float:
    if value is None:
        raise ValueError(f"Missing argument: --{name} is required for this model.")
    return value
