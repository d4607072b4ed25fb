#!/usr/bin/env python3
"""
Opgauss: operator-defined Gaussian processes on L2[0,1].
"""
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from opgauss.args import get_parser
from opgauss.common import MODEL_FAMILIES, Config, eprint
from opgauss.convergence import report_cmd, run_convergence
from opgauss.exceptions import DomainError, NumericalError, OpgaussError, UsageError
from opgauss.fredholm import (
    fredholm_det_analytic,
    fredholm_det_matrix,
    fredholm_det_series,
)
from opgauss.gaussian import (
    NoiseStream,
    sample_model_data,
    sample_paths,
    sample_set_noise,
)
from opgauss.grid import GridFunction, Samples, embed_piecewise_constant, midpoints
from opgauss.inference import fit_bm_noise, fit_mixed
from opgauss.likelihood import ModelParams, functional_loglik
from opgauss.loader import load_samples, write_columns
from opgauss.operators import FORWARD, Triangular, kernel_from_name

logger = logging.getLogger("opgauss")

EXIT_USAGE = 2
EXIT_NUMERIC = 3
EXIT_INTERRUPTED = 130


def _dump(data: Dict[str, Any]) -> None:
    json.dump(data, sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")


def _simulate_lambda(config: Config) -> Optional[float]:
    """--lambda, or 1 for plain Brownian motion when it is not given."""
    if config.lam is None and config.model_name == "bm":
        return 1.0
    return config.lam


def _simulate_values(config: Config, stream: NoiseStream) -> np.ndarray:
    """Paths as a (reps, n) array."""
    name, n, reps = config.model_name, config.n, config.reps
    if name == "white":
        edges = np.arange(n + 1) / n
        cells = list(zip(edges[:-1], edges[1:]))
        draws = sample_set_noise(cells, stream, reps)
        return np.array([d.values for d in draws]).reshape(reps, n)
    if name in ("bm", "ou"):
        if name == "bm":
            op = Triangular(FORWARD.scaled(_simulate_lambda(config)))
        else:
            op = config.model().operator()
        paths = sample_paths(op, n, stream, reps, config.n_quad, config.length)
        return np.array([p.values for p in paths]).reshape(reps, n)
    return sample_model_data(config.model(), n, stream, reps)


def simulate_cmd(config: Config) -> List[Path]:
    """
    Writes path_000.csv, path_001.csv, ... (columns t, y) and manifest.json
    into the output directory. Returns the files written.
    """
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stream = NoiseStream(config.seed)
    length = config.length if config.model_name in ("bm", "ou") else 1.0
    t = midpoints(config.n, length)

    written: List[Path] = []
    values = _simulate_values(config, stream) if config.reps else np.empty((0, 0))
    for r, row in enumerate(values):
        path = out_dir / f"path_{r:03d}.csv"
        write_columns(path, ("t", "y"), t, row)
        written.append(path)

    params = {"alpha": config.alpha}
    if config.delta is not None:
        params["delta"] = config.delta
    lam = _simulate_lambda(config)
    if lam is not None:
        params["lambda"] = lam
    manifest = {
        "model": config.model_name,
        "params": params,
        "n": config.n,
        "seed": config.seed,
        "reps": config.reps,
        "length": length,
        "files": [p.name for p in written],
    }
    manifest_path = out_dir / "manifest.json"
    with open(manifest_path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    written.append(manifest_path)
    logger.info("wrote %d paths to %s", len(written) - 1, out_dir)
    return written


def _load_embedded(config: Config) -> Tuple[Samples, GridFunction]:
    if config.data_file is None:
        raise UsageError("--data is required")
    samples = load_samples(config.data_file)
    n = config.n_embed or samples.m
    return samples, embed_piecewise_constant(samples, n)


def loglik_cmd(config: Config) -> Dict[str, Any]:
    """Functional log-likelihood of the embedded data."""
    samples, f = _load_embedded(config)
    n_pen = config.n_pen or samples.m
    value = functional_loglik(
        f, config.model(), n_pen=n_pen, corrected=config.corrected
    )
    return value.to_dict()


def _analytic_model(kernel_name: str, scale: float) -> ModelParams:
    """ones and brownian map onto the two families with closed forms."""
    if kernel_name == "ones" and scale >= 0:
        return ModelParams.mixed(1.0, scale)
    if kernel_name == "brownian" and scale >= 0:
        return ModelParams.bm_noise(1.0, float(np.sqrt(scale)))
    raise DomainError(f"no closed form for kernel {kernel_name!r} at scale {scale}")


def fredholm_cmd(config: Config) -> Dict[str, Any]:
    """Fredholm determinant of the named kernel, by the chosen route."""
    kernel = kernel_from_name(config.kernel).scaled(config.scale)
    route = config.route or "matrix"
    if route == "series":
        result = fredholm_det_series(kernel, config.n, config.kmax)
    elif route == "matrix":
        result = fredholm_det_matrix(kernel, config.n)
    else:
        result = fredholm_det_analytic(_analytic_model(config.kernel, config.scale))
    out = result.to_dict()
    out["kernel"] = kernel.name
    return out


def fit_cmd(config: Config) -> Dict[str, Any]:
    """Maximum-likelihood fit on the embedded data."""
    samples, f = _load_embedded(config)
    route = config.route or "functional"
    if config.model_name == "mixed":
        data = f if route == "functional" else samples.y
        result = fit_mixed(data, route, config.tol, config.max_iter)
    elif route != "functional":
        raise UsageError("the bm-noise family is fitted on the functional route only")
    else:
        result = fit_bm_noise(f, n_pen=config.n_pen or samples.m, tol=config.tol)
    return result.to_dict()


def converge_cmd(config: Config) -> List[Path]:
    """Runs the harness and writes the report."""
    report = run_convergence(
        config.model(),
        config.schedule,
        config.data_rule,
        seed=config.seed,
        jobs=config.jobs,
    )
    return report_cmd(report, config.report_file, config.flat_file)


def run(args: argparse.Namespace, config: Config) -> None:
    """Executes the subcommand named by the parsed arguments."""
    if args.command == "simulate":
        simulate_cmd(config)
    elif args.command == "loglik":
        _dump(loglik_cmd(config))
    elif args.command == "fredholm":
        _dump(fredholm_cmd(config))
    elif args.command == "fit":
        _dump(fit_cmd(config))
    elif args.command == "converge":
        converge_cmd(config)
    else:
        raise UsageError(f"unknown command {args.command!r}")


def main() -> None:
    """
    Main entry point for the Opgauss CLI.
    Parses arguments and delegates to the run function.
    """
    parser = get_parser()
    args = parser.parse_args()

    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(level=level, format="[{levelname}] {message}", style="{")

    for i, arg in enumerate(sys.argv):
        logger.debug("argv[%d]: %s", i, arg)
    logger.debug("vars(args)=%s", vars(args))

    try:
        config = Config(args)
        if args.command != "fit" and config.model_name in MODEL_FAMILIES:
            config.model()
    except (ValueError, DomainError) as exc:
        raise UsageError(f"Invalid configuration: {exc}") from exc

    run(args, config)


def entry_point() -> None:
    """Console script: maps failures to exit codes 2 (usage) and 3 (numeric)."""
    try:
        main()
    except NumericalError as e_main:
        eprint(f"Error: {e_main}")
        sys.exit(EXIT_NUMERIC)
    except OpgaussError as e_main:
        eprint(f"Error: {e_main}")
        sys.exit(EXIT_USAGE)
    except KeyboardInterrupt:
        eprint("\nInterrupted.")
        sys.exit(EXIT_INTERRUPTED)


if __name__ == "__main__":
    entry_point()
