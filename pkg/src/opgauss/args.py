"""
Argument parsing for Opgauss.

Global options work before or after the subcommand; every subcommand
inherits them from one parent parser.
"""

import argparse

from opgauss.common import DATA_RULES, DEFAULT_N_QUAD, SIMULATE_MODELS


def _create_global_parser() -> argparse.ArgumentParser:
    """
    Creates a parser with all global options.

    This parser is used as the parent for subcommands to inherit
    global options without duplicating them.
    """
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument(
        "--seed",
        type=int,
        default=argparse.SUPPRESS,
        help="Seed of the counter-based random stream (default: 0)",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument(
        "-v",
        "--verbose",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Log debug messages",
    )
    verbosity.add_argument(
        "-q",
        "--quiet",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Only log warnings and errors",
    )
    return parser


def _add_model_options(parser: argparse.ArgumentParser, choices) -> None:
    parser.add_argument("--model", required=True, choices=choices, help="Model family")
    parser.add_argument(
        "--alpha", type=float, default=1.0, help="Noise level alpha (default: 1)"
    )
    parser.add_argument("--delta", type=float, help="Shared level variance delta")
    parser.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        help="Signal parameter lambda, needed by bm-noise and ou "
        "(simulate --model bm defaults to 1)",
    )


def _add_data_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--data", required=True, help="CSV file with columns u,y (header optional)"
    )
    parser.add_argument(
        "--n-embed",
        type=int,
        help="Cells of the step-function embedding (default: number of samples)",
    )
    parser.add_argument(
        "--n-pen",
        type=int,
        help="Penalisation n of the corrected likelihood (default: number of samples)",
    )


def get_parser() -> argparse.ArgumentParser:
    """Returns the main CLI parser."""
    global_parser = _create_global_parser()

    description = """
Opgauss: operator-defined Gaussian processes on L2[0,1].

Simulate processes, evaluate Fredholm determinants and functional
log-likelihoods, fit noise+signal models, and run the convergence harness
comparing functional and multivariate likelihoods. Structured output is JSON
on stdout.

   Example:
       $ opgauss simulate --model bm --lambda 1 --n 256 --reps 3 --out-dir paths/
       $ opgauss fredholm --kernel brownian --route matrix --n 512
       $ opgauss converge --model bm-noise --alpha 1 --lambda 1 --flat gaps.csv
"""

    parser = argparse.ArgumentParser(
        prog="opgauss",
        description=description,
        formatter_class=argparse.RawDescriptionHelpFormatter,
        parents=[global_parser],
        usage="%(prog)s [OPTIONS] COMMAND [COMMAND_OPTIONS]",
    )

    sub = parser.add_subparsers(
        dest="command",
        title="Commands",
        metavar="COMMAND",
        required=True,
    )

    # SIMULATE subcommand
    simulate = sub.add_parser(
        "simulate",
        help="Sample process paths to CSV files plus a JSON manifest",
        parents=[global_parser],
        usage="%(prog)s [OPTIONS]",
    )
    _add_model_options(simulate, SIMULATE_MODELS)
    simulate.add_argument("--n", type=int, default=256, help="Grid points per path")
    simulate.add_argument("--reps", type=int, default=1, help="Number of paths")
    simulate.add_argument(
        "--length",
        type=float,
        default=1.0,
        help="Length of the time interval (bm and ou only; default: 1)",
    )
    simulate.add_argument(
        "--n-quad",
        type=int,
        default=DEFAULT_N_QUAD,
        help=f"Quadrature nodes per covariance entry (default: {DEFAULT_N_QUAD})",
    )
    simulate.add_argument(
        "--out-dir", default=".", help="Output directory (default: current)"
    )

    # LOGLIK subcommand
    loglik = sub.add_parser(
        "loglik",
        help="Functional log-likelihood of embedded data, as JSON",
        parents=[global_parser],
        usage="%(prog)s [OPTIONS]",
    )
    _add_model_options(loglik, ("mixed", "bm-noise"))
    _add_data_options(loglik)
    loglik.add_argument(
        "--corrected",
        action="store_true",
        help="Weight the determinant term by 1/n-pen",
    )

    # FREDHOLM subcommand
    fredholm = sub.add_parser(
        "fredholm",
        help="Fredholm determinant of a named kernel, as JSON",
        parents=[global_parser],
        usage="%(prog)s [OPTIONS]",
    )
    fredholm.add_argument(
        "--kernel",
        default="brownian",
        help="ones, brownian, bb, fwd or ou(alpha,lambda) (default: brownian)",
    )
    fredholm.add_argument(
        "--route",
        choices=["series", "matrix", "analytic"],
        default="matrix",
        help="Evaluation route (default: matrix)",
    )
    fredholm.add_argument("--n", type=int, default=256, help="Grid size")
    fredholm.add_argument(
        "--kmax", type=int, default=4, help="Series truncation order (series route)"
    )
    fredholm.add_argument(
        "--scale", type=float, default=1.0, help="Multiplier of the kernel"
    )

    # FIT subcommand
    fit = sub.add_parser(
        "fit",
        help="Maximum-likelihood fit of a model family, as JSON",
        parents=[global_parser],
        usage="%(prog)s [OPTIONS]",
    )
    fit.add_argument("--model", required=True, choices=["mixed", "bm-noise"])
    fit.add_argument(
        "--route",
        choices=["functional", "mv"],
        default="functional",
        help="Likelihood to maximise (default: functional)",
    )
    _add_data_options(fit)
    fit.add_argument("--tol", type=float, default=1e-8, help="Stopping tolerance")
    fit.add_argument(
        "--max-iter", type=int, default=200, help="Iteration cap (mixed model)"
    )

    # CONVERGE subcommand
    converge = sub.add_parser(
        "converge",
        help="Functional vs multivariate likelihood gaps along a grid schedule",
        parents=[global_parser],
        usage="%(prog)s [OPTIONS]",
    )
    _add_model_options(converge, ("mixed", "bm-noise"))
    converge.add_argument(
        "--schedule",
        type=int,
        nargs="+",
        help="Increasing grid sizes (default: 32 64 128 256 512)",
    )
    converge.add_argument(
        "--data-rule",
        choices=DATA_RULES,
        default="fixed-function",
        help="How y_n is produced (default: fixed-function)",
    )
    converge.add_argument("--out", help="JSON report file (default: stdout)")
    converge.add_argument("--flat", help="Also write an n,gap CSV table here")
    converge.add_argument(
        "--jobs", type=int, default=1, help="Grid sizes evaluated in parallel"
    )

    return parser
