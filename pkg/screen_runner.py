# -------------------------------------------------
# Master file for running the screen BEM experiments.
#
#   python screen_runner.py config.json [--k 5 --nu 10,100,1000 --levels 1..4 ...]
#
# Exit codes: 0 success, 2 configuration error, 3 numerical failure.
# -------------------------------------------------

import logging
import sys

from cli.config import build_parser, merge_config, validate_config
from cli.experiments import run_experiment
from helpers.errors import (
    ConfigurationError, DomainError, ExtrapolationError, GeometryError, QuadratureError, SolverError
)
from helpers.helpers import load_config, output_path, start_timer, stop_timer

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

# enforce python version >= 3.10
if sys.version_info < (3, 10):
    print("Error: Python 3.10 or higher is required to run the screen BEM.")
    sys.exit(1)


def configure_logging(verbose: bool):
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO,
        format="%(asctime)s %(levelname)-7s %(name)s: %(message)s",
        datefmt="%H:%M:%S",
    )


def visualise(config, summary, results):
    try:
        from viz.visualiser import draw_convergence, draw_solution
    except ImportError:
        print("Visualisation skipped: matplotlib is not installed.")
        return
    print("Drawing figures...")
    if summary.series:
        draw_convergence(summary.series, output_path(config.out, f"convergence_k{config.k:g}.png"))
    for result in results:
        draw_solution(result.dofs, result.solution,
                      output_path(config.out, f"solution_{config.method}_L{result.level}_k{config.k:g}.png"),
                      title=f"u_h ({config.method}, level {result.level})")


def main(argv=None) -> int:
    print("--------------- Screen BEM ---------------")
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose)

    # ─── Load Configuration ───────────────────────────────────
    try:
        file_values = load_config(args.config) if args.config else {}
        config = validate_config(merge_config(file_values, args))
    except ConfigurationError as e:
        print("Configuration rejected:")
        for violation in e.violations:
            print(f"  - {violation}")
        return EXIT_CONFIG

    for line in config.describe():
        print(line)

    # ─── Run Experiment ───────────────────────────────────────
    print(f"Running experiment: {config.experiment}")
    start_timer()
    try:
        summary, results = run_experiment(config)
    except ConfigurationError as e:
        print("Configuration rejected:")
        for violation in e.violations:
            print(f"  - {violation}")
        return EXIT_CONFIG
    except SolverError as e:
        print(f"Solver failed: {e}")
        return EXIT_NUMERICAL
    except (ExtrapolationError, DomainError, GeometryError, QuadratureError) as e:
        print(f"Numerical failure: {e}")
        return EXIT_NUMERICAL
    stop_timer("Experiment")

    # ─── Report ───────────────────────────────────────────────
    for name in sorted(summary.series):
        print(f"Series {name}:")
        for r in summary.series[name]:
            rate = "" if r.rate is None else f"  rate {r.rate:.3f}"
            print(f"  level {r.level}  h {r.h:.4g}  N {r.ndofs}  residual {r.residual:.4e}  "
                  f"jumps {r.jumps:.4e}  total {r.total:.4e}{rate}")
    for filename in summary.files:
        print(f"Written: {filename}")

    # ─── Visualisation ────────────────────────────────────────
    if config.visualise:
        visualise(config, summary, results)

    print("--------------- Run Complete ---------------")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
