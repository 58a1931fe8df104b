"""
SAR MMV Runner - Command Line Entry Point
=========================================

``sarmmv`` subcommands:

    run <config|preset|file.batch>   full pipeline into a run directory
    regime <config|preset>           regime diagnostics only
    coherence <config|preset>        subset-matrix coherence summaries
    plot <run-dir>                   re-render a run's figures

Exit codes: 0 success, 1 error, 2 config error, 3 regime hard-fail
without --force, 4 solver divergence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from sarmmv import __version__
from sarmmv.config import settings
from sarmmv.core.errors import SarMmvError

logger = logging.getLogger("sarmmv.main")

EXIT_OK = 0
EXIT_ERROR = 1


# =============================================================================
# Commands
# =============================================================================

def _cmd_run(args: argparse.Namespace) -> int:
    from sarmmv.services.experiment import load_batch, load_config, run_batch, run_experiment

    if Path(args.config).suffix == ".batch":
        outcomes = run_batch(
            load_batch(args.config),
            output_root=args.output,
            jobs=args.jobs,
            force=args.force,
            seed=args.seed,
            dump_model=args.dump_model,
        )
        for outcome in outcomes:
            status = "ok" if outcome.error is None else f"failed ({outcome.error})"
            print(f"{outcome.name}: {status}")
        return max((o.exit_code for o in outcomes), default=EXIT_OK)

    config = load_config(args.config)
    manifest = run_experiment(
        config,
        output_dir=args.output,
        force=args.force,
        seed=args.seed,
        dump_model=args.dump_model,
        plots=False if args.no_plots else None,
    )
    print(json.dumps(manifest.score.model_dump() if manifest.score else {}, indent=2))
    return EXIT_OK


def _cmd_regime(args: argparse.Namespace) -> int:
    from sarmmv.services.experiment import check_regime, load_config, regime_for_config

    config = load_config(args.config)
    report = regime_for_config(config)
    print(report.to_text(), end="")
    check_regime(report, force=args.force, enforce=config.regime.enforce)
    return EXIT_OK


def _cmd_coherence(args: argparse.Namespace) -> int:
    from sarmmv.services.experiment import coherence_for_config, load_config

    reports = coherence_for_config(load_config(args.config), args.alpha, args.beta)
    print(json.dumps([report.summary() for report in reports], indent=2))
    return EXIT_OK


def _cmd_plot(args: argparse.Namespace) -> int:
    from sarmmv.services.plotting import refresh_plots

    manifest = refresh_plots(args.run_dir, args.format)
    for entry in manifest.artifacts:
        if entry.kind.startswith("plot:"):
            print(entry.path)
    return EXIT_OK


# =============================================================================
# Parser
# =============================================================================

def _verbosity_options(default) -> argparse.ArgumentParser:
    """-v/-q for the top-level parser and, with suppressed defaults, every subcommand."""
    parent = argparse.ArgumentParser(add_help=False)
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", default=default, help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", default=default, help="Warnings and errors only")
    return parent


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarmmv",
        description="Direction- and frequency-dependent SAR reflectivity by MMV sparse recovery.",
        parents=[_verbosity_options(False)],
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    # Suppressed defaults keep a top-level -q from being reset by the subcommand
    common = _verbosity_options(argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", parents=[common], help="Run an experiment or a batch file")
    run.add_argument("config", help="TOML config, preset name or .batch file")
    run.add_argument("--force", action="store_true", help="Run even if the regime check fails")
    run.add_argument("--seed", type=int, default=None, help="Override the noise and solver seeds")
    run.add_argument("--dump-model", action="store_true", help="Write the MMV model matrix")
    run.add_argument("--jobs", type=int, default=None, help="Concurrent experiments for batch files")
    run.add_argument("--output", default=None, help="Run directory (batch: root directory)")
    run.add_argument("--no-plots", action="store_true", help="Skip figure rendering")
    run.set_defaults(handler=_cmd_run)

    regime = sub.add_parser("regime", parents=[common], help="Print the regime diagnostics")
    regime.add_argument("config", help="TOML config or preset name")
    regime.add_argument("--force", action="store_true", help="Exit 0 even on a hard fail")
    regime.set_defaults(handler=_cmd_regime)

    coherence = sub.add_parser("coherence", parents=[common], help="Print subset-matrix coherence summaries")
    coherence.add_argument("config", help="TOML config or preset name")
    coherence.add_argument("--alpha", type=int, default=1, help="Sub-aperture index (1-based)")
    coherence.add_argument("--beta", type=int, default=1, help="Sub-band index (1-based)")
    coherence.set_defaults(handler=_cmd_coherence)

    plot = sub.add_parser("plot", parents=[common], help="Render the figures of a run directory")
    plot.add_argument("run_dir", help="Run directory containing manifest.json")
    plot.add_argument("--format", choices=("png", "svg"), default=None)
    plot.set_defaults(handler=_cmd_plot)
    return parser


def configure_logging(verbose: bool = False, quiet: bool = False) -> None:
    level = settings.log_level_value
    if verbose:
        level = logging.DEBUG
    elif quiet:
        level = logging.WARNING
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def main(argv: Optional[Sequence[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        return args.handler(args)
    except SarMmvError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except Exception:
        logger.exception("Unexpected error")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
