"""phaseshift CLI.

Usage:
    python -m phaseshift compare --config run.cfg
    python -m phaseshift compare --set potential.eta=0.05 --set sweep.axis=p \\
        --set sweep.start=1 --set sweep.stop=10 --set sweep.count=10 --workers 4
    python -m phaseshift wavefunction --set scatter.p=20 --set scatter.methods=unitary1,numerov
    python -m phaseshift validate

Data goes to ``output.path`` (``--output``) or stdout. Exit status: 0 on
success, 1 when a validation check fails, 2 on configuration errors.
"""

import argparse
import sys
from collections.abc import Sequence
from typing import TextIO

from config import settings
from scattering import __version__
from scattering.compare import build_compare_table, build_wavefunction_table
from scattering.run_config import ConfigError, RunConfig, load_run_config
from services.invariant_validator import CheckResult, run_validation
from services.table_writer import write_table

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phaseshift",
        description="Partial-wave phase shifts by unitary perturbation theory, with independent oracles",
    )
    parser.add_argument("--version", action="version", version=f"phaseshift {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="FILE", help="flat key=value run configuration")
    common.add_argument(
        "--set",
        metavar="KEY=VALUE",
        action="append",
        default=[],
        help="override one configuration key (repeatable, applied after --config)",
    )
    common.add_argument("--output", metavar="PATH", help="write data here instead of stdout")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--degrees", action="store_true", help="report angles in degrees")

    commands = parser.add_subparsers(dest="command", required=True)
    compare = commands.add_parser("compare", parents=[common], help="phase shifts per method over a sweep")
    compare.add_argument(
        "--workers",
        type=int,
        default=None,
        help=f"worker processes for sweep rows (default {settings.workers})",
    )
    commands.add_parser("wavefunction", parents=[common], help="radial wavefunctions at one point")
    commands.add_parser("validate", parents=[common], help="run the invariant checks")
    return parser


def _overrides(args: argparse.Namespace) -> list[str]:
    overrides = list(args.set)
    if args.output:
        overrides.append(f"output.path={args.output}")
    if args.format:
        overrides.append(f"output.format={args.format}")
    if args.degrees:
        overrides.append("output.degrees=true")
    return overrides


def _print_banner(title: str, lines: Sequence[str]) -> None:
    print("=" * 50)
    print(title)
    print("=" * 50)
    for line in lines:
        print(line)
    print("=" * 50)


def cmd_compare(config: RunConfig, workers: int = 1, stream: TextIO | None = None) -> int:
    """Phase-shift table over the configured sweep."""
    stream = stream or sys.stdout
    table = build_compare_table(config, workers=workers)
    write_table(table, config, "compare", stream=stream)
    if config.output.path:
        _print_banner(
            "Compare Complete",
            [
                f"Rows:        {len(table.rows)}",
                f"Methods:     {', '.join(config.scatter.methods)}",
                f"Failures:    {len(table.notes)}",
                f"Output:      {config.output.path}",
                f"Config hash: {config.config_hash()}",
            ],
        )
    return EXIT_OK


def cmd_wavefunction(config: RunConfig, stream: TextIO | None = None) -> int:
    """Wavefunction samples at the single configured point."""
    stream = stream or sys.stdout
    table = build_wavefunction_table(config)
    write_table(table, config, "wavefunction", stream=stream)
    if config.output.path:
        _print_banner(
            "Wavefunction Complete",
            [
                f"Points:      {len(table.rows)}",
                f"Columns:     {', '.join(table.columns)}",
                f"Output:      {config.output.path}",
            ],
        )
    return EXIT_OK


def _print_report(results: Sequence[CheckResult]) -> None:
    passed = sum(result.passed for result in results)
    print("=" * 60)
    print("VALIDATION SUMMARY")
    print("=" * 60)
    for result in results:
        status = "✅ PASS" if result.passed else "❌ FAIL"
        print(f"{status}: {result.name}")
        print(f"    residual={result.residual:.3e} threshold={result.threshold:.3e}")
        if result.detail:
            print(f"    {result.detail}")
    print("=" * 60)
    print(f"Total: {passed}/{len(results)} checks passed")
    print("=" * 60)


def cmd_validate(config: RunConfig) -> int:
    """Run the invariant suite; exit status reflects the overall result."""
    results = run_validation(config)
    _print_report(results)
    return EXIT_OK if all(result.passed for result in results) else EXIT_FAILED


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, load configuration and dispatch the subcommand.

    Returns:
        0 on success, 1 on failed validation, 2 on configuration errors
    """
    args = _build_parser().parse_args(argv)

    from dotenv import load_dotenv

    load_dotenv()

    try:
        config = load_run_config(args.config, _overrides(args))
    except ConfigError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        if args.command == "compare":
            workers = args.workers if args.workers is not None else settings.workers
            return cmd_compare(config, max(1, workers))
        if args.command == "wavefunction":
            return cmd_wavefunction(config)
        return cmd_validate(config)
    except ValueError as e:
        print(f"Config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
