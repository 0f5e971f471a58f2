"""Command-line front end.

Exit statuses:
  0  all declared invariants passed
  1  at least one invariant failed
  2  usage error (bad flags or malformed configuration)
  3  I/O error (unreadable config, unwritable output)
"""

from __future__ import annotations

import argparse
import sys

from .config import BACKENDS, FORMATS, PROTOCOLS, ConfigError, ExperimentConfig, dump_config, load_config
from .oracle import render_constants
from .report import emit, run_experiment

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_USAGE = 2
EXIT_IO = 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tripartite", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment and report invariant checks")
    run.add_argument("--config", help="YAML experiment file; flags override its values")
    run.add_argument("--protocol", choices=PROTOCOLS)
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int)
    run.add_argument("--basis-set", help="comma-separated secret-sharing bases, e.g. Z,F or F")
    run.add_argument("--subspace-policy", help="fixed:<i>,<j> or random")
    run.add_argument("--eve", help="off or intercept:<alice|bob>:<random|random3d|basis label>")
    run.add_argument("--charlie-loss", type=float, help="probability Charlie's particle is lost (default 1)")
    run.add_argument("--backend", choices=BACKENDS, help="measurement model for secret sharing")
    run.add_argument("--output", help="write the report here instead of stdout")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--dump-config", action="store_true", help="print the effective configuration and exit")

    oracle = sub.add_parser("oracle", help="regenerate the frozen reference constants module")
    oracle.add_argument("--output", help="file to write (default stdout)")
    return parser


def _config_from_args(args) -> ExperimentConfig:
    config = load_config(args.config) if args.config else ExperimentConfig()
    return config.replace(
        protocol=args.protocol,
        n_trials=args.trials,
        seed=args.seed,
        basis_set=tuple(args.basis_set.split(",")) if args.basis_set else None,
        subspace_policy=args.subspace_policy,
        eve=args.eve,
        charlie_loss=args.charlie_loss,
        backend=args.backend,
        output_path=args.output,
        output_format=args.format,
    )


def _write(text: str, path: str | None) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK

    if args.command == "oracle":
        try:
            _write(render_constants(), args.output)
        except OSError as exc:
            print(f"tripartite: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK

    try:
        config = _config_from_args(args)
    except ConfigError as exc:
        print(f"tripartite: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"tripartite: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    if args.dump_config:
        sys.stdout.write(dump_config(config))
        return EXIT_OK

    report = run_experiment(config)
    try:
        _write(emit(report, config.output_format), config.output_path)
    except OSError as exc:
        print(f"tripartite: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO
    failed = [c.name for c in report.checks if not c.passed]
    if failed:
        print(f"tripartite: invariant failure: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
