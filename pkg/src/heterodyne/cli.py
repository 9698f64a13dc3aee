"""Command-line entry point.

::

    heterodyne run <config> [--reproducible] [--seed U64] [--out DIR]
    heterodyne validate <config>
    heterodyne list-examples

``<config>`` is a path or the name of a bundled example (``reconstruction``,
``photon_number``, ...).  The output directory is, in order of precedence, ``--out``,
the ``HETERODYNE_OUTPUT_DIR`` environment variable, and the config's
``output`` key.

Exit codes: 0 success, 2 configuration error, 3 runtime error or failed
expectation, 4 I/O error.
"""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from importlib import resources
from pathlib import Path

from .config import ExperimentConfig, load_config, parse_config
from .errors import ConfigError, HeterodyneError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
OUTPUT_ENV = "HETERODYNE_OUTPUT_DIR"


def bundled_examples() -> dict:
    """Map example name to config text for the configs shipped with the package."""
    root = resources.files("heterodyne") / "configs"
    return {p.name[:-4]: p.read_text() for p in sorted(root.iterdir(), key=lambda p: p.name)
            if p.name.endswith(".cfg")}


def resolve_config(name: str) -> ExperimentConfig:
    path = Path(name)
    if path.exists():
        return load_config(path)
    examples = bundled_examples()
    stem = name[:-4] if name.endswith(".cfg") else name
    if stem in examples:
        return parse_config(examples[stem], f"{stem}.cfg")
    raise FileNotFoundError(f"no such config file or bundled example: {name}")


def _build_parser():
    parser = argparse.ArgumentParser(prog="heterodyne", description="Simulated heterodyne experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run a configured experiment and write CSV tables")
    run.add_argument("config", help="config file or bundled example name")
    run.add_argument("--reproducible", action="store_true",
                     help="omit the timestamp line so outputs are byte-identical across runs")
    run.add_argument("--seed", type=int, help="override the config's seed (unsigned 64-bit)")
    run.add_argument("--out", help="output directory")
    validate = sub.add_parser("validate", help="parse and validate a config file")
    validate.add_argument("config")
    sub.add_parser("list-examples", help="list bundled example configs")
    return parser


def _cmd_run(args) -> int:
    from .runner import check_expectations, run, write_tables

    config = resolve_config(args.config)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer", field="--seed")
        config = dataclasses.replace(config, seed=args.seed)
    out_dir = args.out or os.environ.get(OUTPUT_ENV) or config.output_path
    tables = run(config)
    try:
        written = write_tables(tables, out_dir, reproducible=args.reproducible)
    except OSError as exc:
        print(f"error: cannot write results: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(f"wrote {path}")
    checks = check_expectations(config, tables)
    failed = [c for c in checks if not c.passed]
    for c in checks:
        where = f"{c.row.state}/{c.row.label}@eta={c.row.eta:g}" if c.row else c.expectation.source
        print(f"{'PASS' if c.passed else 'FAIL'} {c.expectation.analysis} {where}: {c.detail}")
    if checks:
        print(f"{len(checks) - len(failed)}/{len(checks)} expectation checks passed")
    return EXIT_RUNTIME if failed else EXIT_OK


def _cmd_validate(args) -> int:
    config = resolve_config(args.config)
    cells = len(config.states) * len(config.eta_list)
    print(f"ok: {len(config.states)} state(s) x {len(config.eta_list)} eta value(s) = {cells} cell(s), "
          f"{config.n_samples} samples each; analyses: {', '.join(a.kind for a in config.analyses)}; "
          f"{len(config.expectations)} expectation(s)")
    return EXIT_OK


def _cmd_list(args) -> int:
    for name, text in bundled_examples().items():
        config = parse_config(text, f"{name}.cfg")
        print(f"{name:<10} {config.description}")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "validate": _cmd_validate, "list-examples": _cmd_list}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except HeterodyneError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
