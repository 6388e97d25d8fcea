"""Command-line entry point: ``speclab run <config>`` and per-stage subcommands."""

import argparse
import sys
import traceback

from ..errors import ConfigError, SpeclabError
from ..io import write_json
from .config import apply_overrides, load_config, validate
from .runner import STAGES, Runner

EXIT_PASS, EXIT_CHECK, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3


def build_parser():
    parser = argparse.ArgumentParser(prog="speclab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run",) + STAGES:
        p = sub.add_parser(name, help="all stages in order" if name == "run" else f"{name} stage only")
        p.add_argument("config", help="YAML or JSON experiment file")
        p.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config entry (dotted path), may repeat")
    return parser


def _print_checks(checks, stream):
    for name, c in sorted(checks.items()):
        print(f"{'PASS' if c['pass'] else 'FAIL'} {name}: {c['value']} (limit {c['limit']})", file=stream)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = validate(apply_overrides(load_config(args.config), args.sets))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (TypeError, ValueError, KeyError, AttributeError) as exc:
        print(f"config error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    runner = Runner(cfg)
    stage = args.command
    try:
        checks = runner.run_all() if stage == "run" else {
            f"{stage}.{k}": v for k, v in runner.run_stage(stage).items()}
    except SpeclabError as exc:
        _error_record(runner, stage, exc)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except Exception as exc:  # noqa: BLE001 - any failure is reported as a computation error
        _error_record(runner, stage, exc)
        traceback.print_exc()
        return EXIT_COMPUTE
    _print_checks(checks, sys.stdout)
    return EXIT_PASS if all(c["pass"] for c in checks.values()) else EXIT_CHECK


def _error_record(runner, stage, exc):
    try:
        runner.out.mkdir(parents=True, exist_ok=True)
        write_json(runner.path("error.json"), {"stage": stage, "error": type(exc).__name__,
                                               "message": str(exc)})
    except OSError:
        pass


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
