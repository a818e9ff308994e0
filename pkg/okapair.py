#!/usr/bin/env python3
"""
okapair - Main Entry Point
--------------------------
Command-line interface for verifying Okamoto-Painleve chart atlases,
integrating their time flows through poles, eliminating Painleve systems
and classifying intersection matrices.

Usage:
    ./okapair.py verify --atlas e7
    ./okapair.py integrate --atlas e7 --param alpha=0 --chart U0 --x0 0 --y0 0 --t0 0 --t1 10
    ./okapair.py eliminate --system II
    ./okapair.py classify --file e7.json
    ./okapair.py tables

Exit codes: 0 success, 1 failed identity or integration, 2 usage or parse error.
"""

import argparse
import sys
from typing import Dict, List, Optional, Sequence

from loguru import logger
from pydantic import ValidationError

from src.controllers.main_controller import EXIT_FAILED, EXIT_USAGE, MainController
from src.handlers.log_handler import LogHandler
from src.utils.config import OkaPairConfig, RunConfig
from src.utils.errors import (
    AtlasError,
    EvaluationError,
    ExpressionError,
    IntegrationError,
    LatticeError,
    OkaPairError,
    PainleveError,
)
from src.views.console_view import ConsoleView

VERSION = "1.0.0"
APP_NAME = "okapair"

USAGE_ERRORS = (ExpressionError, AtlasError, LatticeError, PainleveError, EvaluationError)


def parse_complex(text: str) -> complex:
    """'re' or 're,im'."""
    parts = text.split(',')
    try:
        if len(parts) == 1:
            return complex(float(parts[0]), 0.0)
        if len(parts) == 2:
            return complex(float(parts[0]), float(parts[1]))
    except ValueError:
        pass
    raise argparse.ArgumentTypeError(f"not a complex number: {text!r} (use re or re,im)")


def parse_param(text: str) -> tuple:
    name, sep, value = text.partition('=')
    if not sep or not name.strip():
        raise argparse.ArgumentTypeError(f"parameter must look like name=value, got {text!r}")
    return name.strip(), parse_complex(value)


def parse_path(text: str) -> List[complex]:
    return [parse_complex(p) for p in text.split(';') if p.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=APP_NAME,
        description='Okamoto-Painleve pairs: exact verification and chart-switching integration',
    )
    parser.add_argument('--version', action='version', version=f"{APP_NAME} v{VERSION}")
    parser.add_argument('--config', help='configuration file (default: config/okapair_config.json)')
    noise = parser.add_mutually_exclusive_group()
    noise.add_argument('--verbose', action='store_true', help='log at DEBUG')
    noise.add_argument('--quiet', action='store_true', help='log warnings only')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--json', dest='json_output', action='store_true',
                        help='print the machine-readable JSON twin instead of the report')
    common.add_argument('--out', help='write the report or trajectory to this path')

    source = argparse.ArgumentParser(add_help=False)
    source.add_argument('--atlas', help='built-in atlas name (e7, d8)')
    source.add_argument('--file', help='atlas DSL file')

    sub = parser.add_subparsers(dest='command', required=True)
    sub.add_parser('verify', parents=[common, source], help='run the identity suite on an atlas')

    integ = sub.add_parser('integrate', parents=[common, source], help='integrate the time flow')
    integ.add_argument('--param', action='append', type=parse_param, default=[],
                       metavar='NAME=VALUE', help='numeric parameter value (repeatable)')
    integ.add_argument('--chart', help='chart of the initial state (default: first chart)')
    integ.add_argument('--x0', type=parse_complex, default=0j)
    integ.add_argument('--y0', type=parse_complex, default=0j)
    integ.add_argument('--t0', type=parse_complex, default=0j)
    integ.add_argument('--t1', type=parse_complex)
    integ.add_argument('--path', type=parse_path, help="waypoints 're,im;re,im;...'")
    integ.add_argument('--rtol', type=float)
    integ.add_argument('--atol', type=float)
    integ.add_argument('--switching', choices=['auto', 'off', 'forced'])
    integ.add_argument('--format', choices=['json', 'csv'])

    elim = sub.add_parser('eliminate', parents=[common], help='eliminate y from a Painleve Hamiltonian')
    elim.add_argument('--system', help='catalog tag such as II or P_III')
    elim.add_argument('--reduction', help='chart reduction key such as E7_U0 or D8_U0')

    cls = sub.add_parser('classify', parents=[common], help='classify an intersection matrix')
    cls.add_argument('--file', help='matrix JSON {"n": N, "entries": [[...]]}')
    cls.add_argument('--type', dest='root_type', help='catalog label such as E7~')

    sub.add_parser('tables', parents=[common], help='print the classification tables')
    return parser


def to_run_config(args: argparse.Namespace) -> RunConfig:
    data = {k: v for k, v in vars(args).items()
            if k not in ('config', 'verbose', 'quiet', 'param') and v is not None}
    if getattr(args, 'param', None):
        params: Dict[str, complex] = dict(args.param)
        data['params'] = params
    return RunConfig(**data)


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    config = OkaPairConfig(args.config)
    level = 'DEBUG' if args.verbose else 'WARNING' if args.quiet else None
    log = LogHandler(config.logging(), level)
    view = ConsoleView(verbose=args.verbose, quiet=getattr(args, 'json_output', False))
    try:
        run = to_run_config(args)
        return MainController(config, view).run(run)
    except ValidationError as exc:
        message = '; '.join(e['msg'] for e in exc.errors())
        logger.error(f"invalid arguments: {message}")
        view.error(message)
        return EXIT_USAGE
    except USAGE_ERRORS as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        view.error(str(exc))
        return EXIT_USAGE
    except IntegrationError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        view.error(str(exc))
        return EXIT_FAILED
    except OkaPairError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        view.error(str(exc))
        return EXIT_FAILED
    finally:
        log.close()


if __name__ == '__main__':
    sys.exit(main())
