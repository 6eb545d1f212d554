"""Command-line entry point: ingest, features, diversity, classify, train,
forecast, evaluate, and pool subcommands over the pipeline module.

Exit codes: 0 success, 1 configuration/validation error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import pipeline
from .config import RunConfig
from .core import ConfigError, DataError

__all__ = ["main"]

_COMMANDS = {
    "ingest": pipeline.run_ingest,
    "features": pipeline.run_features,
    "diversity": pipeline.run_diversity,
    "classify": pipeline.run_classify,
    "train": pipeline.run_train,
    "forecast": pipeline.run_forecast,
    "evaluate": pipeline.run_evaluate,
    "pool": pipeline.run_pool,
}


class _Parser(argparse.ArgumentParser):
    """Argument errors are configuration errors (exit 1, not argparse's 2)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="idcombine", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--data", help="input demand CSV")
        p.add_argument("--layout", choices=["wide", "long"])
        p.add_argument("--period", help="monthly, daily, or an integer seasonal period")
        p.add_argument("--horizon", type=int)
        p.add_argument("--mode", choices=["fide", "divide"])
        p.add_argument("--loss", help="rmsse or spl@<u>")
        p.add_argument("--trainer", choices=["weighted-loss", "best-class"])
        p.add_argument("--pooling", choices=["none", "islands", "screened", "lasso"])
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--model", help="model JSON path (written by train, read by forecast)")
        p.add_argument("--quantile-models", dest="quantile_models",
                       help="quantile model bundle path")
        p.add_argument("--forecasts", help="forecasts.csv to evaluate")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=int)
        p.add_argument("--production", action="store_const", const=True, default=None,
                       help="fit on the full history instead of holding out the final horizon")
        p.add_argument("--with-quantiles", dest="with_quantiles", action="store_const",
                       const=True, default=None,
                       help="also train the four quantile-level models")
        p.add_argument("--per-method", dest="per_method", action="store_const",
                       const=True, default=None,
                       help="emit per-method forecast rows")
        p.add_argument("--by-class", dest="by_class", action="store_const",
                       const=True, default=None,
                       help="also break metrics down by SBC class")
        p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
        overrides = {
            k: v for k, v in vars(args).items()
            if k not in ("command", "config", "verbose") and v is not None
        }
        cfg = RunConfig.from_sources(args.config, **overrides)
        summary = _COMMANDS[args.command](cfg)
        print(json.dumps(summary, sort_keys=True, default=str))
        return 0
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
