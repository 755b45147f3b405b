"""Command-line entry point: one subcommand per stage plus ``pipeline``.

Exit codes: 0 success, 1 usage or configuration error (including running a
stage before its prerequisites), 2 data error, 3 upstream-service error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

from . import __version__, fixture_dir
from .config import ConfigError, load_config
from .ingest import KeywordParseError, StockDataError, UpstreamError
from .pipeline import STAGES, MissingUpstreamError, run_pipeline, run_stage
from .topics import LabelingError
from .vectors import VectorFileError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_UPSTREAM = 0, 1, 2, 3

logger = logging.getLogger("newsregime")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="run config YAML (default: bundled synthetic fixtures)")
    common.add_argument("-o", "--run-dir", help="run directory (default: paths.output_dir or ./newsregime-run)")
    common.add_argument("--force", action="store_true", help="rerun even when up-to-date")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="newsregime", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for stage in STAGES:
        sub.add_parser(stage, parents=[common], help=f"run the {stage} stage")
    sub.add_parser("pipeline", parents=[common], help="run every stage in order")
    return p


def _run_dir(args, cfg) -> Path:
    if args.run_dir:
        return Path(args.run_dir)
    if cfg.paths.output_dir:
        return cfg.resolve(cfg.paths.output_dir)
    return Path("newsregime-run")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config or (fixture_dir() / "config.yaml"))
        cfg.validate(check_paths=True)
        run_dir = _run_dir(args, cfg)
        t0 = time.perf_counter()
        if args.command == "pipeline":
            results = run_pipeline(cfg, run_dir, args.force)
        else:
            run_dir.mkdir(parents=True, exist_ok=True)
            results = [run_stage(args.command, cfg, run_dir, args.force)]
        for r in results:
            print(f"{r.stage}: {r.status} ({', '.join(r.outputs)})")
        print(f"run directory: {run_dir} [{time.perf_counter() - t0:.1f}s]")
        return EXIT_OK
    except (ConfigError, MissingUpstreamError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UpstreamError, LabelingError) as exc:
        print(f"upstream error: {exc}", file=sys.stderr)
        return EXIT_UPSTREAM
    except (KeywordParseError, StockDataError, VectorFileError, ValueError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
