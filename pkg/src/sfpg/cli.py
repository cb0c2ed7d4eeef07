"""Command line entry point: `sfpg <stage...> --config file.toml`."""

import argparse
import logging
import os
import sys

from .config import PRESETS, load_config, load_preset
from .errors import (CacheMismatch, ConfigParseError, SfpgError,
                     StageDependencyMissing)
from .pipeline import STAGES, run_pipeline

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_CACHE = 4


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sfpg",
        description="Strong-field pair generation pipeline")
    parser.add_argument("stages", nargs="+", choices=STAGES, metavar="stage",
                        help=f"one or more of: {', '.join(STAGES)}")
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--config", help="TOML configuration file")
    group.add_argument("--preset", choices=PRESETS,
                       help="bundled configuration preset")
    parser.add_argument("--out", help="override the output directory")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("SFPG_THREADS", "0")),
                        help="thread count for FFT/BLAS "
                             "(default: SFPG_THREADS or library default)")
    parser.add_argument("--no-cache", action="store_true",
                        help="ignore and do not write the correlation cache")
    parser.add_argument("--verbose", "-v", action="store_true")
    return parser


def _apply_threads(n: int):
    if n <= 0:
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS"):
        os.environ[var] = str(n)
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=n)
    except ImportError:
        pass


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    _apply_threads(args.threads)
    try:
        if args.preset:
            config = load_preset(args.preset)
        else:
            config = load_config(args.config)
        if args.out:
            import dataclasses
            from pathlib import Path
            config = dataclasses.replace(config,
                                         output_dir=Path(args.out))
        manifest = run_pipeline(config, args.stages,
                                use_cache=False if args.no_cache else None)
    except ConfigParseError as exc:
        print(f"sfpg: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CacheMismatch, StageDependencyMissing) as exc:
        stage = getattr(exc, "stage", None)
        where = f" [stage {stage}]" if stage else ""
        print(f"sfpg: cache error{where}: {exc}", file=sys.stderr)
        return EXIT_CACHE
    except SfpgError as exc:
        stage = getattr(exc, "stage", None)
        where = f" [stage {stage}]" if stage else ""
        print(f"sfpg: numerical failure{where}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(manifest)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
