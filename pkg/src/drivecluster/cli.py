"""Command-line entry point: ``synth``, ``pipeline`` and ``report``.

Exit codes: 0 success, 1 internal error, 2 invalid config/spec,
3 missing or empty data, 4 missing intermediate results.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import load_config, with_overrides
from .errors import InsufficientDataError, SpecValidationError
from .pipeline import MissingResultsError, build_report, run_pipeline
from .synth import load_fleet_spec, write_fleet_logs

logger = logging.getLogger("drivecluster")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_NO_DATA = 3
EXIT_MISSING_RESULTS = 4


def cmd_synth(args) -> int:
    spec_path = args.spec or args.config
    if spec_path is None:
        raise SpecValidationError("synth needs a fleet spec path (positional or --config)")
    spec = load_fleet_spec(spec_path)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed).validate()
    out = Path(args.out or "fleet")
    manifest = write_fleet_logs(spec, out)
    n_sessions = sum(u["sessions"] for u in manifest["users"])
    print(f"wrote {n_sessions} sessions for {len(manifest['users'])} users to {out}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config_path = args.config_path or args.config
    if config_path is None:
        raise SpecValidationError("pipeline needs --config")
    cfg = load_config(config_path)
    cfg = with_overrides(cfg, seed=args.seed, out_dir=Path(args.out) if args.out else None, jobs=args.jobs)
    summary = run_pipeline(cfg)
    print(f"{summary['users_filtered']} users analysed; results in {cfg.out_dir}")
    for sig, row in summary["optimal_k"].items():
        print(f"  {sig}: " + ", ".join(f"f{f}: K={k}" for f, k in row.items()))
    return EXIT_OK


def cmd_report(args) -> int:
    results = args.results or args.out
    if results is None:
        raise SpecValidationError("report needs a results directory")
    written = build_report(results)
    print(f"wrote {len(written)} plot-data files under {Path(results) / 'report'}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (pipeline) or fleet spec (synth)")
    common.add_argument("--seed", type=int, help="override the master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--jobs", type=int, help="worker processes for (signal, feature) cells")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    parser = argparse.ArgumentParser(prog="drivecluster", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic fleet as session logs")
    p.add_argument("spec", nargs="?", help="fleet spec (TOML)")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("pipeline", parents=[common], help="run the full analysis")
    p.add_argument("config_path", nargs="?", metavar="config", help="run config (TOML)")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("report", parents=[common], help="emit plot-data CSVs from a results directory")
    p.add_argument("results", nargs="?", help="results directory written by 'pipeline'")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except SpecValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InsufficientDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_DATA
    except MissingResultsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_RESULTS
    except Exception as exc:  # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
