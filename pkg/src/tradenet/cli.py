"""``tradenet`` command line.

Exit codes: 0 success, 1 computational failure (non-convergence),
2 input or configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import pipeline
from .centrality import ConvergenceError as EigenConvergenceError
from .config import ConfigError, PipelineConfig, load_config
from .econometrics import ConvergenceError
from .fixture import N_WEEKS, WEEK_START, write_fixture
from .ingest import IngestError

COMMANDS = {
    "build-network": pipeline.cmd_build_network,
    "stats": pipeline.cmd_stats,
    "communities": pipeline.cmd_communities,
    "centrality": pipeline.cmd_centrality,
    "regress": pipeline.cmd_regress,
    "report": pipeline.cmd_report,
}


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI file with a [tradenet] section")
    common.add_argument("--fixture", action="store_true", help="use the bundled synthetic 55-country data")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", type=Path, default=None, help="output directory")
    p = argparse.ArgumentParser(prog="tradenet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=(fn.__doc__ or "").splitlines()[0])
    return p


def resolve_config(args) -> PipelineConfig:
    cfg = load_config(args.config) if args.config is not None else PipelineConfig()
    cfg = cfg.with_overrides(out_dir=args.out, seed=args.seed)
    if args.fixture:
        paths = write_fixture(Path(cfg.out_dir) / "fixture", seed=cfg.seed)
        cfg = cfg.with_overrides(week_start=WEEK_START, n_weeks=N_WEEKS, year=cfg.year or "fixture", **paths)
    elif args.config is None:
        raise ConfigError("--config is required unless --fixture is given")
    return cfg


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        result = COMMANDS[args.command](cfg)
    except (ConfigError, IngestError, FileNotFoundError, ValueError) as exc:
        print(f"tradenet: error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, EigenConvergenceError, np.linalg.LinAlgError) as exc:
        print(f"tradenet: computation failed: {exc}", file=sys.stderr)
        return 1
    print(json.dumps(pipeline._clean(result), indent=2))
    return 1 if _failed_fits(result) else 0


def _failed_fits(result) -> list:
    """Non-convergent fits flagged by ``regress``, directly or nested in ``report``."""
    if not isinstance(result, dict):
        return []
    return result.get("failed") or result.get("regress", {}).get("failed") or []


if __name__ == "__main__":
    sys.exit(main())
