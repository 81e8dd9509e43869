"""Command-line entry point: ``veriblock run-scenario | run-experiment | verify-chain``.

Exit codes: 0 success, 1 chain corruption detected, 2 configuration or
argument error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Optional, Sequence

from .config import load_config
from .errors import ChainFormatError, ConfigError, VeriBlockError
from .reports import (
    run_sweep,
    scenario_from_config,
    verify_dump,
    write_experiment_outputs,
    write_scenario_outputs,
)
from .sim import DEFAULT_SEED, ScenarioKind

EXIT_OK = 0
EXIT_CORRUPT = 1
EXIT_CONFIG = 2
EXIT_IO = 3

log = logging.getLogger("veriblock")


def _error(message: str, code: int) -> int:
    print(f"veriblock: {message}", file=sys.stderr)
    return code


def cmd_run_scenario(
    config_path: Optional[str], kind: str, n: int, seed: int, out_path: str
) -> int:
    try:
        config = load_config(config_path)
        scenario_kind = ScenarioKind.parse(kind)
        if n < 2:
            raise ConfigError(f"n must be >= 2 (one incident plus reviews), got {n}")
    except ConfigError as exc:
        return _error(f"config error: {exc}", EXIT_CONFIG)
    except ValueError as exc:
        return _error(f"argument error: {exc}", EXIT_CONFIG)
    except OSError as exc:
        return _error(f"cannot read config: {exc}", EXIT_IO)
    outcome = scenario_from_config(config, scenario_kind, n, seed)
    try:
        written = write_scenario_outputs(outcome, out_path, scenario_kind, n, seed)
    except OSError as exc:
        return _error(f"cannot write output: {exc}", EXIT_IO)
    for path in written:
        log.info("wrote %s", path)
    print(" ".join(f"{k}={v!r}" for k, v in outcome.scores.items()))
    return EXIT_OK


def cmd_run_experiment(
    config_path: Optional[str], out_dir: str, seed: Optional[int] = None
) -> int:
    try:
        config = load_config(config_path)
    except ConfigError as exc:
        return _error(f"config error: {exc}", EXIT_CONFIG)
    except OSError as exc:
        return _error(f"cannot read config: {exc}", EXIT_IO)
    series = run_sweep(config, None if seed is None else [seed])
    try:
        written = write_experiment_outputs(series, out_dir)
    except OSError as exc:
        return _error(f"cannot write output: {exc}", EXIT_IO)
    for path in written:
        log.info("wrote %s", path)
    for s in series:
        f = s.final
        print(f"p_good={s.p_good} seed={s.seed} n={f.n} alg1={f.alg1} alg2={f.alg2} alg3={f.alg3}")
    return EXIT_OK


def cmd_verify_chain(dump_path: str) -> int:
    try:
        bad_height = verify_dump(dump_path)
    except OSError as exc:
        return _error(f"cannot read dump: {exc}", EXIT_IO)
    except ChainFormatError as exc:
        return _error(f"unparseable dump: {exc}", EXIT_IO)
    if bad_height is not None:
        print(f"chain corrupted at height {bad_height}")
        return EXIT_CORRUPT
    print("chain intact")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="veriblock", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    scenario = sub.add_parser("run-scenario", help="run one generated batch end to end")
    scenario.add_argument("--config", default=None)
    scenario.add_argument(
        "--kind", default="RandomSplit", help="AllSupporting, AllOpposing or RandomSplit"
    )
    scenario.add_argument("--n", type=int, default=1000, help="transactions incl. the incident")
    scenario.add_argument("--seed", type=int, default=DEFAULT_SEED)
    scenario.add_argument("--out", required=True, help="output directory")

    experiment = sub.add_parser("run-experiment", help="incremental-evidence sweep")
    experiment.add_argument("--config", default=None)
    experiment.add_argument("--seed", type=int, default=None, help="override configured seeds")
    experiment.add_argument("--out", required=True, help="output directory")

    verify = sub.add_parser("verify-chain", help="check a canonical chain dump")
    verify.add_argument("dump")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.command == "run-scenario":
            return cmd_run_scenario(args.config, args.kind, args.n, args.seed, args.out)
        if args.command == "run-experiment":
            return cmd_run_experiment(args.config, args.out, args.seed)
        return cmd_verify_chain(args.dump)
    except VeriBlockError as exc:
        return _error(str(exc), EXIT_CONFIG)


if __name__ == "__main__":
    sys.exit(main())
