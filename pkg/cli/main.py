#!/usr/bin/env python
"""
egolsm - command-line workbench

Usage:
    python cli.py simulate --n 300 --seed 7 --out results/sim
    python cli.py fit --network data/karate.txt --center 3 --k 2 --no-covariates
    python cli.py analyze --preset karate
    python cli.py experiment --preset simulation1-desk --workers 4
    python cli.py presets
"""

import argparse
import logging
import os
import sys
from pathlib import Path

from dotenv import load_dotenv

# Load environment variables FIRST (before importing project modules)
load_dotenv('.env')

from cli.command_handler import CommandHandler
from egolsm.constants import LOG_DIR

SCENARIO_CHOICES = ["imbalanced", "balanced", "full"]


def setup_logging():
    """File log at INFO+, console at WARNING+ so rich tables stay readable."""
    LOG_DIR.mkdir(exist_ok=True)
    level = getattr(logging, os.getenv("EGOLSM_LOG_LEVEL", "INFO").upper(), logging.INFO)

    root_logger = logging.getLogger()
    root_logger.setLevel(level)
    root_logger.handlers.clear()

    file_handler = logging.FileHandler(LOG_DIR / "cli.log", encoding='utf-8')
    file_handler.setLevel(level)
    file_handler.setFormatter(logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    ))

    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.WARNING)
    console_handler.setFormatter(logging.Formatter('%(levelname)s: %(message)s'))

    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)


def _id_list(value: str):
    try:
        return [int(v) for v in value.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node ids, got '{value}'")


def _scenario_list(value: str):
    items = [v.strip() for v in value.split(",") if v.strip()]
    bad = [v for v in items if v not in SCENARIO_CHOICES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown scenario(s) {bad}; choose from {SCENARIO_CHOICES}")
    return items


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--preset', help='Named preset (see: presets)')
    common.add_argument('--config', type=Path, help='Flat key = value config file')
    common.add_argument('--seed', type=int)
    common.add_argument('--out', type=Path, help='Output directory')

    source = common.add_argument_group('network')
    source.add_argument('--network', type=Path, help='Edge-list path')
    source.add_argument('--covariates', type=Path, help='Covariates (dense CSV or i j x triplets)')
    source.add_argument('--no-covariates', action='store_true', default=None, help='Use X = 0')
    source.add_argument('--labels', type=Path, help='node_id,label CSV')
    source.add_argument('--index-base', choices=['auto', '0', '1'])
    source.add_argument('--generator', choices=['simulation1', 'dcsbm'])
    source.add_argument('--n', type=int, help='Generated network size')
    source.add_argument('--blocks', type=int, help='DC-SBM block count')

    view = common.add_argument_group('view')
    view.add_argument('--center', type=int, help='Center node id')
    view.add_argument('--centers', type=_id_list, help='Comma-separated center ids')
    view.add_argument('--scenario', type=_scenario_list, help='Scenario(s), comma-separated')

    solver = common.add_argument_group('solver')
    solver.add_argument('--k', type=int, help='Latent dimension')
    solver.add_argument('--eta', type=float, help='Base step size (default 0.2)')
    solver.add_argument('--iters', type=int, help='Iterations (default 500)')
    solver.add_argument('--projection', choices=['practical', 'theoretical'])
    solver.add_argument('--conditional', action='store_true', default=None,
                        help='Drop pairs containing the center from the objective')
    solver.add_argument('--stop-tol', type=float, help='Relative objective change for early stopping')

    runner = common.add_argument_group('runner')
    runner.add_argument('--replicates', type=int)
    runner.add_argument('--workers', type=int)
    runner.add_argument('--restarts', type=int, help='k-means restarts')
    runner.add_argument('--clusters', type=int, help='k-means K')
    return common


def parse_args(argv=None):
    """解析命令行参数"""
    parser = argparse.ArgumentParser(
        description='egolsm - latent space estimation from an ego-centered partial view',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=__doc__,
    )
    subparsers = parser.add_subparsers(dest='command', required=True)
    common = _common_parser()

    subparsers.add_parser('simulate', parents=[common], help='Generate a truth and a network sample')
    subparsers.add_parser('fit', parents=[common], help='Fit one center of an edge-list network')
    subparsers.add_parser('analyze', parents=[common], help='Centralities, imbalance and accuracy per center')
    subparsers.add_parser('experiment', parents=[common], help='Replicated simulation study')
    subparsers.add_parser('presets', help='List named presets')
    return parser.parse_args(argv)


def main(argv=None):
    """主函数"""
    setup_logging()
    try:
        args = parse_args(argv)
        handler = CommandHandler()
        code = handler.handle(args)
    except KeyboardInterrupt:
        print("\n\033[33minterrupted\033[0m")
        code = 130
    sys.exit(code)


if __name__ == "__main__":
    main()
