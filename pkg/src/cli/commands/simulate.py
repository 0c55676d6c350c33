"""simulate: synthetic responses and gold labels from known error rates"""

import argparse

from src.cli.options import common_parent, file_section, flag_values, float_list, with_default
from src.config.run_config import SimulateConfig, merge_config
from src.services.experiment_service import experiment_service

FLAGS = ["rates", "tasks", "selectivity", "seed", "output", "gold_output"]


def register(subparsers):
    S = SimulateConfig
    parser = subparsers.add_parser(
        "simulate",
        parents=[common_parent()],
        help="write a synthetic response file",
        description="Draw answers for workers with the given error rates and write them with their gold labels.",
    )
    parser.add_argument("--rates", type=float_list, help="comma-separated true error rates, one per worker")
    parser.add_argument("--tasks", type=int, help=with_default("number of tasks", S, "tasks"))
    parser.add_argument("--selectivity", type=float, help=with_default("probability a task's truth is Y", S, "selectivity"))
    parser.add_argument("--output", help=with_default("response CSV path", S, "output"))
    parser.add_argument("--gold-output", help=with_default("gold CSV path", S, "gold_output"))
    parser.set_defaults(handler=run)
    return parser


def run(args: argparse.Namespace) -> int:
    cfg = merge_config(SimulateConfig, file_section(args, "simulate"), flag_values(args, FLAGS))
    experiment_service.simulate(cfg)
    return 0
