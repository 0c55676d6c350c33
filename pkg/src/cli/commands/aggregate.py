"""aggregate: one decision per task from worker answers and error rates"""

import argparse

from src.cli.options import common_parent, file_section, flag_values, store_true_or_none, with_default
from src.config.run_config import AggregateConfig, merge_config
from src.services.aggregation_service import aggregation_service, parse_rates
from src.services.reports import decisions_frame, write_csv

FLAGS = ["input", "format", "estimates", "rates", "selectivity", "worst_case", "strict_worst_case", "confidence", "output"]


def register(subparsers):
    A = AggregateConfig
    parser = subparsers.add_parser(
        "aggregate",
        parents=[common_parent(seed=False)],
        help="decide every task by weighted majority",
        description=(
            "Write task_id,answer,accuracy,worst_case_accuracy,combined_error_bound "
            "for every task of a response file."
        ),
    )
    parser.add_argument("--input", help="response file, header task_id,worker_id,answer")
    parser.add_argument("--format", choices=["csv", "json"], help="input format (default: from the file extension)")
    parser.add_argument("--estimates", help="JSON report written by `estimate`")
    parser.add_argument("--rates", type=parse_rates, help="inline rates instead of a report, e.g. w1=0.1,w2=0.3")
    parser.add_argument("--selectivity", type=float, help=with_default("prior probability of Y", A, "selectivity"))
    store_true_or_none(parser, "--worst-case", "add worst-case accuracy and the combined error bound (default: False)")
    store_true_or_none(
        parser,
        "--strict-worst-case",
        "worst case that deflates dissenting workers' rates; implies --worst-case (default: False)",
    )
    parser.add_argument("--confidence", type=float, help="confidence for the combined bound (default: the estimates' level)")
    parser.add_argument("--output", help="decisions CSV path (default: standard output)")
    parser.set_defaults(handler=run)
    return parser


def run(args: argparse.Namespace) -> int:
    cfg = merge_config(AggregateConfig, file_section(args, "aggregate"), flag_values(args, FLAGS))
    decisions = aggregation_service.run(cfg)
    write_csv(decisions_frame(decisions), cfg.output)
    return 0
