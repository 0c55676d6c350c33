"""estimate: error rates and confidence intervals for every worker"""

import argparse
import logging

from src.cli.options import common_parent, default_of, file_section, flag_values, store_true_or_none, str_list, with_default
from src.config.run_config import EstimateConfig, merge_config
from src.core.errors import UsageError
from src.services.estimation_service import estimation_service
from src.services.reports import workers_frame, write_csv, write_json

logger = logging.getLogger(__name__)

FLAGS = [
    "input",
    "format",
    "method",
    "confidence",
    "interval_mode",
    "approx_intervals",
    "strategy",
    "pruning_threshold",
    "seed",
    "workers",
    "stratify",
    "selectivity",
    "categorical",
    "em_max_iter",
    "em_tol",
    "em_restarts",
    "output",
    "workers_csv",
]


def register(subparsers):
    E = EstimateConfig
    parser = subparsers.add_parser(
        "estimate",
        parents=[common_parent()],
        help="estimate worker error rates",
        description="Estimate every worker's error rate from a response file and write a JSON report.",
    )
    parser.add_argument("--input", help="response file, header task_id,worker_id,answer")
    parser.add_argument("--format", choices=["csv", "json"], help="input format (default: from the file extension)")
    parser.add_argument("--method", choices=["diff3", "diffgen", "em", "majority"], help=with_default("estimator", E, "method"))
    parser.add_argument("--confidence", type=float, help=with_default("interval confidence level c", E, "confidence"))
    parser.add_argument(
        "--interval-mode",
        choices=["linearized", "conservative"],
        help=with_default("conservative reports level 3c-2 and needs c > 2/3", E, "interval_mode"),
    )
    store_true_or_none(parser, "--approx-intervals", "use the normal approximation for agreement intervals (default: False)")
    parser.add_argument(
        "--strategy",
        choices=["exhaustive", "pruning", "greedy"],
        help="partition search for diffgen (default: exhaustive)",
    )
    parser.add_argument("--pruning-threshold", type=float, help="peers above this rough rate are dropped (default: 0.35)")
    parser.add_argument("--workers", type=str_list, help="comma-separated worker subset; tasks all of them answered are kept")
    parser.add_argument("--stratify", help="type:<column> or difficulty:<threshold>; estimates each stratum separately")
    parser.add_argument("--selectivity", type=float, help="known prior probability of Y; adds a constant pseudo-worker")
    store_true_or_none(parser, "--categorical", "answers are arbitrary labels, estimated per code bit (default: False)")
    parser.add_argument("--em-max-iter", type=int, help=with_default("EM iteration cap", E, "em_max_iter"))
    parser.add_argument("--em-tol", type=float, help=with_default("EM convergence tolerance", E, "em_tol"))
    parser.add_argument("--em-restarts", type=int, help=with_default("EM random restarts", E, "em_restarts"))
    parser.add_argument("--output", help="JSON report path (default: standard output)")
    parser.add_argument("--workers-csv", help="also write per-worker estimates as CSV")
    parser.set_defaults(handler=run)
    return parser


def check_conflicts(cfg: EstimateConfig):
    if cfg.method != "diffgen" and (cfg.strategy is not None or cfg.pruning_threshold is not None):
        raise UsageError(f"--strategy and --pruning-threshold only apply to --method diffgen, not {cfg.method}")
    if cfg.pruning_threshold is not None and cfg.strategy != "pruning":
        raise UsageError("--pruning-threshold needs --strategy pruning")
    em_fields = ("em_max_iter", "em_tol", "em_restarts")
    if cfg.method != "em" and any(getattr(cfg, k) != default_of(EstimateConfig, k) for k in em_fields):
        raise UsageError("--em-* options only apply to --method em")
    if cfg.method in ("em", "majority") and cfg.interval_mode != "linearized":
        raise UsageError(f"--method {cfg.method} produces no intervals; drop --interval-mode")
    if cfg.method == "majority" and cfg.selectivity is not None:
        raise UsageError("--selectivity does not apply to --method majority")


def run(args: argparse.Namespace) -> int:
    cfg = merge_config(EstimateConfig, file_section(args, "estimate"), flag_values(args, FLAGS))
    check_conflicts(cfg)
    if cfg.method == "diffgen":
        strategy = cfg.strategy or "exhaustive"
        threshold = cfg.pruning_threshold
        if strategy == "pruning" and threshold is None:
            threshold = 0.35
        cfg = cfg.model_copy(update={"strategy": strategy, "pruning_threshold": threshold})
    report = estimation_service.run(cfg)
    write_json(report, cfg.output)
    if cfg.workers_csv:
        write_csv(workers_frame(report.sections), cfg.workers_csv)
    return 0
