"""experiment: coverage, estimator comparison, decision rules, price and eviction protocols"""

import argparse
from typing import Any, Dict

from src.cli.options import common_parent, file_section, float_list, store_true_or_none
from src.config.run_config import ExperimentConfig
from src.core.errors import UsageError
from src.services.experiment_service import experiment_service

EXPERIMENTS = ["coverage", "table1", "fig3", "price", "eviction"]

# flag -> {experiment: field in that experiment's section}
SECTION_FLAGS: Dict[str, Dict[str, str]] = {
    "m": {"coverage": "m"},
    "trials": {"coverage": "trials", "price": "trials"},
    "tasks": {"coverage": "tasks", "table1": "tasks", "eviction": "tasks"},
    "workers": {"table1": "workers"},
    "reps": {"table1": "reps"},
    "strategy": {"coverage": "strategy", "eviction": "strategy"},
    "input": {"coverage": "input"},
    "gold": {"coverage": "gold"},
    "stratify": {"coverage": "stratify"},
    "c_grid": {"coverage": "c_grid"},
    "confidence": {"table1": "confidence", "price": "c", "eviction": "confidence"},
    "team": {"fig3": "team"},
    "bad": {"fig3": "bad"},
    "good_rate": {"fig3": "good_rate"},
    "bad_rate": {"fig3": "bad_rate"},
    "selectivity": {"fig3": "selectivity", "price": "s"},
    "target_accuracy": {"price": "target_accuracy"},
    "sweep": {"price": "sweep"},
    "strict": {"price": "strict"},
    "worker_grid": {"price": "worker_grid"},
    "task_grid": {"price": "task_grid"},
    "rule": {"eviction": "rule"},
    "alpha": {"eviction": "alphas"},
    "thresholds": {"eviction": "thresholds"},
    "runs": {"eviction": "runs"},
    "phases": {"eviction": "phases"},
    "team_size": {"eviction": "team_size"},
}


def int_list(value: str):
    return [int(x) for x in float_list(value)]


def register(subparsers):
    parser = subparsers.add_parser(
        "experiment",
        parents=[common_parent()],
        help="run an experiment protocol",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        description=(
            "Run an experiment and write <out-dir>/<name>.csv plus <name>.json.\n\n"
            "CSV columns:\n"
            "  coverage  [stratum,]c,coverage,pairs\n"
            "  table1    tasks,workers,method,mean_abs_error\n"
            "  fig3      bad_count,simple_error,weighted_error\n"
            "  price     workers,tasks,saturated,achieved_accuracy,cost\n"
            "  eviction  threshold,rule,alpha,mean_c1,mean_c2,mean_cost,evictions,dominance_violations\n"
        ),
    )
    parser.add_argument("name", choices=EXPERIMENTS, help="experiment to run")
    parser.add_argument("--out-dir", help="output directory (default: results)")

    parser.add_argument("--m", type=int, help="coverage: workers per trial (default: 3)")
    parser.add_argument("--trials", type=int, help="coverage: trials (default: 1000); price: phases per point (default: 20)")
    parser.add_argument("--tasks", type=int, help="tasks per matrix; coverage 500, table1 400, eviction 25 per phase")
    parser.add_argument("--workers", type=int, help="table1: workers per matrix (default: 3)")
    parser.add_argument("--reps", type=int, help="table1: repetitions (default: 500)")
    parser.add_argument("--strategy", choices=["exhaustive", "pruning", "greedy"], help="coverage/eviction partition search (default: greedy)")
    parser.add_argument("--input", help="coverage: response file to sample workers from")
    parser.add_argument("--gold", help="coverage: gold labels for --input")
    parser.add_argument("--stratify", help="coverage: type:<column> or difficulty:<threshold>")
    parser.add_argument("--c-grid", type=float_list, help="coverage: confidence levels (default: 0.05,0.10,...,0.95)")
    parser.add_argument("--confidence", type=float, help="table1 0.9, price 0.9, eviction 0.35")
    parser.add_argument("--team", type=int, help="fig3: team size (default: 9)")
    parser.add_argument("--bad", type=int, help="fig3: single bad-worker count (default: every count 0..team)")
    parser.add_argument("--good-rate", type=float, help="fig3: good worker rate (default: 0.1)")
    parser.add_argument("--bad-rate", type=float, help="fig3: bad worker rate (default: 0.3)")
    parser.add_argument("--selectivity", type=float, help="fig3/price: prior probability of Y (default: 0.5)")
    parser.add_argument("--target-accuracy", type=float, help="price: worst-case accuracy to reach (default: 0.9)")
    parser.add_argument("--sweep", choices=["workers", "tasks", "tradeoff"], help="price: sweep (default: tradeoff)")
    store_true_or_none(parser, "--strict", "price: sign-aware worst case (default: False)")
    parser.add_argument("--worker-grid", type=int_list, help="price: worker counts (default: 3,5,7,9,11,15,21,25,31)")
    parser.add_argument("--task-grid", type=int_list, help="price: task counts (default: 25,50,75,100,130,150,200,300,400,500)")
    parser.add_argument("--rule", choices=["normal", "conservative"], help="eviction: one rule (default: both)")
    parser.add_argument("--alpha", type=float_list, help="eviction: cost multipliers (default: 0.2,1,5)")
    parser.add_argument("--thresholds", type=float_list, help="eviction: thresholds (default: -0.4,-0.35,...,0.4)")
    parser.add_argument("--runs", type=int, help="eviction: Monte-Carlo runs (default: 200)")
    parser.add_argument("--phases", type=int, help="eviction: phases per run (default: 30)")
    parser.add_argument("--team-size", type=int, help="eviction: team size (default: 7)")
    parser.set_defaults(handler=run)
    return parser


def build_config(args: argparse.Namespace, base: Dict[str, Any]) -> ExperimentConfig:
    """Overlay flags for the chosen experiment onto the file section"""
    data = dict(base)
    data["name"] = args.name
    if args.seed is not None:
        data["seed"] = args.seed
    if args.out_dir is not None:
        data["out_dir"] = args.out_dir

    section = dict(data.get(args.name) or {})
    for flag, targets in SECTION_FLAGS.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if args.name not in targets:
            option = "--" + flag.replace("_", "-")
            raise UsageError(f"{option} does not apply to experiment {args.name}")
        section[targets[args.name]] = value
    data[args.name] = section
    return ExperimentConfig(**data)


def run(args: argparse.Namespace) -> int:
    cfg = build_config(args, file_section(args, "experiment"))
    experiment_service.run(cfg)
    return 0
