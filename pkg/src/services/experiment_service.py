"""Experiment Service: runs an experiment protocol and writes its CSV and JSON summary"""

import time
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from pydantic import BaseModel, Field

from src import __version__
from src.config.run_config import ExperimentConfig, SimulateConfig
from src.core.diffgen import StrategyConfig
from src.core.errors import UsageError
from src.core.experiments import (
    comparison_experiment,
    conservative_wins,
    coverage_experiment,
    eviction_sweep,
    fig3_experiment,
    price_experiment,
)
from src.core.extensions import stratify
from src.core.model import GoldLabels
from src.core.simulator import SimConfig, gen_matrix
from src.services.estimation_service import parse_stratify
from src.services.ingestion_service import ingestion_service
from src.services.reports import digest_files, write_csv, write_json
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


class ExperimentSummary(BaseModel):
    tool: str = "crowdconf"
    version: str = __version__
    experiment: str
    config: Dict[str, Any]
    csv: str
    results: Dict[str, Any] = Field(default_factory=dict)
    timing: Dict[str, float] = Field(default_factory=dict)


class ExperimentService:
    """Service for running the experiment protocols"""

    def coverage(self, cfg: ExperimentConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        sec = cfg.coverage
        strategy = StrategyConfig(kind=sec.strategy, seed=cfg.seed)
        if sec.input is None:
            if sec.gold or sec.stratify:
                raise UsageError("--gold and --stratify need --input")
            table = coverage_experiment(
                m=sec.m, trials=sec.trials, c_grid=sec.c_grid, strategy=strategy, seed=cfg.seed, n=sec.tasks
            )
            frame = pd.DataFrame([row.model_dump() for row in table.rows])
            return frame, {"skipped_trials": table.skipped_trials}

        if sec.gold is None:
            raise UsageError("coverage on a dataset needs --gold")
        loaded = ingestion_service.load_responses(sec.input, gold_path=sec.gold)
        strata = {"all": loaded.matrix}
        if sec.stratify:
            strata = stratify(loaded.matrix, parse_stratify(sec.stratify, loaded.task_attributes)).strata

        frames = []
        skipped = {}
        for name, matrix in strata.items():
            stratum_tasks = set(matrix.tasks)
            gold = GoldLabels(labels={t: a for t, a in loaded.gold.labels.items() if t in stratum_tasks})
            table = coverage_experiment(
                m=sec.m,
                trials=sec.trials,
                c_grid=sec.c_grid,
                strategy=strategy,
                seed=cfg.seed,
                matrix=matrix,
                gold=gold,
            )
            frame = pd.DataFrame([row.model_dump() for row in table.rows])
            frame.insert(0, "stratum", name)
            frames.append(frame)
            skipped[name] = table.skipped_trials
        return pd.concat(frames, ignore_index=True), {"skipped_trials": skipped}

    def table1(self, cfg: ExperimentConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        sec = cfg.table1
        result = comparison_experiment(
            tasks=sec.tasks, workers=sec.workers, reps=sec.reps, seed=cfg.seed, c=sec.confidence
        )
        frame = pd.DataFrame(
            [{"tasks": sec.tasks, "workers": sec.workers, **row.model_dump()} for row in result.rows]
        )
        return frame, {row.method: row.mean_abs_error for row in result.rows}

    def fig3(self, cfg: ExperimentConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        sec = cfg.fig3
        counts = [sec.bad] if sec.bad is not None else None
        rows = fig3_experiment(sec.team, sec.good_rate, sec.bad_rate, sec.selectivity, counts)
        frame = pd.DataFrame([row.model_dump() for row in rows])
        ratios = {
            str(row.bad_count): row.weighted_error / row.simple_error
            for row in rows
            if row.simple_error > 0
        }
        return frame, {"weighted_to_simple_ratio": ratios}

    def price(self, cfg: ExperimentConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        sec = cfg.price.model_copy(update={"seed": cfg.seed})
        rows = price_experiment(sec)
        frame = pd.DataFrame([row.model_dump() for row in rows])
        summary: Dict[str, Any] = {"saturated": sum(row.saturated for row in rows)}
        costs = [row for row in rows if row.cost is not None]
        if costs:
            best = min(costs, key=lambda row: (row.cost, row.workers))
            summary["cheapest"] = {"workers": best.workers, "tasks": best.tasks, "cost": best.cost}
        return frame, summary

    def eviction(self, cfg: ExperimentConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
        sec = cfg.eviction
        base = SimConfig(
            phases=sec.phases,
            tasks=sec.tasks,
            team_size=sec.team_size,
            pool=sec.pool,
            c=sec.confidence,
            strategy=StrategyConfig(kind=sec.strategy),
            seed=cfg.seed,
            runs=sec.runs,
        )
        rules = [sec.rule] if sec.rule else ["normal", "conservative"]
        rows = eviction_sweep(base, sec.thresholds, sec.alphas, rules)
        frame = pd.DataFrame([row.model_dump() for row in rows])

        summary: Dict[str, Any] = {"dominance_violations": sum(row.dominance_violations for row in rows)}
        if len(rules) == 2:
            summary["conservative_not_worse"] = {
                str(alpha): sum(conservative_wins(rows, alpha).values()) / len({r.threshold for r in rows})
                for alpha in sec.alphas
            }
        return frame, summary

    def run(self, cfg: ExperimentConfig) -> ExperimentSummary:
        if cfg.name is None:
            raise UsageError("experiment needs a name")
        runner = getattr(self, cfg.name)
        started = time.perf_counter()
        logger.info(f"Running experiment {cfg.name} with seed {cfg.seed}")

        frame, results = runner(cfg)

        out_dir = Path(cfg.out_dir)
        csv_path = out_dir / f"{cfg.name}.csv"
        write_csv(frame, str(csv_path))
        summary = ExperimentSummary(
            experiment=cfg.name,
            config=cfg.model_dump(mode="json", include={"name", "seed", "out_dir", cfg.name}),
            csv=str(csv_path),
            results=results,
            timing={"elapsed_seconds": time.perf_counter() - started},
        )
        write_json(summary, str(out_dir / f"{cfg.name}.json"))
        logger.info(f"Experiment {cfg.name} finished in {summary.timing['elapsed_seconds']:.1f}s")
        return summary

    def simulate(self, cfg: SimulateConfig) -> Dict[str, Optional[str]]:
        """Write a synthetic response file and its gold labels"""
        if not cfg.rates:
            raise UsageError("simulate needs --rates")
        matrix, truth = gen_matrix(cfg.rates, cfg.selectivity, cfg.tasks, seed=cfg.seed)

        rows: List[Dict[str, str]] = []
        for i, task in enumerate(matrix.tasks):
            for j, worker in enumerate(matrix.workers):
                rows.append({"task_id": task, "worker_id": worker, "answer": "Y" if matrix.values[i, j] == 1 else "N"})
        write_csv(pd.DataFrame(rows, columns=["task_id", "worker_id", "answer"]), cfg.output)

        if cfg.gold_output:
            gold = pd.DataFrame(
                {"task_id": list(matrix.tasks), "answer": ["Y" if x == 1 else "N" for x in truth]}
            )
            write_csv(gold, cfg.gold_output)
        logger.info(f"Simulated {matrix.n} tasks for {matrix.m} workers")
        return {"responses": cfg.output, "gold": cfg.gold_output, "digest": digest_files([cfg.output, cfg.gold_output])}


experiment_service = ExperimentService()
