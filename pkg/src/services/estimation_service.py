"""Estimation Service: error rates and intervals for every worker in a response file"""

import time
from typing import Dict, List, Optional, Tuple

from src.config.run_config import EstimateConfig
from src.core.aggregation import clamp_rate, weighted_decision, worst_case_accuracy
from src.core.baselines import EmConfig, em_estimate, majority_estimate
from src.core.diff3 import estimate_three
from src.core.diffgen import StrategyConfig, estimate_all_workers
from src.core.errors import DegenerateInputError, DomainError, UsageError
from src.core.extensions import (
    SELECTIVITY_WORKER,
    Stratification,
    categorical_reduce,
    stratify,
    with_selectivity_worker,
)
from src.core.model import MISSING, Answer, ResponseMatrix, WorkerEstimate, restrict_to
from src.services.ingestion_service import ingestion_service
from src.services.reports import (
    DecisionReport,
    EmSummary,
    RunReport,
    SectionReport,
    WorkerReport,
    digest_files,
)
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


def parse_stratify(value: str, task_attributes: Dict[str, Dict[str, str]]) -> Stratification:
    """Turn `type:<column>` or `difficulty:<threshold>` into a stratification rule"""
    kind, _, arg = value.partition(":")
    if kind == "difficulty":
        try:
            threshold = float(arg) if arg else 0.9
        except ValueError:
            raise UsageError(f"--stratify difficulty needs a number, got {arg!r}")
        return Stratification(rule="by_agreement", threshold=threshold)
    if kind == "type":
        if not arg:
            raise UsageError("--stratify type needs a column name, e.g. type:category")
        types = {task: attrs[arg] for task, attrs in task_attributes.items() if arg in attrs}
        if not types:
            raise UsageError(f"No task carries a {arg!r} column")
        return Stratification(rule="by_type", task_types=types)
    raise UsageError(f"Unknown --stratify rule {value!r}; use type:<column> or difficulty:<threshold>")


class EstimationService:
    """Service for running one estimator over a response file"""

    def strategy_for(self, cfg: EstimateConfig) -> StrategyConfig:
        kwargs = {
            "kind": cfg.strategy or "exhaustive",
            "seed": cfg.seed,
            "mode": cfg.interval_mode,
            "approx_intervals": cfg.approx_intervals,
        }
        if cfg.pruning_threshold is not None:
            kwargs["pruning_threshold"] = cfg.pruning_threshold
        return StrategyConfig(**kwargs)

    def estimate_matrix(self, matrix: ResponseMatrix, cfg: EstimateConfig, name: str = "all",
                        declared: Optional[Dict[str, float]] = None) -> SectionReport:
        """Run the configured method on a complete matrix"""
        declared = declared or {}
        candidates: Dict[str, int] = {}
        em_summary = None

        if cfg.method == "diff3":
            estimates = list(estimate_three(matrix, cfg.confidence, cfg.interval_mode, cfg.approx_intervals).estimates)
        elif cfg.method == "diffgen":
            searches = estimate_all_workers(matrix, self.strategy_for(cfg), cfg.confidence)
            estimates = [s.estimate for s in searches]
            candidates = {s.estimate.worker: s.candidates_considered for s in searches}
        elif cfg.method == "em":
            result = em_estimate(
                matrix,
                EmConfig(
                    max_iter=cfg.em_max_iter,
                    tol=cfg.em_tol,
                    seed=cfg.seed,
                    restarts=cfg.em_restarts,
                    selectivity=cfg.selectivity,
                ),
            )
            estimates = result.to_worker_estimates()
            em_summary = EmSummary(
                converged=result.converged,
                iterations=result.iterations,
                log_likelihood=result.log_likelihood,
            )
        elif cfg.method == "majority":
            estimates = majority_estimate(matrix)
        else:
            raise DomainError(f"Unknown method: {cfg.method!r}")

        workers = [
            WorkerReport.from_estimate(
                est,
                matrix.workers,
                candidates=candidates.get(est.worker),
                declared_rate=declared.get(est.worker),
            )
            for est in estimates
        ]
        return SectionReport(
            name=name,
            tasks=list(matrix.tasks),
            workers=workers,
            decisions=self.decide(matrix, estimates, cfg.selectivity),
            em=em_summary,
        )

    def decide(self, matrix: ResponseMatrix, estimates: List[WorkerEstimate], s: Optional[float]) -> List[DecisionReport]:
        """Weighted decisions per task from the estimated rates, with worst-case bounds when intervals exist"""
        by_worker = {e.worker: e for e in estimates if e.worker != SELECTIVITY_WORKER}
        with_intervals = all(e.interval is not None for e in by_worker.values())
        decisions = []
        for i, task in enumerate(matrix.tasks):
            votes = [
                (Answer(int(matrix.values[i, j])), by_worker[w])
                for j, w in enumerate(matrix.workers)
                if w in by_worker and matrix.values[i, j] != MISSING
            ]
            if with_intervals:
                decision = worst_case_accuracy(votes, s)
            else:
                decision = weighted_decision([(x, clamp_rate(e.p_hat)) for x, e in votes], s)
            decisions.append(DecisionReport.from_decision(task, decision))
        return decisions

    def prepare(self, matrix: ResponseMatrix, cfg: EstimateConfig) -> Tuple[ResponseMatrix, Dict[str, float]]:
        """Restrict to the chosen workers' common tasks and add the selectivity worker"""
        subset = cfg.workers or list(matrix.workers)
        if cfg.workers or not matrix.is_complete:
            matrix = restrict_to(matrix, subset)
            logger.info(f"Restricted to {matrix.m} workers and {matrix.n} common tasks")

        declared: Dict[str, float] = {}
        if cfg.selectivity is not None and cfg.method in ("diff3", "diffgen"):
            matrix, rate = with_selectivity_worker(matrix, cfg.selectivity)
            declared[SELECTIVITY_WORKER] = rate
        return matrix, declared

    def run(self, cfg: EstimateConfig) -> RunReport:
        """Load, estimate and assemble a report for one estimate invocation"""
        if cfg.input is None:
            raise UsageError("estimate needs --input")
        started = time.perf_counter()

        sections: List[SectionReport] = []
        skipped: List[str] = []
        if cfg.categorical:
            if cfg.stratify:
                raise UsageError("--categorical cannot be combined with --stratify")
            responses = ingestion_service.load_categorical_responses(cfg.input, cfg.format)
            for bit, matrix in enumerate(categorical_reduce(responses)):
                matrix, declared = self.prepare(matrix, cfg)
                sections.append(self.estimate_matrix(matrix, cfg, name=f"bit{bit}", declared=declared))
        else:
            loaded = ingestion_service.load_responses(cfg.input, cfg.format)
            if cfg.stratify:
                rule = parse_stratify(cfg.stratify, loaded.task_attributes)
                # difficulty is judged on the full crowd before any restriction
                result = stratify(loaded.matrix, rule)
                skipped.extend(result.empty)
                for name, stratum in result.strata.items():
                    try:
                        matrix, declared = self.prepare(stratum, cfg)
                    except DegenerateInputError as e:
                        logger.warning(f"Stratum {name!r} skipped: {e}")
                        skipped.append(name)
                        continue
                    sections.append(self.estimate_matrix(matrix, cfg, name=name, declared=declared))
            else:
                matrix, declared = self.prepare(loaded.matrix, cfg)
                sections.append(self.estimate_matrix(matrix, cfg, declared=declared))

        report = RunReport(
            input_digest=digest_files([cfg.input]),
            config=cfg.model_dump(mode="json"),
            sections=sections,
            skipped_sections=skipped,
            timing={"elapsed_seconds": time.perf_counter() - started},
        )
        logger.info(f"Estimated {sum(len(s.workers) for s in sections)} worker rates in {len(sections)} section(s)")
        return report


estimation_service = EstimationService()
