"""Aggregation Service: per-task decisions from responses and known or estimated rates"""

from pathlib import Path
from typing import Dict, List, Optional

from src.config.run_config import AggregateConfig
from src.core.aggregation import clamp_rate, simple_majority_decision, weighted_decision, worst_case_accuracy
from src.core.errors import ConfigError, ConsistencyError, UsageError
from src.core.extensions import SELECTIVITY_WORKER
from src.core.model import MISSING, Answer, ResponseMatrix, WorkerEstimate
from src.services.ingestion_service import ingestion_service
from src.services.reports import DecisionReport, RunReport
from src.utils.logger import setup_logger

logger = setup_logger(__name__)


def parse_rates(value: str) -> Dict[str, float]:
    """Parse `w1=0.1,w2=0.25` into a worker -> rate map"""
    rates: Dict[str, float] = {}
    for item in filter(None, (part.strip() for part in value.split(","))):
        worker, sep, rate = item.partition("=")
        if not sep:
            raise UsageError(f"Bad --rates entry {item!r}; expected worker=rate")
        try:
            rates[worker.strip()] = float(rate)
        except ValueError:
            raise UsageError(f"Bad rate for worker {worker!r}: {rate!r}")
    return rates


class AggregationService:
    """Service for turning worker answers into task results"""

    def load_report(self, path: str) -> RunReport:
        try:
            return RunReport.model_validate_json(Path(path).read_text(encoding="utf-8"))
        except OSError as e:
            raise ConfigError(f"Cannot read estimates report {path}: {e}")

    def estimates_by_task(self, matrix: ResponseMatrix, report: RunReport) -> Dict[str, Dict[str, WorkerEstimate]]:
        """Estimates to use for every task, taken from the report section covering it"""
        if any(section.name.startswith("bit") for section in report.sections) and len(report.sections) > 1:
            raise ConsistencyError("Reports of categorical runs cannot be aggregated as binary answers")

        per_task: Dict[str, Dict[str, WorkerEstimate]] = {}
        for section in report.sections:
            estimates = {
                w.worker_id: w.to_estimate() for w in section.workers if w.worker_id != SELECTIVITY_WORKER
            }
            unknown = sorted(set(estimates) - set(matrix.workers))
            if unknown:
                raise ConsistencyError(f"Estimates name workers missing from the responses: {unknown}")
            tasks = section.tasks if len(report.sections) > 1 else matrix.tasks
            for task in tasks:
                per_task[task] = estimates
        return per_task

    def decide(self, matrix: ResponseMatrix, cfg: AggregateConfig, report: Optional[RunReport] = None) -> List[DecisionReport]:
        if report is None and cfg.rates is None:
            raise UsageError("aggregate needs --estimates or --rates")
        if report is not None and cfg.rates is not None:
            raise UsageError("--estimates and --rates are mutually exclusive")
        if (cfg.worst_case or cfg.strict_worst_case) and report is None:
            raise UsageError("--worst-case needs interval estimates from --estimates")

        if cfg.rates is not None:
            missing = sorted(set(matrix.workers) - set(cfg.rates))
            if missing:
                raise ConsistencyError(f"No rate given for workers {missing}")
            per_task = None
        else:
            per_task = self.estimates_by_task(matrix, report)

        decisions = []
        for i, task in enumerate(matrix.tasks):
            answered = [
                (w, Answer(int(matrix.values[i, j])))
                for j, w in enumerate(matrix.workers)
                if matrix.values[i, j] != MISSING
            ]
            if per_task is None:
                votes = [(x, cfg.rates[w]) for w, x in answered]
                decision = weighted_decision(votes, cfg.selectivity)
            else:
                estimates = per_task.get(task)
                if estimates is None:
                    logger.warning(f"Task {task} is not covered by the estimates report; using simple majority")
                    decision = simple_majority_decision([(x, None) for _, x in answered], cfg.selectivity)
                    decisions.append(DecisionReport.from_decision(task, decision))
                    continue
                missing = [w for w, _ in answered if w not in estimates]
                if missing:
                    raise ConsistencyError(f"Task {task}: no estimate for workers {missing}")
                pairs = [(x, estimates[w]) for w, x in answered]
                if cfg.worst_case or cfg.strict_worst_case:
                    if any(e.interval is None for _, e in pairs):
                        raise UsageError("--worst-case needs interval estimates; em and majority reports have none")
                    decision = worst_case_accuracy(pairs, cfg.selectivity, cfg.confidence, strict=cfg.strict_worst_case)
                else:
                    decision = weighted_decision([(x, clamp_rate(e.p_hat)) for x, e in pairs], cfg.selectivity)
            decisions.append(DecisionReport.from_decision(task, decision))
        return decisions

    def run(self, cfg: AggregateConfig) -> List[DecisionReport]:
        if cfg.input is None:
            raise UsageError("aggregate needs --input")
        loaded = ingestion_service.load_responses(cfg.input, cfg.format)
        report = self.load_report(cfg.estimates) if cfg.estimates else None
        decisions = self.decide(loaded.matrix, cfg, report)
        logger.info(f"Decided {len(decisions)} tasks")
        return decisions


aggregation_service = AggregationService()
