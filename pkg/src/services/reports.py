"""Report models and writers shared by the services"""

import hashlib
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, Field

from src import __version__
from src.core.aggregation import TaskDecision
from src.core.model import Interval, WorkerEstimate

logger = logging.getLogger(__name__)

WORKER_COLUMNS = [
    "worker_id",
    "method",
    "p_hat",
    "p_hat_clamped",
    "lo",
    "hi",
    "half_size",
    "level",
    "degenerate",
    "partition_s",
    "partition_t",
]
DECISION_COLUMNS = ["task_id", "answer", "accuracy", "worst_case_accuracy", "combined_error_bound"]


class WorkerReport(BaseModel):
    worker_id: str
    method: str
    p_hat: float
    p_hat_clamped: float
    lo: Optional[float] = None
    hi: Optional[float] = None
    half_size: Optional[float] = None
    level: Optional[float] = None
    degenerate: bool = False
    partition_s: List[str] = Field(default_factory=list)
    partition_t: List[str] = Field(default_factory=list)
    candidates_considered: Optional[int] = None
    declared_rate: Optional[float] = None

    @classmethod
    def from_estimate(
        cls,
        est: WorkerEstimate,
        workers: Sequence[str],
        candidates: Optional[int] = None,
        declared_rate: Optional[float] = None,
    ) -> "WorkerReport":
        report = cls(
            worker_id=est.worker,
            method=est.method,
            p_hat=est.p_hat,
            p_hat_clamped=est.p_hat_clamped,
            degenerate=est.degenerate,
            candidates_considered=candidates,
            declared_rate=declared_rate,
        )
        updates: Dict[str, Any] = {}
        if est.interval is not None:
            updates.update(
                lo=est.interval.lo,
                hi=est.interval.hi,
                half_size=est.interval.half_size,
                level=est.interval.level,
            )
        if est.partition_used is not None:
            named = est.partition_used.named(workers)
            updates.update(partition_s=named["S"], partition_t=named["T"])
        return report.model_copy(update=updates)

    def to_estimate(self) -> WorkerEstimate:
        """Rebuild the estimate, interval included, from a stored report"""
        interval = None
        if self.half_size is not None:
            interval = Interval(
                estimate=self.p_hat,
                half_size=self.half_size,
                level=self.level,
                lo=self.lo,
                hi=self.hi,
            )
        return WorkerEstimate(
            worker=self.worker_id,
            p_hat=self.p_hat,
            interval=interval,
            method=self.method,
            degenerate=self.degenerate,
        )


class DecisionReport(BaseModel):
    task_id: str
    answer: str
    accuracy: Optional[float] = None
    worst_case_accuracy: Optional[float] = None
    combined_error_bound: Optional[float] = None

    @classmethod
    def from_decision(cls, task: str, decision: TaskDecision) -> "DecisionReport":
        return cls(
            task_id=task,
            answer=decision.answer.label,
            accuracy=decision.accuracy,
            worst_case_accuracy=decision.worst_case,
            combined_error_bound=decision.combined_error_bound,
        )


class EmSummary(BaseModel):
    converged: bool
    iterations: int
    log_likelihood: float


class SectionReport(BaseModel):
    """Estimates for one stratum, one categorical bit, or the whole input"""

    name: str
    tasks: List[str]
    workers: List[WorkerReport]
    decisions: List[DecisionReport] = Field(default_factory=list)
    em: Optional[EmSummary] = None


class RunReport(BaseModel):
    tool: str = "crowdconf"
    version: str = __version__
    input_digest: str
    config: Dict[str, Any]
    sections: List[SectionReport]
    skipped_sections: List[str] = Field(default_factory=list)
    timing: Dict[str, float] = Field(default_factory=dict)

    def without_timing(self) -> Dict[str, Any]:
        data = self.model_dump(mode="json")
        data.pop("timing", None)
        return data


def digest_files(paths: Iterable[Optional[str]]) -> str:
    """SHA-256 over the contents of every given input file, in order"""
    sha = hashlib.sha256()
    for path in paths:
        if path is None:
            continue
        sha.update(Path(path).read_bytes())
        sha.update(b"\0")
    return sha.hexdigest()


def write_json(data: BaseModel, path: Optional[str] = None):
    """Write a model as indented JSON to a file, or to stdout when no path is given"""
    text = data.model_dump_json(indent=2)
    if path is None:
        sys.stdout.write(text + "\n")
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {target}")


def write_csv(frame: pd.DataFrame, path: Optional[str] = None):
    if path is None:
        frame.to_csv(sys.stdout, index=False, lineterminator="\n")
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(target, index=False, lineterminator="\n")
    logger.info(f"Wrote {target}")


def workers_frame(sections: Sequence[SectionReport]) -> pd.DataFrame:
    rows = []
    for section in sections:
        for worker in section.workers:
            row = worker.model_dump(include=set(WORKER_COLUMNS))
            row["partition_s"] = ";".join(worker.partition_s)
            row["partition_t"] = ";".join(worker.partition_t)
            if len(sections) > 1:
                row["section"] = section.name
            rows.append(row)
    columns = WORKER_COLUMNS + (["section"] if len(sections) > 1 else [])
    return pd.DataFrame(rows, columns=columns)


def decisions_frame(decisions: Sequence[DecisionReport]) -> pd.DataFrame:
    return pd.DataFrame([d.model_dump() for d in decisions], columns=DECISION_COLUMNS)
