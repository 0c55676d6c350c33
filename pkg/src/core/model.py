"""Domain types: answers, response matrices, agreement statistics and estimates"""

import logging
from enum import IntEnum
from typing import Dict, Iterable, List, Literal, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    computed_field,
    field_validator,
    model_validator,
)

from src.core.errors import ConsistencyError, DegenerateInputError, DomainError

logger = logging.getLogger(__name__)

MISSING = 0

Method = Literal["diff3", "diffgen", "em", "majority"]
WorkerRef = Union[str, int]

_YES_TOKENS = {"y", "yes", "1", "+1", "true"}
_NO_TOKENS = {"n", "no", "0", "-1", "false"}


class Answer(IntEnum):
    """Binary task answer, +1 for Y and -1 for N"""

    YES = 1
    NO = -1

    @classmethod
    def parse(cls, token) -> "Answer":
        key = str(token).strip().lower()
        if key in _YES_TOKENS:
            return cls.YES
        if key in _NO_TOKENS:
            return cls.NO
        raise DomainError(f"Unknown answer token: {token!r}")

    @property
    def label(self) -> str:
        return "Y" if self is Answer.YES else "N"


class ResponseMatrix(BaseModel):
    """Answers of m workers on n tasks.

    `values` is an (n, m) int8 array of +1/-1, with 0 marking a cell the worker
    did not answer. Ingestion may produce incomplete matrices; estimators only
    accept complete ones (see `restrict_to`).
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tasks: Tuple[str, ...]
    workers: Tuple[str, ...]
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def _as_readonly_array(cls, value):
        array = np.array(value, dtype=np.int8)
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_shape(self):
        if self.values.ndim != 2 or self.values.shape != (len(self.tasks), len(self.workers)):
            raise DomainError(
                f"values shape {self.values.shape} does not match "
                f"{len(self.tasks)} tasks x {len(self.workers)} workers"
            )
        if len(self.tasks) < 1:
            raise DomainError("A response matrix needs at least one task")
        if len(self.workers) < 2:
            raise DomainError("A response matrix needs at least two workers")
        if len(set(self.tasks)) != len(self.tasks):
            raise DomainError("Task identifiers must be unique")
        if len(set(self.workers)) != len(self.workers):
            raise DomainError("Worker identifiers must be unique")
        if not np.isin(self.values, (-1, 0, 1)).all():
            raise DomainError("Answers must be +1, -1 or missing")
        return self

    def __eq__(self, other) -> bool:
        if not isinstance(other, ResponseMatrix):
            return NotImplemented
        return (
            self.tasks == other.tasks
            and self.workers == other.workers
            and np.array_equal(self.values, other.values)
        )

    def __hash__(self) -> int:
        return hash((self.tasks, self.workers, self.values.tobytes()))

    @classmethod
    def from_cells(
        cls,
        tasks: Sequence[str],
        workers: Sequence[str],
        cells: Mapping[Tuple[str, str], Answer],
    ) -> "ResponseMatrix":
        task_index = {task: i for i, task in enumerate(tasks)}
        worker_index = {worker: j for j, worker in enumerate(workers)}
        values = np.zeros((len(tasks), len(workers)), dtype=np.int8)
        for (task, worker), answer in cells.items():
            values[task_index[task], worker_index[worker]] = int(answer)
        return cls(tasks=tuple(tasks), workers=tuple(workers), values=values)

    @classmethod
    def from_columns(cls, columns: Mapping[str, Sequence[int]], tasks: Optional[Sequence[str]] = None) -> "ResponseMatrix":
        """Build a matrix from worker -> column of +1/-1 answers"""
        workers = tuple(columns)
        values = np.column_stack([np.asarray(columns[w], dtype=np.int8) for w in workers])
        if tasks is None:
            tasks = [f"t{i + 1}" for i in range(values.shape[0])]
        return cls(tasks=tuple(tasks), workers=workers, values=values)

    @computed_field
    @property
    def n(self) -> int:
        return len(self.tasks)

    @computed_field
    @property
    def m(self) -> int:
        return len(self.workers)

    @property
    def is_complete(self) -> bool:
        return bool((self.values != MISSING).all())

    def require_complete(self):
        if not self.is_complete:
            raise DomainError(
                "Estimators need a complete matrix; use restrict_to() to select "
                "workers and their common tasks first"
            )

    def worker_index(self, worker: WorkerRef) -> int:
        if isinstance(worker, (int, np.integer)) and not isinstance(worker, bool):
            if not 0 <= worker < self.m:
                raise DomainError(f"Worker index {worker} out of range")
            return int(worker)
        try:
            return self.workers.index(worker)
        except ValueError:
            raise DomainError(f"Unknown worker: {worker!r}")

    def column(self, worker: WorkerRef) -> np.ndarray:
        return self.values[:, self.worker_index(worker)]

    def answer(self, task: str, worker: WorkerRef) -> Optional[Answer]:
        value = int(self.values[self.tasks.index(task), self.worker_index(worker)])
        return None if value == MISSING else Answer(value)

    def select_tasks(self, mask: np.ndarray) -> "ResponseMatrix":
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            raise DegenerateInputError("No tasks left after selection")
        tasks = tuple(t for t, keep in zip(self.tasks, mask) if keep)
        return ResponseMatrix(tasks=tasks, workers=self.workers, values=self.values[mask])

    def with_column(self, worker: str, column: Sequence[int]) -> "ResponseMatrix":
        if worker in self.workers:
            raise DomainError(f"Worker {worker!r} already present")
        values = np.column_stack([self.values, np.asarray(column, dtype=np.int8)])
        return ResponseMatrix(tasks=self.tasks, workers=self.workers + (worker,), values=values)


class GoldLabels(BaseModel):
    """Known correct answers, used for evaluation only"""

    model_config = ConfigDict(frozen=True)

    labels: Dict[str, Answer] = Field(default_factory=dict)

    def check_against(self, matrix: ResponseMatrix):
        unknown = [task for task in self.labels if task not in set(matrix.tasks)]
        if unknown:
            raise ConsistencyError(f"Gold labels reference unknown tasks: {unknown[:5]}")

    def error_fraction(self, matrix: ResponseMatrix, worker: WorkerRef) -> Optional[float]:
        """Fraction of gold tasks the worker answered wrongly"""
        column = matrix.column(worker)
        wrong = 0
        seen = 0
        for i, task in enumerate(matrix.tasks):
            truth = self.labels.get(task)
            if truth is None or column[i] == MISSING:
                continue
            seen += 1
            wrong += int(column[i] != int(truth))
        return wrong / seen if seen else None


class PairwiseAgreement(BaseModel):
    """How often two workers gave the same answer"""

    model_config = ConfigDict(frozen=True)

    i: int
    j: int
    agree_count: int = Field(ge=0)
    n: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_count(self):
        if self.agree_count > self.n:
            raise DomainError("agree_count cannot exceed n")
        return self

    @computed_field
    @property
    def q_hat(self) -> float:
        return self.agree_count / self.n


class Interval(BaseModel):
    """Estimate with explicit endpoints at confidence level `level`.

    For binomial intervals lo/hi sit symmetrically around the estimate; for
    corner-evaluated error-rate intervals the estimate need not be centred, so
    both endpoints are stored. `lo` may be negative.
    """

    model_config = ConfigDict(frozen=True)

    estimate: float
    half_size: float = Field(ge=0)
    level: float = Field(gt=0, lt=1)
    lo: float
    hi: float

    @model_validator(mode="after")
    def _check_order(self):
        if self.lo > self.hi:
            raise DomainError(f"Interval endpoints out of order: {self.lo} > {self.hi}")
        return self

    @classmethod
    def symmetric(cls, estimate: float, half_size: float, level: float) -> "Interval":
        return cls(
            estimate=estimate,
            half_size=half_size,
            level=level,
            lo=estimate - half_size,
            hi=estimate + half_size,
        )

    @classmethod
    def from_endpoints(cls, lo: float, hi: float, level: float, estimate: Optional[float] = None) -> "Interval":
        if estimate is None:
            estimate = (lo + hi) / 2
        return cls(estimate=estimate, half_size=(hi - lo) / 2, level=level, lo=lo, hi=hi)

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


class Partition(BaseModel):
    """Two disjoint peer sets S and T forming super-workers for a target"""

    model_config = ConfigDict(frozen=True)

    target: int
    S: Tuple[int, ...]
    T: Tuple[int, ...]

    @field_validator("S", "T", mode="before")
    @classmethod
    def _sorted_members(cls, members: Iterable[int]):
        members = [int(x) for x in members]
        if len(set(members)) != len(members):
            raise DomainError("Super-worker members must be distinct")
        return tuple(sorted(members))

    @model_validator(mode="after")
    def _check_disjoint(self):
        if not self.S or not self.T:
            raise DomainError("Both super-workers need at least one member")
        if set(self.S) & set(self.T):
            raise DomainError(f"S and T overlap: {sorted(set(self.S) & set(self.T))}")
        if self.target in self.S or self.target in self.T:
            raise DomainError("The target cannot be its own peer")
        return self

    def check_peers(self, m: int):
        if not 0 <= self.target < m or any(not 0 <= k < m for k in self.S + self.T):
            raise DomainError(f"Partition refers to workers outside 0..{m - 1}")

    def named(self, workers: Sequence[str]) -> Dict[str, List[str]]:
        return {"S": [workers[k] for k in self.S], "T": [workers[k] for k in self.T]}


class WorkerEstimate(BaseModel):
    """Error-rate estimate for one worker"""

    model_config = ConfigDict(frozen=True)

    worker: str
    p_hat: float
    interval: Optional[Interval] = None
    method: Method
    degenerate: bool = False
    partition_used: Optional[Partition] = None

    @model_validator(mode="after")
    def _check_interval(self):
        if self.method in ("em", "majority") and self.interval is not None:
            raise DomainError(f"{self.method} estimates carry no interval")
        return self

    @computed_field
    @property
    def p_hat_clamped(self) -> float:
        return min(max(self.p_hat, 0.0), 0.5)

    @property
    def half_size(self) -> Optional[float]:
        return self.interval.half_size if self.interval is not None else None


def restrict_to(matrix: ResponseMatrix, subset: Sequence[WorkerRef]) -> ResponseMatrix:
    """Submatrix over `subset`, keeping tasks every member answered.

    Columns keep the matrix's worker order.
    """
    indices = [matrix.worker_index(w) for w in subset]
    if len(set(indices)) != len(indices):
        raise DomainError("Worker subset contains duplicates")
    if len(indices) < 2:
        raise DomainError("Restriction needs at least two workers")

    indices.sort()
    block = matrix.values[:, indices]
    keep = (block != MISSING).all(axis=1)
    if not keep.any():
        names = [matrix.workers[k] for k in indices]
        raise DegenerateInputError(f"Workers {names} share no common task")

    tasks = tuple(t for t, k in zip(matrix.tasks, keep) if k)
    workers = tuple(matrix.workers[k] for k in indices)
    return ResponseMatrix(tasks=tasks, workers=workers, values=block[keep])


def agreement_rate(matrix: ResponseMatrix, i: WorkerRef, j: WorkerRef) -> PairwiseAgreement:
    """Agreement count and rate of two workers over the tasks both answered"""
    a = matrix.worker_index(i)
    b = matrix.worker_index(j)
    if a == b:
        raise DomainError("agreement_rate needs two distinct workers")

    x = matrix.values[:, a]
    y = matrix.values[:, b]
    both = (x != MISSING) & (y != MISSING)
    n = int(both.sum())
    if n == 0:
        raise DegenerateInputError(f"Workers {matrix.workers[a]!r} and {matrix.workers[b]!r} share no task")
    agree = int((x[both] == y[both]).sum())
    return PairwiseAgreement(i=a, j=b, agree_count=agree, n=n)
