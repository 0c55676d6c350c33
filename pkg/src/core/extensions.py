"""Model extensions: known selectivity, categorical answers, task strata"""

import logging
import math
from typing import Dict, List, Literal, Mapping, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.core.aggregation import Selectivity
from src.core.errors import DomainError
from src.core.model import MISSING, ResponseMatrix

logger = logging.getLogger(__name__)

SELECTIVITY_WORKER = "__selectivity__"


def with_selectivity_worker(matrix: ResponseMatrix, s) -> Tuple[ResponseMatrix, float]:
    """Append a constant pseudo-worker whose error rate is min(s, 1 - s)"""
    s = s.s if isinstance(s, Selectivity) else float(s)
    if not 0 < s < 1:
        raise DomainError(f"Selectivity must lie in (0, 1), got {s}")
    if s == 0.5:
        raise DomainError(
            "Selectivity 0.5 gives a pseudo-worker with error rate 1/2, "
            "which carries no information about the other workers"
        )
    answer = 1 if s > 0.5 else -1
    column = np.full(matrix.n, answer, dtype=np.int8)
    return matrix.with_column(SELECTIVITY_WORKER, column), min(s, 1 - s)


class CategoricalResponses(BaseModel):
    """Answers drawn from an arbitrary label set; None marks a missing cell"""

    model_config = ConfigDict(frozen=True)

    tasks: Tuple[str, ...]
    workers: Tuple[str, ...]
    labels: Tuple[Tuple[Optional[str], ...], ...]

    @model_validator(mode="after")
    def _check_shape(self):
        if len(self.labels) != len(self.tasks) or any(len(row) != len(self.workers) for row in self.labels):
            raise DomainError("Categorical labels do not match tasks x workers")
        return self

    def categories(self) -> List[str]:
        """Labels in order of first appearance"""
        seen: Dict[str, None] = {}
        for row in self.labels:
            for label in row:
                if label is not None and label not in seen:
                    seen[label] = None
        return list(seen)


class CategoricalScheme(BaseModel):
    """Binary code for k categories, padded to the next power of two"""

    model_config = ConfigDict(frozen=True)

    categories: Tuple[str, ...]

    @model_validator(mode="after")
    def _check_categories(self):
        if len(self.categories) < 2:
            raise DomainError("A categorical scheme needs at least two categories")
        if len(set(self.categories)) != len(self.categories):
            raise DomainError("Category labels must be unique")
        return self

    @classmethod
    def from_responses(cls, responses: CategoricalResponses) -> "CategoricalScheme":
        return cls(categories=tuple(responses.categories()))

    @property
    def k(self) -> int:
        return len(self.categories)

    @property
    def bit_count(self) -> int:
        return max(1, math.ceil(math.log2(self.k)))

    @property
    def padded_k(self) -> int:
        return 2 ** self.bit_count

    def code(self, category: str) -> int:
        try:
            return self.categories.index(category)
        except ValueError:
            raise DomainError(f"Unknown category: {category!r}")

    def bits(self, category: str) -> List[int]:
        code = self.code(category)
        return [(code >> b) & 1 for b in range(self.bit_count)]

    def decode(self, bits: Sequence[int]) -> str:
        code = sum(int(bit) << b for b, bit in enumerate(bits))
        if code >= self.k:
            raise DomainError(f"Code {code} is a padding category")
        return self.categories[code]


def categorical_reduce(
    responses: CategoricalResponses,
    scheme: Optional[CategoricalScheme] = None,
) -> List[ResponseMatrix]:
    """One binary matrix per code bit: "is bit b of the category 1?"."""
    scheme = scheme or CategoricalScheme.from_responses(responses)
    n, m = len(responses.tasks), len(responses.workers)
    stacks = np.zeros((scheme.bit_count, n, m), dtype=np.int8)
    for i, row in enumerate(responses.labels):
        for j, label in enumerate(row):
            if label is None:
                continue
            for b, bit in enumerate(scheme.bits(label)):
                stacks[b, i, j] = 1 if bit else -1
    return [
        ResponseMatrix(tasks=responses.tasks, workers=responses.workers, values=stacks[b])
        for b in range(scheme.bit_count)
    ]


def decode_bits(matrices: Sequence[ResponseMatrix], scheme: CategoricalScheme) -> CategoricalResponses:
    """Reassemble per-bit answers into category labels"""
    if len(matrices) != scheme.bit_count:
        raise DomainError(f"Expected {scheme.bit_count} bit matrices, got {len(matrices)}")
    first = matrices[0]
    stack = np.stack([mat.values for mat in matrices])
    labels = []
    for i in range(first.n):
        row = []
        for j in range(first.m):
            cell = stack[:, i, j]
            if (cell == MISSING).any():
                row.append(None)
            else:
                row.append(scheme.decode([1 if v == 1 else 0 for v in cell]))
        labels.append(tuple(row))
    return CategoricalResponses(tasks=first.tasks, workers=first.workers, labels=tuple(labels))


class Stratification(BaseModel):
    """Rule assigning every task to one stratum"""

    model_config = ConfigDict(frozen=True)

    rule: Literal["by_type", "by_agreement"]
    threshold: float = Field(default=0.9)
    # task -> type label, for by_type
    task_types: Dict[str, str] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_threshold(self):
        if self.rule == "by_agreement" and not 0.5 < self.threshold <= 1:
            raise DomainError(f"Agreement threshold must lie in (0.5, 1], got {self.threshold}")
        return self


class StratificationResult(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    labels: Dict[str, str]
    strata: Dict[str, ResponseMatrix]
    empty: List[str] = Field(default_factory=list)


def majority_fraction(matrix: ResponseMatrix) -> np.ndarray:
    """Share of answering workers that side with each task's majority"""
    yes = (matrix.values == 1).sum(axis=1)
    no = (matrix.values == -1).sum(axis=1)
    answered = np.maximum(yes + no, 1)
    return np.maximum(yes, no) / answered


def stratify(matrix: ResponseMatrix, rule: Stratification) -> StratificationResult:
    """Split tasks into strata; estimation then runs on each stratum separately"""
    if rule.rule == "by_agreement":
        fraction = majority_fraction(matrix)
        labels = {
            task: ("easy" if f >= rule.threshold else "hard")
            for task, f in zip(matrix.tasks, fraction)
        }
        order = ["easy", "hard"]
    else:
        missing = [t for t in matrix.tasks if t not in rule.task_types]
        if missing:
            raise DomainError(f"Tasks without a type label: {missing[:5]}")
        labels = {task: rule.task_types[task] for task in matrix.tasks}
        order = list(dict.fromkeys(labels[t] for t in matrix.tasks))

    strata: Dict[str, ResponseMatrix] = {}
    empty: List[str] = []
    for name in order:
        mask = np.array([labels[t] == name for t in matrix.tasks])
        if not mask.any():
            empty.append(name)
            logger.info(f"Stratum {name!r} has no tasks and is skipped")
            continue
        strata[name] = matrix.select_tasks(mask)

    return StratificationResult(labels=labels, strata=strata, empty=empty)
