"""Task results from worker answers: posterior accuracy, weighted ML vote, worst-case bounds"""

import itertools
import math
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.errors import DomainError
from src.core.model import Answer, WorkerEstimate

RATE_FLOOR = 1e-9

Vote = Tuple[Answer, float]
DecisionRule = Literal["weighted", "simple"]


class Selectivity(BaseModel):
    """Prior probability that a task's true answer is Y"""

    model_config = ConfigDict(frozen=True)

    s: float = Field(default=0.5, gt=0, lt=1)

    @property
    def log_odds(self) -> float:
        return math.log(self.s / (1 - self.s))


class TaskDecision(BaseModel):
    model_config = ConfigDict(frozen=True)

    answer: Answer
    alpha: float
    # None for an unweighted vote without rates
    beta: Optional[float] = None
    accuracy: Optional[float] = Field(default=None, ge=0, le=1)
    worst_case: Optional[float] = Field(default=None, ge=0, le=1)
    combined_error_bound: Optional[float] = None
    confidence: Optional[float] = None


def clamp_rate(p: float) -> float:
    """Clamp an estimated rate (possibly raw negative) into a usable probability"""
    return min(max(p, RATE_FLOOR), 1 - RATE_FLOOR)


def _as_selectivity(s) -> Selectivity:
    if isinstance(s, Selectivity):
        return s
    return Selectivity(s=0.5 if s is None else s)


def _check_rates(answers: Sequence[Vote]):
    for _, p in answers:
        if not 0 < p < 1:
            raise DomainError(f"Error rates must lie strictly inside (0, 1), got {p}")


def _log_joint(answers: Sequence[Vote], s: Selectivity) -> Tuple[float, float]:
    """log P(X = +1, answers) and log P(X = -1, answers)"""
    log_yes = math.log(s.s)
    log_no = math.log(1 - s.s)
    for x, p in answers:
        if int(x) == 1:
            log_yes += math.log1p(-p)
            log_no += math.log(p)
        else:
            log_yes += math.log(p)
            log_no += math.log1p(-p)
    return log_yes, log_no


def task_posterior(answers: Sequence[Vote], s, candidate: Answer) -> float:
    """Probability that `candidate` is the correct answer given the votes"""
    _check_rates(answers)
    log_yes, log_no = _log_joint(answers, _as_selectivity(s))
    total = np.logaddexp(log_yes, log_no)
    chosen = log_yes if int(candidate) == 1 else log_no
    return float(math.exp(chosen - total))


def weighted_decision(answers: Sequence[Vote], s=None) -> TaskDecision:
    """Maximum-likelihood answer: sign of log-odds prior plus weighted votes"""
    _check_rates(answers)
    sel = _as_selectivity(s)
    alpha = sel.log_odds
    beta = sum(int(x) * math.log((1 - p) / p) for x, p in answers)
    # an exact zero goes to N
    answer = Answer.YES if alpha + beta > 0 else Answer.NO
    return TaskDecision(
        answer=answer,
        alpha=alpha,
        beta=beta,
        accuracy=task_posterior(answers, sel, answer),
    )


def simple_majority_decision(
    answers: Sequence[Tuple[Answer, Optional[float]]],
    s=None,
) -> TaskDecision:
    """Unweighted vote; ties go to N. Weights and accuracy are filled when rates are known"""
    total = sum(int(x) for x, _ in answers)
    answer = Answer.YES if total > 0 else Answer.NO
    sel = _as_selectivity(s)

    beta = None
    accuracy = None
    if answers and all(p is not None for _, p in answers):
        accuracy = task_posterior(answers, sel, answer)
        beta = sum(int(x) * math.log((1 - p) / p) for x, p in answers)
    return TaskDecision(answer=answer, alpha=sel.log_odds, beta=beta, accuracy=accuracy)


def combined_error_bound(worst_case: float, c: float) -> float:
    """Overall error bound: miss the confidence, or err within it"""
    return (1 - c) + c * (1 - worst_case)


def worst_case_accuracy(
    answers: Sequence[Tuple[Answer, WorkerEstimate]],
    s=None,
    c: Optional[float] = None,
    strict: bool = False,
) -> TaskDecision:
    """Accuracy bound with every rate moved to its unfavourable interval end.

    The answer is fixed from the point estimates. By default every rate is
    inflated to p + eps; `strict` inflates only workers agreeing with the
    answer and deflates the others to p - eps.
    """
    sel = _as_selectivity(s)
    for _, est in answers:
        if est.interval is None:
            raise DomainError(f"Worker {est.worker} has no interval for a worst-case bound")
    if c is None:
        levels = {est.interval.level for _, est in answers}
        if len(levels) != 1:
            raise DomainError(f"Estimates carry mixed confidence levels {sorted(levels)}")
        c = levels.pop()

    point = [(x, clamp_rate(est.p_hat)) for x, est in answers]
    decision = weighted_decision(point, sel)

    shifted = []
    for x, est in answers:
        eps = est.interval.half_size
        if strict and int(x) != int(decision.answer):
            shifted.append((x, clamp_rate(est.p_hat - eps)))
        else:
            shifted.append((x, clamp_rate(est.p_hat + eps)))
    worst = task_posterior(shifted, sel, decision.answer)

    return decision.model_copy(
        update={
            "worst_case": worst,
            "combined_error_bound": combined_error_bound(worst, c),
            "confidence": c,
        }
    )


def exact_error_probability(rates: Sequence[float], rule: DecisionRule = "weighted", s=None) -> float:
    """Exact probability that a decision rule returns the wrong answer.

    Enumerates both truths and every correctness pattern of the workers,
    which is feasible for small teams.
    """
    sel = _as_selectivity(s)
    for p in rates:
        if not 0 < p < 1:
            raise DomainError(f"Error rates must lie strictly inside (0, 1), got {p}")

    decide: Callable[[List[Vote]], TaskDecision]
    if rule == "weighted":
        decide = lambda votes: weighted_decision(votes, sel)  # noqa: E731
    elif rule == "simple":
        decide = lambda votes: simple_majority_decision(votes, sel)  # noqa: E731
    else:
        raise DomainError(f"Unknown decision rule: {rule!r}")

    error = 0.0
    for truth, prior in ((Answer.YES, sel.s), (Answer.NO, 1 - sel.s)):
        for pattern in itertools.product((False, True), repeat=len(rates)):
            prob = prior
            votes = []
            for p, wrong in zip(rates, pattern):
                prob *= p if wrong else 1 - p
                votes.append((Answer(-int(truth)) if wrong else truth, p))
            if decide(votes).answer != truth:
                error += prob
    return error


def batch_worst_case(
    values: np.ndarray,
    p_hats: Sequence[float],
    half_sizes: Sequence[float],
    s=None,
    strict: bool = False,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Weighted answers, accuracies and worst-case accuracies for every task.

    `values` is an (n, m) array of +1/-1 answers. Returns three length-n
    arrays; matches `worst_case_accuracy` task by task.
    """
    sel = _as_selectivity(s)
    raw = np.asarray(p_hats, dtype=np.float64)
    rates = np.clip(raw, RATE_FLOOR, 1 - RATE_FLOOR)
    eps = np.asarray(half_sizes, dtype=np.float64)

    weights = np.log1p(-rates) - np.log(rates)
    score = sel.log_odds + values @ weights
    answers = np.where(score > 0, 1, -1)

    def posterior(r: np.ndarray) -> np.ndarray:
        r = np.broadcast_to(r, values.shape)
        right = np.where(values == 1, np.log1p(-r), np.log(r)).sum(axis=1)
        wrong = np.where(values == 1, np.log(r), np.log1p(-r)).sum(axis=1)
        log_yes = math.log(sel.s) + right
        log_no = math.log(1 - sel.s) + wrong
        chosen = np.where(answers == 1, log_yes, log_no)
        return np.exp(chosen - np.logaddexp(log_yes, log_no))

    # shifts start from the raw estimate, as the interval endpoints do
    up = np.clip(raw + eps, RATE_FLOOR, 1 - RATE_FLOOR)
    if strict:
        down = np.clip(raw - eps, RATE_FLOOR, 1 - RATE_FLOOR)
        shifted = np.where(values == answers[:, None], up, down)
    else:
        shifted = up
    return answers, posterior(rates), posterior(shifted)
