"""EM and simple-majority error-rate estimators used for comparison"""

import logging
from typing import List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.special import expit

from src.core.errors import DomainError
from src.core.model import ResponseMatrix, WorkerEstimate
from src.utils.seeding import derive_seed

logger = logging.getLogger(__name__)

RATE_FLOOR = 1e-9


class EmConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    max_iter: int = Field(default=1000, ge=1)
    tol: float = Field(default=1e-6, gt=0)
    seed: int = 0
    init_low: float = Field(default=0.05, gt=0, lt=0.5)
    init_high: float = Field(default=0.45, gt=0, lt=0.5)
    restarts: int = Field(default=1, ge=1)
    # prior probability of a Y answer; None means 1/2
    selectivity: Optional[float] = Field(default=None, gt=0, lt=1)

    @model_validator(mode="after")
    def _check_range(self):
        if self.init_low > self.init_high:
            raise DomainError("init_low must not exceed init_high")
        return self


class EmResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    workers: Tuple[str, ...]
    estimates: List[float]
    posteriors: List[float]
    iterations: int
    converged: bool
    log_likelihood: float
    log_likelihood_trace: List[float]

    def to_worker_estimates(self) -> List[WorkerEstimate]:
        return [
            WorkerEstimate(worker=w, p_hat=p, method="em")
            for w, p in zip(self.workers, self.estimates)
        ]


def _prior_logit(s: float) -> float:
    return float(np.log(s) - np.log1p(-s))


def log_likelihood(values: np.ndarray, rates: np.ndarray, s: float = 0.5) -> float:
    """Observed-data log-likelihood of the symmetric error model"""
    yes = values == 1
    log_right = np.log1p(-rates)
    log_wrong = np.log(rates)
    # log P(answers | truth = +1) and log P(answers | truth = -1), per task
    given_yes = np.where(yes, log_right, log_wrong).sum(axis=1)
    given_no = np.where(yes, log_wrong, log_right).sum(axis=1)
    return float(np.logaddexp(np.log(s) + given_yes, np.log1p(-s) + given_no).sum())


def _e_step(values: np.ndarray, rates: np.ndarray, prior_logit: float) -> np.ndarray:
    weights = np.log1p(-rates) - np.log(rates)
    posteriors = expit(prior_logit + values @ weights)
    return np.clip(posteriors, RATE_FLOOR, 1 - RATE_FLOOR)


def _m_step(values: np.ndarray, posteriors: np.ndarray) -> np.ndarray:
    # expected disagreement with the latent answer, summed in task order
    disagreement = np.where(values == 1, 1 - posteriors[:, None], posteriors[:, None])
    return np.clip(disagreement.mean(axis=0), RATE_FLOOR, 1 - RATE_FLOOR)


def _run_once(values: np.ndarray, cfg: EmConfig, seed: int):
    s = 0.5 if cfg.selectivity is None else cfg.selectivity
    prior_logit = _prior_logit(s)
    rng = np.random.default_rng(seed)
    rates = rng.uniform(cfg.init_low, cfg.init_high, size=values.shape[1])

    trace = []
    converged = False
    posteriors = _e_step(values, rates, prior_logit)
    iterations = 0
    for iterations in range(1, cfg.max_iter + 1):
        new_rates = _m_step(values, posteriors)
        delta = float(np.max(np.abs(new_rates - rates)))
        rates = new_rates
        posteriors = _e_step(values, rates, prior_logit)
        trace.append(log_likelihood(values, rates, s))
        if delta < cfg.tol:
            converged = True
            break

    return rates, posteriors, iterations, converged, trace


def em_estimate(matrix: ResponseMatrix, cfg: Optional[EmConfig] = None) -> EmResult:
    """Symmetric binary EM over a complete matrix"""
    cfg = cfg or EmConfig()
    matrix.require_complete()
    values = matrix.values.astype(np.float64)

    best = None
    for restart in range(cfg.restarts):
        seed = cfg.seed if restart == 0 else derive_seed(cfg.seed, "em-restart", restart)
        run = _run_once(values, cfg, seed)
        if best is None or run[4][-1] > best[4][-1]:
            best = run
    rates, posteriors, iterations, converged, trace = best

    # resolve label switching
    if float(rates.mean()) > 0.5:
        rates = 1 - rates
        posteriors = 1 - posteriors

    if not converged:
        logger.warning(f"EM did not converge within {cfg.max_iter} iterations")

    return EmResult(
        workers=matrix.workers,
        estimates=[float(p) for p in rates],
        posteriors=[float(x) for x in posteriors],
        iterations=iterations,
        converged=converged,
        log_likelihood=trace[-1],
        log_likelihood_trace=trace,
    )


def majority_labels(values: np.ndarray) -> np.ndarray:
    """Majority answer per task over all columns; ties go to +1"""
    return np.where(values.sum(axis=1) >= 0, 1, -1)


def majority_estimate(matrix: ResponseMatrix) -> List[WorkerEstimate]:
    """Fraction of tasks on which each worker differs from the crowd majority"""
    matrix.require_complete()
    majority = majority_labels(matrix.values)
    disagreement = (matrix.values != majority[:, None]).mean(axis=0)
    return [
        WorkerEstimate(worker=w, p_hat=float(p), method="majority")
        for w, p in zip(matrix.workers, disagreement)
    ]
