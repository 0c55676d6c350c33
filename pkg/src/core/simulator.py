"""Synthetic crowds and the multi-phase worker eviction simulation"""

import logging
import math
from collections import Counter
from functools import partial
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from src.core.aggregation import Selectivity
from src.core.diffgen import StrategyConfig, estimate_all_workers
from src.core.errors import DomainError
from src.core.model import ResponseMatrix
from src.utils.parallel import parallel_map
from src.utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)

EvictionRule = Literal["normal", "conservative"]


def gen_matrix(
    true_rates: Sequence[float],
    s=0.5,
    n: int = 100,
    seed: int = 0,
) -> Tuple[ResponseMatrix, np.ndarray]:
    """Draw a complete response matrix and its latent truth column.

    Each task's truth is Y with probability s; every worker flips it
    independently with its own error rate.
    """
    s = s.s if isinstance(s, Selectivity) else float(s)
    if n < 1:
        raise DomainError(f"Need at least one task, got n={n}")
    rates = np.asarray(true_rates, dtype=np.float64)
    if rates.ndim != 1 or len(rates) < 2:
        raise DomainError("Need error rates for at least two workers")
    if ((rates < 0) | (rates > 1)).any():
        raise DomainError(f"Error rates must lie in [0, 1], got {rates.tolist()}")

    rng = np.random.default_rng(seed)
    truth = np.where(rng.random(n) < s, 1, -1).astype(np.int8)
    flips = rng.random((n, len(rates))) < rates
    values = np.where(flips, -truth[:, None], truth[:, None]).astype(np.int8)

    matrix = ResponseMatrix(
        tasks=tuple(f"t{i + 1}" for i in range(n)),
        workers=tuple(f"w{j + 1}" for j in range(len(rates))),
        values=values,
    )
    return matrix, truth


class WorkerPool(BaseModel):
    """Distribution of true error rates new workers are drawn from"""

    model_config = ConfigDict(frozen=True)

    distribution: List[Tuple[float, float]] = Field(
        default_factory=lambda: [(0.3, 0.3), (0.2, 0.4), (0.1, 0.3)]
    )

    @field_validator("distribution")
    @classmethod
    def _check_distribution(cls, value):
        if not value:
            raise DomainError("A worker pool needs at least one rate")
        total = sum(prob for _, prob in value)
        if abs(total - 1) > 1e-12:
            raise DomainError(f"Pool probabilities must sum to 1, got {total}")
        for rate, prob in value:
            if not 0 < rate < 0.5:
                raise DomainError(f"Pool rates must lie in (0, 0.5), got {rate}")
            if prob < 0:
                raise DomainError(f"Pool probabilities must be non-negative, got {prob}")
        return value

    @property
    def rates(self) -> List[float]:
        return [rate for rate, _ in self.distribution]

    def draw(self, rng: np.random.Generator, size: Optional[int] = None):
        probs = [prob for _, prob in self.distribution]
        return rng.choice(self.rates, size=size, p=probs)


class SimConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    phases: int = Field(default=30, ge=1)
    tasks: int = Field(default=25, ge=1)
    # the general scheme needs a target and two peers
    team_size: int = Field(default=7, ge=3)
    pool: WorkerPool = Field(default_factory=WorkerPool)
    threshold: float = 0.0
    c: float = Field(default=0.35, gt=0, lt=1)
    alpha: float = Field(default=1.0, ge=0)
    eviction: EvictionRule = "normal"
    strategy: StrategyConfig = Field(default_factory=lambda: StrategyConfig(kind="greedy"))
    seed: int = 0
    runs: int = Field(default=200, ge=1)
    s: float = Field(default=0.5, gt=0, lt=1)
    # team cost per worker at phase end, keyed by true rate
    team_costs: Dict[float, float] = Field(default_factory=lambda: {0.1: 0.0, 0.2: 1.0, 0.3: 3.0})
    good_rate: float = 0.1
    eviction_cost: float = Field(default=5.0, ge=0)

    @model_validator(mode="after")
    def _check_costs(self):
        missing = [r for r in self.pool.rates if r not in self.team_costs]
        if missing:
            raise DomainError(f"No team cost for pool rates {missing}")
        if any(cost < 0 for cost in self.team_costs.values()):
            raise DomainError("Team costs must be non-negative")
        return self


class CostReport(BaseModel):
    """Costs per phase averaged over runs, plus run-level aggregates"""

    model_config = ConfigDict(frozen=True)

    rule: EvictionRule
    threshold: float
    alpha: float
    runs: int
    phase_c1: List[float]
    phase_c2: List[float]
    phase_cost: List[float]
    mean_c1: float
    mean_c2: float
    mean_cost: float
    evictions_by_rate: Dict[str, int]
    dominance_violations: int = Field(ge=0)

    @model_validator(mode="after")
    def _check_identity(self):
        for c1, c2, total in zip(self.phase_c1, self.phase_c2, self.phase_cost):
            if min(c1, c2) < 0 or not math.isclose(total, c1 + self.alpha * c2, rel_tol=1e-12, abs_tol=1e-12):
                raise DomainError("Phase cost must equal c1 + alpha * c2 with non-negative parts")
        if not math.isclose(self.mean_cost, self.mean_c1 + self.alpha * self.mean_c2, rel_tol=1e-12, abs_tol=1e-12):
            raise DomainError("Mean cost must equal mean c1 + alpha * mean c2")
        return self

    @property
    def total_evictions(self) -> int:
        return sum(self.evictions_by_rate.values())

    def with_alpha(self, alpha: float) -> "CostReport":
        """Same trajectory priced with another eviction multiplier"""
        return self.model_copy(
            update={
                "alpha": alpha,
                "phase_cost": [c1 + alpha * c2 for c1, c2 in zip(self.phase_c1, self.phase_c2)],
                "mean_cost": self.mean_c1 + alpha * self.mean_c2,
            }
        )


class _RunOutcome(BaseModel):
    c1: List[float]
    c2: List[float]
    evicted_rates: List[float]
    violations: int


class _Member:
    """One team slot: true rate and the estimates gathered while on the team"""

    __slots__ = ("rate", "p_hats", "eps_sq")

    def __init__(self, rate: float):
        self.rate = float(rate)
        self.p_hats: List[float] = []
        self.eps_sq = 0.0

    def record(self, p_hat: float, eps: float):
        self.p_hats.append(p_hat)
        self.eps_sq += eps * eps

    @property
    def mean_rate(self) -> float:
        return sum(self.p_hats) / len(self.p_hats)

    @property
    def mean_half_size(self) -> float:
        return math.sqrt(self.eps_sq) / len(self.p_hats)


def eviction_sets(team: Sequence[_Member], threshold: float) -> Tuple[List[int], List[int]]:
    """Slots the normal and the conservative rule would evict"""
    normal = [k for k, w in enumerate(team) if w.mean_rate > threshold]
    conservative = [k for k, w in enumerate(team) if w.mean_rate - w.mean_half_size > threshold]
    return normal, conservative


def _simulate_run(cfg: SimConfig, run: int) -> _RunOutcome:
    init_rng = rng_for(cfg.seed, "team", run)
    team = [_Member(rate) for rate in cfg.pool.draw(init_rng, cfg.team_size)]

    c1s: List[float] = []
    c2s: List[float] = []
    evicted_rates: List[float] = []
    violations = 0

    for phase in range(cfg.phases):
        matrix, _ = gen_matrix(
            [w.rate for w in team],
            cfg.s,
            cfg.tasks,
            seed=derive_seed(cfg.seed, "phase", run, phase),
        )
        strat = cfg.strategy.model_copy(
            update={"seed": derive_seed(cfg.strategy.seed, cfg.seed, "partition", run, phase)}
        )
        for member, search in zip(team, estimate_all_workers(matrix, strat, cfg.c)):
            member.record(search.estimate.p_hat, search.estimate.interval.half_size)

        c1s.append(float(sum(cfg.team_costs[w.rate] for w in team)))

        normal, conservative = eviction_sets(team, cfg.threshold)
        if not set(conservative) <= set(normal):
            violations += 1
        evicted = normal if cfg.eviction == "normal" else conservative

        good_evicted = sum(1 for k in evicted if team[k].rate == cfg.good_rate)
        c2s.append(cfg.eviction_cost * good_evicted)

        for k in evicted:
            evicted_rates.append(team[k].rate)
            replacement = cfg.pool.draw(rng_for(cfg.seed, "replace", run, phase, k))
            team[k] = _Member(replacement)

    logger.debug(f"Run {run}: {len(evicted_rates)} evictions, mean c1 {np.mean(c1s):.3f}")
    return _RunOutcome(c1=c1s, c2=c2s, evicted_rates=evicted_rates, violations=violations)


def run_eviction_sim(cfg: SimConfig, threads: Optional[int] = None) -> CostReport:
    """Run the eviction simulation; runs are independent and may go in parallel"""
    outcomes = parallel_map(partial(_simulate_run, cfg), range(cfg.runs), threads)

    c1 = np.mean([o.c1 for o in outcomes], axis=0)
    c2 = np.mean([o.c2 for o in outcomes], axis=0)
    counts = Counter(rate for o in outcomes for rate in o.evicted_rates)
    mean_c1 = float(c1.mean())
    mean_c2 = float(c2.mean())

    return CostReport(
        rule=cfg.eviction,
        threshold=cfg.threshold,
        alpha=cfg.alpha,
        runs=cfg.runs,
        phase_c1=[float(x) for x in c1],
        phase_c2=[float(x) for x in c2],
        phase_cost=[float(a) + cfg.alpha * float(b) for a, b in zip(c1, c2)],
        mean_c1=mean_c1,
        mean_c2=mean_c2,
        mean_cost=mean_c1 + cfg.alpha * mean_c2,
        evictions_by_rate={str(rate): counts.get(rate, 0) for rate in cfg.pool.rates},
        dominance_violations=sum(o.violations for o in outcomes),
    )
