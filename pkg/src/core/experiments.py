"""Experiment protocols: interval coverage, estimator comparison, decision rules, price and eviction sweeps"""

import logging
from functools import partial
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.aggregation import batch_worst_case, exact_error_probability
from src.core.baselines import EmConfig, em_estimate, majority_estimate
from src.core.diff3 import estimate_three
from src.core.diffgen import StrategyConfig, estimate_all_workers
from src.core.errors import DegenerateInputError, DomainError
from src.core.model import GoldLabels, ResponseMatrix, WorkerEstimate, restrict_to
from src.core.simulator import CostReport, EvictionRule, SimConfig, WorkerPool, gen_matrix, run_eviction_sim
from src.utils.parallel import parallel_map
from src.utils.seeding import derive_seed, rng_for

logger = logging.getLogger(__name__)


def default_c_grid() -> List[float]:
    return [round(0.05 * k, 2) for k in range(1, 20)]


def default_thresholds() -> List[float]:
    return [round(-0.4 + 0.05 * k, 2) for k in range(17)]


def estimate_team(matrix: ResponseMatrix, c: float, strategy: StrategyConfig) -> List[WorkerEstimate]:
    """Interval estimates for every worker: diff3 for three workers, the general scheme otherwise"""
    if matrix.m == 3:
        return list(estimate_three(matrix, c, strategy.mode, strategy.approx_intervals).estimates)
    return [search.estimate for search in estimate_all_workers(matrix, strategy, c)]


# -- coverage ---------------------------------------------------------------


class CoverageRow(BaseModel):
    c: float
    coverage: Optional[float]
    pairs: int


class CoverageTable(BaseModel):
    source: Literal["synthetic", "dataset"]
    m: int
    trials: int
    skipped_trials: int
    rows: List[CoverageRow]


def _coverage_hits(matrix: ResponseMatrix, proxies: Sequence[Optional[float]], c_grid, strategy) -> List[Tuple[int, int]]:
    hits = []
    for c in c_grid:
        estimates = estimate_team(matrix, c, strategy)
        inside = 0
        total = 0
        for est, proxy in zip(estimates, proxies):
            if proxy is None:
                continue
            total += 1
            inside += int(est.interval.contains(proxy))
        hits.append((inside, total))
    return hits


def _coverage_trial(
    t: int,
    m: int,
    c_grid: Sequence[float],
    strategy: StrategyConfig,
    seed: int,
    n: int,
    rate_range: Tuple[float, float],
    matrix: Optional[ResponseMatrix],
    gold: Optional[GoldLabels],
) -> Optional[List[Tuple[int, int]]]:
    if matrix is None:
        rates = rng_for(seed, "coverage-rates", t).uniform(*rate_range, size=m)
        sample, _ = gen_matrix(rates, 0.5, n, seed=derive_seed(seed, "coverage", t))
        proxies = [float(p) for p in rates]
    else:
        chosen = rng_for(seed, "coverage-workers", t).choice(matrix.m, size=m, replace=False)
        try:
            sample = restrict_to(matrix, [int(k) for k in chosen])
        except DegenerateInputError:
            logger.debug(f"Trial {t}: sampled workers share no task")
            return None
        proxies = [gold.error_fraction(sample, w) for w in sample.workers]
    trial_strategy = strategy.model_copy(update={"seed": derive_seed(strategy.seed, "coverage", t)})
    return _coverage_hits(sample, proxies, c_grid, trial_strategy)


def coverage_experiment(
    m: int = 3,
    trials: int = 1000,
    c_grid: Optional[Sequence[float]] = None,
    strategy: Optional[StrategyConfig] = None,
    seed: int = 0,
    n: int = 500,
    rate_range: Tuple[float, float] = (0.05, 0.45),
    matrix: Optional[ResponseMatrix] = None,
    gold: Optional[GoldLabels] = None,
    threads: Optional[int] = None,
) -> CoverageTable:
    """Fraction of (trial, worker) pairs whose error proxy falls inside its interval.

    Synthetic trials draw m uniform rates and check the intervals against
    them. With a dataset, each trial samples m workers, restricts to their
    common tasks and uses each worker's error fraction on gold tasks.
    """
    c_grid = list(c_grid) if c_grid is not None else default_c_grid()
    strategy = strategy or StrategyConfig(kind="greedy", seed=seed)
    if m < 3:
        raise DomainError(f"Coverage needs at least 3 workers per trial, got {m}")
    if matrix is not None:
        if gold is None:
            raise DomainError("Dataset coverage needs gold labels")
        if matrix.m < m:
            raise DomainError(f"Dataset has {matrix.m} workers, fewer than m={m}")
        gold.check_against(matrix)

    trial = partial(
        _coverage_trial,
        m=m,
        c_grid=c_grid,
        strategy=strategy,
        seed=seed,
        n=n,
        rate_range=tuple(rate_range),
        matrix=matrix,
        gold=gold,
    )
    logger.info(f"Coverage experiment: m={m}, {trials} trials, {len(c_grid)} confidence levels")
    results = parallel_map(trial, range(trials), threads)

    kept = [r for r in results if r is not None]
    rows = []
    for idx, c in enumerate(c_grid):
        inside = sum(r[idx][0] for r in kept)
        total = sum(r[idx][1] for r in kept)
        rows.append(CoverageRow(c=c, coverage=inside / total if total else None, pairs=total))

    return CoverageTable(
        source="synthetic" if matrix is None else "dataset",
        m=m,
        trials=trials,
        skipped_trials=len(results) - len(kept),
        rows=rows,
    )


# -- estimator comparison ---------------------------------------------------


class ComparisonRow(BaseModel):
    method: str
    mean_abs_error: float


class ComparisonResult(BaseModel):
    tasks: int
    workers: int
    reps: int
    rows: List[ComparisonRow]

    def error_of(self, method: str) -> float:
        return next(row.mean_abs_error for row in self.rows if row.method == method)


def _comparison_rep(r: int, tasks: int, workers: int, seed: int, c: float, rates: List[float]) -> Tuple[float, float, float]:
    true_rates = rng_for(seed, "comparison-rates", r).choice(rates, size=workers)
    matrix, _ = gen_matrix(true_rates, 0.5, tasks, seed=derive_seed(seed, "comparison", r))
    ours = estimate_team(matrix, c, StrategyConfig(kind="exhaustive"))
    em = em_estimate(matrix, EmConfig(seed=derive_seed(seed, "em", r))).to_worker_estimates()
    majority = majority_estimate(matrix)
    return tuple(
        float(np.mean([abs(p - e.p_hat_clamped) for p, e in zip(true_rates, ests)]))
        for ests in (ours, em, majority)
    )


def comparison_experiment(
    tasks: int = 400,
    workers: int = 3,
    reps: int = 500,
    seed: int = 0,
    c: float = 0.9,
    rates: Sequence[float] = (0.2, 0.3),
    threads: Optional[int] = None,
) -> ComparisonResult:
    """Mean |p - p_hat| of the differences scheme, EM and majority on shared data"""
    if workers < 3:
        raise DomainError(f"Comparison needs at least 3 workers, got {workers}")
    rep = partial(_comparison_rep, tasks=tasks, workers=workers, seed=seed, c=c, rates=list(rates))

    logger.info(f"Comparison experiment: {tasks} tasks, {workers} workers, {reps} reps")
    errors = np.array(parallel_map(rep, range(reps), threads))
    means = errors.mean(axis=0)
    ours_name = "diff3" if workers == 3 else "diffgen"
    return ComparisonResult(
        tasks=tasks,
        workers=workers,
        reps=reps,
        rows=[
            ComparisonRow(method=ours_name, mean_abs_error=float(means[0])),
            ComparisonRow(method="em", mean_abs_error=float(means[1])),
            ComparisonRow(method="majority", mean_abs_error=float(means[2])),
        ],
    )


# -- decision rules ---------------------------------------------------------


class DecisionErrorRow(BaseModel):
    bad_count: int
    simple_error: float
    weighted_error: float


def fig3_experiment(
    team: int = 9,
    good_rate: float = 0.1,
    bad_rate: float = 0.3,
    s: float = 0.5,
    bad_counts: Optional[Sequence[int]] = None,
) -> List[DecisionErrorRow]:
    """Exact error of simple vs weighted majority as bad workers replace good ones"""
    if bad_counts is None:
        bad_counts = range(team + 1)
    rows = []
    for bad in bad_counts:
        if not 0 <= bad <= team:
            raise DomainError(f"Bad count {bad} outside 0..{team}")
        rates = [bad_rate] * bad + [good_rate] * (team - bad)
        rows.append(
            DecisionErrorRow(
                bad_count=bad,
                simple_error=exact_error_probability(rates, "simple", s),
                weighted_error=exact_error_probability(rates, "weighted", s),
            )
        )
    return rows


# -- price of accuracy and confidence ---------------------------------------

PriceSweep = Literal["workers", "tasks", "tradeoff"]


class PriceConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    target_accuracy: float = Field(default=0.9, gt=0, lt=1)
    c: float = Field(default=0.9, gt=0, lt=1)
    sweep: PriceSweep = "tradeoff"
    pool: WorkerPool = Field(default_factory=lambda: WorkerPool(distribution=[(0.2, 0.5), (0.3, 0.5)]))
    worker_grid: List[int] = Field(default_factory=lambda: [3, 5, 7, 9, 11, 15, 21, 25, 31])
    task_grid: List[int] = Field(default_factory=lambda: [25, 50, 75, 100, 130, 150, 200, 300, 400, 500])
    trials: int = Field(default=20, ge=1)
    strict: bool = False
    s: float = Field(default=0.5, gt=0, lt=1)
    seed: int = 0


class PriceRow(BaseModel):
    workers: Optional[int]
    tasks: Optional[int]
    saturated: bool
    achieved_accuracy: Optional[float]
    cost: Optional[int] = None


def worst_case_level(cfg: PriceConfig, workers: int, tasks: int) -> float:
    """Mean worst-case accuracy bound over tasks and trials for one team shape"""
    strategy = StrategyConfig(kind="greedy")
    levels = []
    for trial in range(cfg.trials):
        rates = cfg.pool.draw(rng_for(cfg.seed, "price-rates", workers, trial), workers)
        matrix, _ = gen_matrix(rates, cfg.s, tasks, seed=derive_seed(cfg.seed, "price", workers, tasks, trial))
        trial_strategy = strategy.model_copy(update={"seed": derive_seed(cfg.seed, "price-greedy", workers, tasks, trial)})
        estimates = estimate_team(matrix, cfg.c, trial_strategy)
        _, _, worst = batch_worst_case(
            matrix.values,
            [e.p_hat for e in estimates],
            [e.half_size for e in estimates],
            cfg.s,
            cfg.strict,
        )
        levels.append(float(worst.mean()))
    return float(np.mean(levels))


def price_experiment(cfg: Optional[PriceConfig] = None, threads: Optional[int] = None) -> List[PriceRow]:
    """Smallest team shape whose worst-case accuracy bound reaches the target.

    `workers` and `tradeoff` scan the task grid for every worker count,
    `tasks` scans the worker grid for every task count. A point that never
    reaches the target within its grid is reported as saturated.
    """
    cfg = cfg or PriceConfig()
    if min(cfg.worker_grid) < 3:
        raise DomainError("Worker counts below 3 cannot be estimated")
    logger.info(f"Price experiment: sweep={cfg.sweep}, target={cfg.target_accuracy}, c={cfg.c}")
    outer_grid = sorted(cfg.task_grid if cfg.sweep == "tasks" else cfg.worker_grid)
    return parallel_map(partial(_price_scan, cfg=cfg), outer_grid, threads)


def _price_scan(outer: int, cfg: PriceConfig) -> PriceRow:
    inner_grid = sorted(cfg.worker_grid if cfg.sweep == "tasks" else cfg.task_grid)
    achieved = None
    for inner in inner_grid:
        workers, tasks = (inner, outer) if cfg.sweep == "tasks" else (outer, inner)
        achieved = worst_case_level(cfg, workers, tasks)
        if achieved >= cfg.target_accuracy:
            return PriceRow(
                workers=workers,
                tasks=tasks,
                saturated=False,
                achieved_accuracy=achieved,
                cost=workers * tasks if cfg.sweep == "tradeoff" else None,
            )
    workers, tasks = (None, outer) if cfg.sweep == "tasks" else (outer, None)
    return PriceRow(workers=workers, tasks=tasks, saturated=True, achieved_accuracy=achieved)


# -- eviction sweep ---------------------------------------------------------


class EvictionRow(BaseModel):
    threshold: float
    rule: EvictionRule
    alpha: float
    mean_c1: float
    mean_c2: float
    mean_cost: float
    evictions: int
    dominance_violations: int


def eviction_sweep(
    base: Optional[SimConfig] = None,
    thresholds: Optional[Sequence[float]] = None,
    alphas: Sequence[float] = (0.2, 1.0, 5.0),
    rules: Sequence[EvictionRule] = ("normal", "conservative"),
    threads: Optional[int] = None,
) -> List[EvictionRow]:
    """Mean cost per threshold, rule and alpha; alpha only reprices a trajectory"""
    base = base or SimConfig()
    thresholds = list(thresholds) if thresholds is not None else default_thresholds()
    rows: List[EvictionRow] = []
    for threshold in thresholds:
        for rule in rules:
            cfg = base.model_copy(update={"threshold": threshold, "eviction": rule})
            report: CostReport = run_eviction_sim(cfg, threads)
            logger.debug(f"threshold={threshold} rule={rule}: mean cost {report.mean_cost:.3f}")
            for alpha in alphas:
                priced = report.with_alpha(alpha)
                rows.append(
                    EvictionRow(
                        threshold=threshold,
                        rule=rule,
                        alpha=alpha,
                        mean_c1=priced.mean_c1,
                        mean_c2=priced.mean_c2,
                        mean_cost=priced.mean_cost,
                        evictions=priced.total_evictions,
                        dominance_violations=priced.dominance_violations,
                    )
                )
    return rows


def conservative_wins(rows: Sequence[EvictionRow], alpha: float) -> Dict[float, bool]:
    """Per threshold: does conservative eviction cost no more than normal eviction?"""
    costs: Dict[Tuple[float, str], float] = {
        (row.threshold, row.rule): row.mean_cost for row in rows if row.alpha == alpha
    }
    thresholds = sorted({t for t, _ in costs})
    return {t: costs[(t, "conservative")] <= costs[(t, "normal")] for t in thresholds}
