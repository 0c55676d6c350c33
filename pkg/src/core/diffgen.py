"""General differences scheme: super-workers built from peer partitions"""

import itertools
import logging
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.core.diff3 import Mode, TripleCore, core_interval, estimate_columns, reported_level
from src.core.errors import DomainError
from src.core.model import Partition, ResponseMatrix, WorkerEstimate, WorkerRef
from src.core.stats import z_for
from src.utils.seeding import rng_for

logger = logging.getLogger(__name__)

StrategyKind = Literal["exhaustive", "pruning", "greedy"]


class StrategyConfig(BaseModel):
    """How S and T are chosen for each target worker"""

    model_config = ConfigDict(frozen=True)

    kind: StrategyKind = "exhaustive"
    pruning_threshold: float = Field(default=0.35, gt=0, le=0.5)
    seed: int = 0
    mode: Mode = "linearized"
    approx_intervals: bool = False


class PartitionSearch(BaseModel):
    """Outcome of a partition search for one target"""

    model_config = ConfigDict(frozen=True)

    estimate: WorkerEstimate
    strategy: StrategyKind
    candidates_considered: int


def super_majority_values(block: np.ndarray) -> np.ndarray:
    """Row-wise majority of +1/-1 columns; ties go to +1"""
    return np.where(block.sum(axis=1) >= 0, 1, -1).astype(np.int8)


def super_majority(matrix: ResponseMatrix, subset: Sequence[WorkerRef]) -> np.ndarray:
    """Majority answer of `subset` on every task"""
    if len(subset) == 0:
        raise DomainError("A super-worker needs at least one member")
    matrix.require_complete()
    indices = [matrix.worker_index(w) for w in subset]
    return super_majority_values(matrix.values[:, indices])


def super_error_rate(rates: Sequence[float]) -> float:
    """Probability that the majority of independent workers is wrong.

    Exact sum over all correctness patterns; with an even member count a tie
    counts as an error with probability 1/2.
    """
    if len(rates) == 0:
        raise DomainError("super_error_rate needs at least one rate")
    for p in rates:
        if not 0 <= p <= 1:
            raise DomainError(f"Error rates must lie in [0, 1], got {p}")

    k = len(rates)
    total = 0.0
    for pattern in itertools.product((False, True), repeat=k):
        prob = 1.0
        wrong = 0
        for p, is_wrong in zip(rates, pattern):
            prob *= p if is_wrong else 1 - p
            wrong += is_wrong
        if 2 * wrong > k:
            total += prob
        elif 2 * wrong == k:
            total += prob / 2
    return total


def canonical_pair(S: Sequence[int], T: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Order an unordered {S, T} pair so that S holds the smallest member"""
    S, T = tuple(sorted(S)), tuple(sorted(T))
    return (S, T) if S[0] < T[0] else (T, S)


def enumerate_partitions(peers: Sequence[int]) -> Iterator[Tuple[Tuple[int, ...], Tuple[int, ...]]]:
    """Every unordered pair of disjoint nonempty peer subsets.

    Peers may be left out of both sets. Yields (S, T) with min(S) < min(T).
    """
    peers = sorted(peers)
    for assignment in itertools.product((0, 1, 2), repeat=len(peers)):
        S = tuple(p for p, a in zip(peers, assignment) if a == 1)
        T = tuple(p for p, a in zip(peers, assignment) if a == 2)
        if S and T and S[0] < T[0]:
            yield S, T


def count_partitions(peer_count: int) -> int:
    return (3 ** peer_count - 2 * 2 ** peer_count + 1) // 2


class _Evaluator:
    """Runs the three-worker scheme for (target, S, T) with cached majority columns"""

    def __init__(self, values: np.ndarray, z: float, approx: bool):
        self.values = values
        self.z = z
        self.approx = approx
        self._majorities: Dict[Tuple[int, ...], np.ndarray] = {}
        self.preliminary: Optional[List[float]] = None
        self.calls = 0

    def majority(self, members: Tuple[int, ...]) -> np.ndarray:
        column = self._majorities.get(members)
        if column is None:
            column = super_majority_values(self.values[:, list(members)])
            self._majorities[members] = column
        return column

    def __call__(self, target: int, S: Tuple[int, ...], T: Tuple[int, ...]) -> TripleCore:
        self.calls += 1
        triple = np.column_stack([self.values[:, target], self.majority(S), self.majority(T)])
        return estimate_columns(triple, self.z, self.approx)


def _to_estimate(
    matrix: ResponseMatrix,
    target: int,
    S: Tuple[int, ...],
    T: Tuple[int, ...],
    core: TripleCore,
    level: float,
) -> WorkerEstimate:
    S, T = canonical_pair(S, T)
    if core.degenerate[0]:
        logger.warning(f"Degenerate estimate for worker {matrix.workers[target]} with S={S}, T={T}")
    return WorkerEstimate(
        worker=matrix.workers[target],
        p_hat=core.p_hats[0],
        interval=core_interval(core, 0, level),
        method="diffgen",
        degenerate=core.degenerate[0],
        partition_used=Partition(target=target, S=S, T=T),
    )


def estimate_with_partition(
    matrix: ResponseMatrix,
    part: Partition,
    c: float,
    mode: Mode = "linearized",
    approx: bool = False,
) -> WorkerEstimate:
    """Estimate the target of `part` against super-workers S and T"""
    part.check_peers(matrix.m)
    matrix.require_complete()
    level = reported_level(c, mode)
    evaluate = _Evaluator(matrix.values, z_for(c), approx)
    core = evaluate(part.target, part.S, part.T)
    return _to_estimate(matrix, part.target, part.S, part.T, core, level)


def odd_sized(S: Sequence[int], T: Sequence[int]) -> bool:
    """Both super-workers have an odd member count.

    An even-sized super-worker breaks ties toward Y, so its error rate
    depends on the true answer and the symmetric inversion is biased.
    """
    return len(S) % 2 == 1 and len(T) % 2 == 1


def _exhaustive(evaluate: _Evaluator, target: int, peers: Sequence[int]):
    best = None
    count = 0
    for S, T in enumerate_partitions(peers):
        count += 1
        if not odd_sized(S, T):
            continue
        core = evaluate(target, S, T)
        key = (core.half_size(0), len(S) + len(T), S, T)
        if best is None or key < best[0]:
            best = (key, S, T, core)
    _, S, T, core = best
    return S, T, core, count


def _odd_split(members: Sequence[int]) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Alternate sorted members into S and T with both sizes odd.

    Two even halves hand T's last member to S; with an odd total the even
    half drops its last member.
    """
    members = sorted(members)
    S, T = list(members[0::2]), list(members[1::2])
    if len(S) % 2 == 0 and len(T) % 2 == 0:
        S.append(T.pop())
    elif len(S) % 2 == 0:
        S.pop()
    elif len(T) % 2 == 0:
        T.pop()
    return tuple(sorted(S)), tuple(T)


def preliminary_estimates(evaluate: _Evaluator, m: int) -> List[float]:
    """Rough error rate of every worker from an odd-sized split of its peers"""
    if evaluate.preliminary is None:
        rates = []
        for worker in range(m):
            S, T = _odd_split([k for k in range(m) if k != worker])
            rates.append(evaluate(worker, S, T).p_hats[0])
        evaluate.preliminary = rates
    return evaluate.preliminary


def _pruning(evaluate: _Evaluator, target: int, peers: Sequence[int], threshold: float, m: int):
    rates = preliminary_estimates(evaluate, m)
    kept = [k for k in peers if rates[k] < threshold]
    if len(kept) < 2:
        logger.debug(f"Pruning kept {len(kept)} peers of worker {target}; searching all peers")
        kept = list(peers)
    return _exhaustive(evaluate, target, kept)


def _greedy(evaluate: _Evaluator, target: int, peers: Sequence[int], seed: int):
    order = [int(k) for k in rng_for(seed, "greedy", target).permutation(list(peers))]
    S, T = (order[0],), (order[1],)
    core = evaluate(target, S, T)
    count = 1
    rest = order[2:]
    # peers join in pairs so both super-workers keep an odd size; a last odd peer stays out
    for pair in zip(rest[0::2], rest[1::2]):
        # grow the super-worker with the larger estimated error
        if core.p_hats[1] >= core.p_hats[2]:
            trial_S, trial_T = tuple(sorted(S + pair)), T
        else:
            trial_S, trial_T = S, tuple(sorted(T + pair))
        trial = evaluate(target, trial_S, trial_T)
        count += 1
        if trial.half_size(0) < core.half_size(0):
            S, T, core = trial_S, trial_T, trial
    return S, T, core, count


def _search(
    matrix: ResponseMatrix,
    evaluate: _Evaluator,
    target: int,
    strat: StrategyConfig,
    level: float,
) -> PartitionSearch:
    peers = [k for k in range(matrix.m) if k != target]
    if strat.kind == "exhaustive":
        S, T, core, count = _exhaustive(evaluate, target, peers)
    elif strat.kind == "pruning":
        S, T, core, count = _pruning(evaluate, target, peers, strat.pruning_threshold, matrix.m)
    elif strat.kind == "greedy":
        S, T, core, count = _greedy(evaluate, target, peers, strat.seed)
    else:
        raise DomainError(f"Unknown strategy: {strat.kind!r}")

    estimate = _to_estimate(matrix, target, S, T, core, level)
    return PartitionSearch(estimate=estimate, strategy=strat.kind, candidates_considered=count)


def search_partition(
    matrix: ResponseMatrix,
    target: WorkerRef,
    strat: StrategyConfig,
    c: float,
) -> PartitionSearch:
    """Pick S and T for `target` with the configured strategy"""
    if matrix.m < 3:
        raise DomainError(f"The general scheme needs at least 3 workers, got {matrix.m}")
    matrix.require_complete()
    level = reported_level(c, strat.mode)
    evaluate = _Evaluator(matrix.values, z_for(c), strat.approx_intervals)
    return _search(matrix, evaluate, matrix.worker_index(target), strat, level)


def estimate_general(
    matrix: ResponseMatrix,
    target: WorkerRef,
    strat: StrategyConfig,
    c: float,
) -> WorkerEstimate:
    return search_partition(matrix, target, strat, c).estimate


def estimate_all_workers(
    matrix: ResponseMatrix,
    strat: StrategyConfig,
    c: float,
    targets: Optional[Sequence[WorkerRef]] = None,
) -> List[PartitionSearch]:
    """Search every worker independently, sharing the majority-column cache"""
    if matrix.m < 3:
        raise DomainError(f"The general scheme needs at least 3 workers, got {matrix.m}")
    matrix.require_complete()
    level = reported_level(c, strat.mode)
    evaluate = _Evaluator(matrix.values, z_for(c), strat.approx_intervals)
    indices = range(matrix.m) if targets is None else [matrix.worker_index(t) for t in targets]
    return [_search(matrix, evaluate, k, strat, level) for k in indices]
