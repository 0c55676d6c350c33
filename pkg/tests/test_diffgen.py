import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.core.diff3 import estimate_three
from src.core.diffgen import (
    StrategyConfig,
    _odd_split,
    count_partitions,
    enumerate_partitions,
    estimate_all_workers,
    estimate_general,
    estimate_with_partition,
    odd_sized,
    search_partition,
    super_error_rate,
    super_majority,
)
from src.core.errors import DomainError
from src.core.experiments import coverage_experiment
from src.core.model import Partition, ResponseMatrix
from src.core.simulator import gen_matrix
from src.utils.seeding import derive_seed, rng_for


def test_super_error_rate_reference():
    assert math.isclose(super_error_rate([0.1, 0.4, 0.4]), 0.208, abs_tol=1e-12)


@given(st.floats(min_value=0, max_value=1))
def test_super_error_rate_single_member(p):
    assert math.isclose(super_error_rate([p]), p, abs_tol=1e-12)


@given(st.floats(min_value=0, max_value=1), st.floats(min_value=0, max_value=1))
def test_super_error_rate_even_tie_splits(p, q):
    # two members: both wrong, or exactly one wrong with a coin flip
    assert math.isclose(super_error_rate([p, q]), (p + q) / 2, abs_tol=1e-12)


def test_super_majority_ties_go_to_yes():
    matrix = ResponseMatrix.from_columns({"a": [1, -1, -1], "b": [-1, -1, 1], "c": [1, 1, 1]})
    assert super_majority(matrix, ["a", "b"]).tolist() == [1, -1, 1]
    with pytest.raises(DomainError):
        super_majority(matrix, [])


@pytest.mark.parametrize("peers", [2, 3, 4, 5, 6])
def test_partition_count(peers):
    partitions = list(enumerate_partitions(range(peers)))
    assert len(partitions) == count_partitions(peers)
    assert len(set(partitions)) == len(partitions)
    for S, T in partitions:
        assert S[0] < T[0]
        assert not set(S) & set(T)


def test_four_peers_give_25_partitions():
    assert count_partitions(4) == 25


def test_exhaustive_considers_every_partition(five_workers):
    matrix, _ = five_workers
    searches = estimate_all_workers(matrix, StrategyConfig(kind="exhaustive"), 0.9)
    assert [s.candidates_considered for s in searches] == [25] * 5
    for search in searches:
        part = search.estimate.partition_used
        assert part.S[0] < part.T[0]
        assert search.estimate.method == "diffgen"
        assert odd_sized(part.S, part.T)


def test_odd_sized_super_workers():
    assert odd_sized([1], [2, 3, 4])
    assert not odd_sized([1, 2], [3])
    assert not odd_sized([1], [2, 3])


@pytest.mark.parametrize("peers", [2, 3, 4, 5, 6, 7])
def test_preliminary_split_is_odd_sized(peers):
    S, T = _odd_split(range(peers))
    assert odd_sized(S, T)
    assert not set(S) & set(T)
    assert len(S) + len(T) >= peers - 1


@pytest.mark.parametrize("seed", range(5))
def test_greedy_builds_odd_super_workers(seed):
    rates = rng_for(seed, "greedy-parity").uniform(0.05, 0.4, size=8)
    matrix, _ = gen_matrix(rates, n=300, seed=seed)
    for search in estimate_all_workers(matrix, StrategyConfig(kind="greedy", seed=seed), 0.9):
        part = search.estimate.partition_used
        assert odd_sized(part.S, part.T)
        assert search.candidates_considered == 1 + (matrix.m - 3) // 2


def test_singleton_partition_matches_three_worker_scheme(three_workers):
    matrix, _ = three_workers
    general = estimate_with_partition(matrix, Partition(target=0, S=[1], T=[2]), 0.9)
    direct = estimate_three(matrix, 0.9).estimates[0]
    assert general.p_hat == direct.p_hat
    assert general.interval.lo == direct.interval.lo
    assert general.interval.hi == direct.interval.hi


@pytest.mark.parametrize("instance", range(10))
def test_exhaustive_never_wider_than_other_strategies(instance):
    rates = rng_for(99, "dominance", instance).uniform(0.05, 0.4, size=6)
    matrix, _ = gen_matrix(rates, n=300, seed=derive_seed(99, "dominance-matrix", instance))
    exhaustive = estimate_all_workers(matrix, StrategyConfig(kind="exhaustive"), 0.9)
    greedy = estimate_all_workers(matrix, StrategyConfig(kind="greedy", seed=instance), 0.9)
    pruning = estimate_all_workers(matrix, StrategyConfig(kind="pruning", pruning_threshold=0.3), 0.9)
    for e, g, p in zip(exhaustive, greedy, pruning):
        assert e.estimate.half_size <= g.estimate.half_size
        assert e.estimate.half_size <= p.estimate.half_size
        assert g.candidates_considered == 1 + (matrix.m - 3) // 2
        assert p.candidates_considered <= e.candidates_considered
        assert odd_sized(p.estimate.partition_used.S, p.estimate.partition_used.T)


def test_greedy_is_deterministic_under_seed(five_workers):
    matrix, _ = five_workers
    strat = StrategyConfig(kind="greedy", seed=4)
    first = [s.estimate for s in estimate_all_workers(matrix, strat, 0.9)]
    second = [s.estimate for s in estimate_all_workers(matrix, strat, 0.9)]
    assert first == second


def test_search_single_target_matches_batch(five_workers):
    matrix, _ = five_workers
    strat = StrategyConfig(kind="exhaustive")
    single = search_partition(matrix, "w3", strat, 0.9)
    batch = estimate_all_workers(matrix, strat, 0.9, targets=["w3"])[0]
    assert single.estimate == batch.estimate
    assert estimate_general(matrix, "w3", strat, 0.9) == single.estimate


def test_estimates_close_to_truth():
    matrix, _ = gen_matrix([0.1, 0.2, 0.3, 0.2, 0.15], n=20_000, seed=8)
    searches = estimate_all_workers(matrix, StrategyConfig(kind="exhaustive"), 0.9)
    for search, truth in zip(searches, [0.1, 0.2, 0.3, 0.2, 0.15]):
        assert abs(search.estimate.p_hat - truth) < 0.04


def test_needs_three_workers():
    matrix = ResponseMatrix.from_columns({"a": [1, -1], "b": [1, 1]})
    with pytest.raises(DomainError):
        estimate_all_workers(matrix, StrategyConfig(), 0.9)


def test_partition_outside_matrix():
    matrix = ResponseMatrix.from_columns({"a": [1, -1], "b": [1, 1], "c": [-1, 1]})
    with pytest.raises(DomainError):
        estimate_with_partition(matrix, Partition(target=0, S=[1], T=[5]), 0.9)


def test_incomplete_matrix_rejected():
    values = np.array([[1, 1, 0], [1, -1, 1]])
    matrix = ResponseMatrix(tasks=("t1", "t2"), workers=("a", "b", "c"), values=values)
    with pytest.raises(DomainError):
        estimate_all_workers(matrix, StrategyConfig(), 0.9)


@pytest.mark.slow
@pytest.mark.parametrize("c", [0.7, 0.8, 0.9, 0.95])
def test_greedy_coverage_seven_workers(c):
    table = coverage_experiment(m=7, trials=500, c_grid=[c], strategy=StrategyConfig(kind="greedy"), seed=2, n=500)
    assert table.rows[0].coverage >= c - 0.05


@pytest.mark.slow
def test_exhaustive_dominates_on_many_instances():
    for instance in range(200):
        m = 5 + instance % 3
        rates = rng_for(17, "dominance", instance).uniform(0.05, 0.4, size=m)
        matrix, _ = gen_matrix(rates, n=300, seed=derive_seed(17, "dominance-matrix", instance))
        exhaustive = estimate_all_workers(matrix, StrategyConfig(kind="exhaustive"), 0.9)
        greedy = estimate_all_workers(matrix, StrategyConfig(kind="greedy", seed=instance), 0.9)
        pruning = estimate_all_workers(matrix, StrategyConfig(kind="pruning", pruning_threshold=0.3), 0.9)
        for e, g, p in zip(exhaustive, greedy, pruning):
            assert e.estimate.half_size <= g.estimate.half_size
            assert e.estimate.half_size <= p.estimate.half_size
