import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.errors import ConsistencyError, DegenerateInputError, DomainError
from src.core.model import (
    Answer,
    GoldLabels,
    Interval,
    Partition,
    ResponseMatrix,
    WorkerEstimate,
    agreement_rate,
    restrict_to,
)
from src.core.simulator import gen_matrix


@pytest.mark.parametrize("token", ["Y", "yes", "1", "+1", "TRUE", " y "])
def test_yes_tokens(token):
    assert Answer.parse(token) is Answer.YES


@pytest.mark.parametrize("token", ["N", "no", "0", "-1", "False"])
def test_no_tokens(token):
    assert Answer.parse(token) is Answer.NO


def test_unknown_token():
    with pytest.raises(DomainError):
        Answer.parse("maybe")


def test_from_cells_places_answers():
    cells = {("t1", "w1"): Answer.YES, ("t1", "w2"): Answer.NO, ("t1", "w3"): Answer.YES}
    matrix = ResponseMatrix.from_cells(["t1"], ["w1", "w2", "w3"], cells)
    assert matrix.n == 1
    assert matrix.m == 3
    assert matrix.values.tolist() == [[1, -1, 1]]
    assert matrix.answer("t1", "w2") is Answer.NO


def test_missing_cells_make_matrix_incomplete():
    cells = {("t1", "w1"): Answer.YES, ("t2", "w2"): Answer.NO}
    matrix = ResponseMatrix.from_cells(["t1", "t2"], ["w1", "w2"], cells)
    assert not matrix.is_complete
    assert matrix.answer("t1", "w2") is None
    with pytest.raises(DomainError):
        matrix.require_complete()


def test_duplicate_workers_rejected():
    with pytest.raises(ValueError):
        ResponseMatrix(tasks=("t1",), workers=("w1", "w1"), values=[[1, 1]])


def test_values_outside_alphabet_rejected():
    with pytest.raises(ValueError):
        ResponseMatrix(tasks=("t1",), workers=("w1", "w2"), values=[[1, 2]])


def test_values_are_read_only():
    matrix = ResponseMatrix.from_columns({"w1": [1, -1], "w2": [1, 1]})
    with pytest.raises(ValueError):
        matrix.values[0, 0] = -1


def test_restrict_keeps_common_tasks():
    cells = {(f"t{i}", "w1"): Answer.YES for i in range(20)}
    cells.update({(f"t{i}", "w2"): Answer.NO for i in range(0, 20, 2)})
    cells.update({(f"t{i}", "w3"): Answer.YES for i in range(20)})
    matrix = ResponseMatrix.from_cells([f"t{i}" for i in range(20)], ["w1", "w2", "w3"], cells)

    sub = restrict_to(matrix, ["w1", "w2"])
    assert sub.n == 10
    assert sub.is_complete
    assert sub.tasks == tuple(f"t{i}" for i in range(0, 20, 2))
    assert restrict_to(sub, ["w1", "w2"]) == sub


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.lists(st.sampled_from([1, -1, 0]), min_size=4, max_size=4), min_size=1, max_size=30),
    st.lists(st.sampled_from(["a", "b", "c", "d"]), min_size=2, max_size=4, unique=True),
)
def test_restrict_is_idempotent(rows, subset):
    matrix = ResponseMatrix(
        tasks=tuple(f"t{i}" for i in range(len(rows))),
        workers=("a", "b", "c", "d"),
        values=np.array(rows, dtype=np.int8),
    )
    try:
        sub = restrict_to(matrix, subset)
    except DegenerateInputError:
        return
    assert sub.is_complete
    assert set(sub.workers) == set(subset)
    assert restrict_to(sub, subset) == sub


def test_restrict_preserves_matrix_column_order():
    matrix = ResponseMatrix.from_columns({"a": [1, 1], "b": [1, -1], "c": [-1, -1]})
    sub = restrict_to(matrix, ["c", "a"])
    assert sub.workers == ("a", "c")


def test_restrict_without_common_task():
    cells = {("t1", "w1"): Answer.YES, ("t2", "w2"): Answer.NO}
    matrix = ResponseMatrix.from_cells(["t1", "t2"], ["w1", "w2"], cells)
    with pytest.raises(DegenerateInputError):
        restrict_to(matrix, ["w1", "w2"])


def test_agreement_rate_examples():
    matrix = ResponseMatrix.from_columns(
        {"w1": [1, 1, -1, -1], "w2": [1, 1, -1, -1], "w3": [-1, -1, 1, 1], "w4": [1, -1, -1, 1]}
    )
    assert agreement_rate(matrix, "w1", "w2").q_hat == 1.0
    assert agreement_rate(matrix, "w1", "w3").q_hat == 0.0
    assert agreement_rate(matrix, "w1", "w4").q_hat == 0.5
    assert agreement_rate(matrix, "w1", "w4").agree_count == 2


def test_agreement_rate_same_worker():
    matrix = ResponseMatrix.from_columns({"w1": [1], "w2": [1]})
    with pytest.raises(DomainError):
        agreement_rate(matrix, 0, 0)


@settings(max_examples=50, deadline=None)
@given(
    st.lists(st.lists(st.sampled_from([1, -1]), min_size=3, max_size=3), min_size=1, max_size=40),
)
def test_agreement_rate_symmetric_and_bounded(rows):
    matrix = ResponseMatrix(
        tasks=tuple(f"t{i}" for i in range(len(rows))),
        workers=("a", "b", "c"),
        values=np.array(rows),
    )
    ab = agreement_rate(matrix, "a", "b")
    ba = agreement_rate(matrix, "b", "a")
    assert ab.q_hat == ba.q_hat
    assert 0 <= ab.q_hat <= 1


def test_agreement_matches_model_for_large_n():
    # q = p_i p_j + (1 - p_i)(1 - p_j) = 0.66 for rates 0.1 and 0.3
    matrix, _ = gen_matrix([0.1, 0.3], n=100_000, seed=3)
    assert math.isclose(agreement_rate(matrix, 0, 1).q_hat, 0.66, abs_tol=0.01)


def test_interval_order_enforced():
    with pytest.raises(ValueError):
        Interval(estimate=0.2, half_size=0.1, level=0.9, lo=0.3, hi=0.1)


def test_interval_contains_endpoints():
    interval = Interval.symmetric(0.2, 0.05, 0.9)
    assert interval.contains(0.15)
    assert interval.contains(0.25)
    assert not interval.contains(0.26)


def test_partition_sorted_and_disjoint():
    part = Partition(target=0, S=[3, 1], T=[2])
    assert part.S == (1, 3)
    with pytest.raises(ValueError):
        Partition(target=0, S=[1, 2], T=[2])
    with pytest.raises(ValueError):
        Partition(target=1, S=[1], T=[2])


def test_em_estimate_has_no_interval():
    interval = Interval.symmetric(0.2, 0.05, 0.9)
    with pytest.raises(ValueError):
        WorkerEstimate(worker="w1", p_hat=0.2, interval=interval, method="em")


def test_p_hat_clamped():
    assert WorkerEstimate(worker="w", p_hat=-0.1, method="majority").p_hat_clamped == 0.0
    assert WorkerEstimate(worker="w", p_hat=0.7, method="majority").p_hat_clamped == 0.5


def test_gold_error_fraction_and_unknown_tasks():
    matrix = ResponseMatrix.from_columns({"w1": [1, 1, -1, -1], "w2": [1, -1, -1, 1]})
    gold = GoldLabels(labels={"t1": Answer.YES, "t2": Answer.YES, "t3": Answer.NO, "t4": Answer.NO})
    assert gold.error_fraction(matrix, "w1") == 0.0
    assert gold.error_fraction(matrix, "w2") == 0.5

    with pytest.raises(ConsistencyError):
        GoldLabels(labels={"t9": Answer.YES}).check_against(matrix)
