from functools import partial

from src.utils.parallel import parallel_map, resolve_threads


def scale(factor, x):
    return factor * x


def test_results_keep_input_order():
    items = [-3, 1, -2, 4]
    assert parallel_map(abs, items, threads=2) == [3, 1, 2, 4]
    assert parallel_map(abs, items, threads=1) == parallel_map(abs, items, threads=2)


def test_partial_over_module_function_runs_in_workers():
    assert parallel_map(partial(scale, 3), range(10), threads=3) == [3 * x for x in range(10)]


def test_empty_input():
    assert parallel_map(abs, [], threads=4) == []


def test_resolve_threads(monkeypatch):
    monkeypatch.setattr("os.cpu_count", lambda: 6)
    assert resolve_threads(0) == 6
    assert resolve_threads(-1) == 6
    assert resolve_threads(2) == 2
