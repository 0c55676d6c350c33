import numpy as np
import pytest

from src.core.model import ResponseMatrix
from src.core.simulator import gen_matrix


@pytest.fixture
def three_workers():
    """2000 tasks answered by workers with rates 0.1, 0.2 and 0.3"""
    matrix, truth = gen_matrix([0.1, 0.2, 0.3], s=0.5, n=2000, seed=11)
    return matrix, truth


@pytest.fixture
def five_workers():
    matrix, truth = gen_matrix([0.1, 0.2, 0.3, 0.2, 0.15], s=0.5, n=3000, seed=5)
    return matrix, truth


@pytest.fixture
def tiny_matrix():
    # w1 and w2 always agree, w3 always disagrees with them
    column = np.array([1, -1, 1, 1, -1, 1, -1, -1], dtype=np.int8)
    return ResponseMatrix.from_columns({"w1": column, "w2": column, "w3": -column})


def write_responses(path, rows, header="task_id,worker_id,answer"):
    lines = [header] + [",".join(str(x) for x in row) for row in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


@pytest.fixture
def responses_file(tmp_path):
    """Writer for small response CSVs inside the test's temp dir"""

    def _write(rows, name="responses.csv", header="task_id,worker_id,answer"):
        return write_responses(tmp_path / name, rows, header)

    return _write
