import json

import pandas as pd
import pytest

from src.cli.main import main
from src.services.reports import RunReport


@pytest.fixture
def simulated(tmp_path):
    """Write a synthetic response file and return its path builder"""

    def _simulate(rates, tasks=400, seed=3):
        responses = tmp_path / "responses.csv"
        gold = tmp_path / "gold.csv"
        code = main([
            "simulate",
            "--rates", ",".join(str(r) for r in rates),
            "--tasks", str(tasks),
            "--seed", str(seed),
            "--output", str(responses),
            "--gold-output", str(gold),
        ])
        assert code == 0
        return str(responses), str(gold)

    return _simulate


def read_report(path):
    return RunReport.model_validate_json(open(path, encoding="utf-8").read())


def test_simulate_writes_responses_and_gold(simulated):
    responses, gold = simulated([0.1, 0.2, 0.3], tasks=50)
    frame = pd.read_csv(responses)
    assert list(frame.columns) == ["task_id", "worker_id", "answer"]
    assert len(frame) == 150
    assert set(frame["answer"]) <= {"Y", "N"}
    assert len(pd.read_csv(gold)) == 50


def test_estimate_three_workers(simulated, tmp_path):
    responses, _ = simulated([0.1, 0.2, 0.3])
    report_path = tmp_path / "report.json"
    workers_csv = tmp_path / "workers.csv"
    code = main(["estimate", "--input", responses, "--output", str(report_path), "--workers-csv", str(workers_csv)])
    assert code == 0

    report = read_report(report_path)
    (section,) = report.sections
    assert [w.worker_id for w in section.workers] == ["w1", "w2", "w3"]
    for worker in section.workers:
        assert worker.method == "diff3"
        assert worker.lo <= worker.p_hat <= worker.hi
        assert worker.level == 0.9
    assert len(section.decisions) == 400
    assert report.config["method"] == "diff3"

    frame = pd.read_csv(workers_csv)
    assert list(frame.columns[:4]) == ["worker_id", "method", "p_hat", "p_hat_clamped"]
    assert len(frame) == 3


def test_estimate_general_scheme_exhaustive(simulated, tmp_path):
    responses, _ = simulated([0.1, 0.2, 0.3, 0.2, 0.15], tasks=300)
    report_path = tmp_path / "report.json"
    assert main(["estimate", "--input", responses, "--method", "diffgen", "--output", str(report_path)]) == 0
    workers = read_report(report_path).sections[0].workers
    assert [w.candidates_considered for w in workers] == [25] * 5
    assert all(w.partition_s and w.partition_t for w in workers)


def test_estimate_em_has_no_intervals(simulated, tmp_path):
    responses, _ = simulated([0.1, 0.2, 0.3])
    report_path = tmp_path / "report.json"
    assert main(["estimate", "--input", responses, "--method", "em", "--output", str(report_path)]) == 0
    section = read_report(report_path).sections[0]
    assert all(w.lo is None and w.hi is None for w in section.workers)
    assert section.em is not None and section.em.iterations >= 1


def test_estimate_is_deterministic(simulated, tmp_path):
    responses, _ = simulated([0.1, 0.2, 0.3, 0.25], tasks=200)
    report_path = tmp_path / "report.json"
    args = ["estimate", "--input", responses, "--method", "diffgen", "--strategy", "greedy", "--seed", "5",
            "--output", str(report_path)]
    assert main(args) == 0
    first = read_report(report_path).without_timing()
    assert main(args) == 0
    assert read_report(report_path).without_timing() == first


@pytest.mark.parametrize(
    "extra",
    [
        ["--method", "em", "--strategy", "greedy"],
        ["--method", "diff3", "--em-max-iter", "5"],
        ["--method", "majority", "--interval-mode", "conservative"],
        ["--method", "diffgen", "--strategy", "greedy", "--pruning-threshold", "0.3"],
    ],
)
def test_conflicting_flags_are_usage_errors(simulated, extra):
    responses, _ = simulated([0.1, 0.2, 0.3], tasks=20)
    assert main(["estimate", "--input", responses] + extra) == 2


def test_missing_input_file_fails(tmp_path):
    assert main(["estimate", "--input", str(tmp_path / "absent.csv")]) == 1


def test_aggregate_weighted_vote(responses_file, tmp_path):
    rows = [("t1", "w1", "Y"), ("t1", "w2", "Y"), ("t1", "w3", "Y"), ("t1", "w4", "N"), ("t1", "w5", "N")]
    path = responses_file(rows)
    out = tmp_path / "decisions.csv"
    code = main([
        "aggregate", "--input", path,
        "--rates", "w1=0.4,w2=0.4,w3=0.4,w4=0.1,w5=0.1",
        "--output", str(out),
    ])
    assert code == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["task_id", "answer", "accuracy", "worst_case_accuracy", "combined_error_bound"]
    assert frame.loc[0, "answer"] == "N"
    assert abs(frame.loc[0, "accuracy"] - 0.96) < 1e-9


def test_aggregate_worst_case_from_report(simulated, tmp_path):
    responses, _ = simulated([0.1, 0.2, 0.3], tasks=200)
    report_path = tmp_path / "report.json"
    assert main(["estimate", "--input", responses, "--output", str(report_path)]) == 0
    out = tmp_path / "decisions.csv"
    code = main(["aggregate", "--input", responses, "--estimates", str(report_path), "--worst-case", "--output", str(out)])
    assert code == 0
    frame = pd.read_csv(out)
    assert len(frame) == 200
    assert frame["worst_case_accuracy"].notna().all()
    assert (frame["combined_error_bound"] >= 0.1 - 1e-9).all()


def test_aggregate_needs_rates_or_estimates(responses_file):
    path = responses_file([("t1", "w1", "Y"), ("t1", "w2", "N")])
    assert main(["aggregate", "--input", path]) == 2


def test_aggregate_takes_no_seed(responses_file):
    path = responses_file([("t1", "w1", "Y"), ("t1", "w2", "N"), ("t1", "w3", "Y")])
    with pytest.raises(SystemExit) as exc:
        main(["aggregate", "--input", path, "--rates", "w1=0.1,w2=0.2,w3=0.3", "--seed", "3"])
    assert exc.value.code == 2


def test_experiment_fig3(tmp_path):
    out_dir = tmp_path / "results"
    assert main(["experiment", "fig3", "--bad", "6", "--out-dir", str(out_dir)]) == 0
    frame = pd.read_csv(out_dir / "fig3.csv")
    assert list(frame.columns) == ["bad_count", "simple_error", "weighted_error"]
    assert len(frame) == 1
    summary = json.loads((out_dir / "fig3.json").read_text(encoding="utf-8"))
    assert summary["experiment"] == "fig3"
    assert summary["results"]["weighted_to_simple_ratio"]["6"] <= 0.6


def test_experiment_rejects_foreign_flag(tmp_path):
    assert main(["experiment", "table1", "--bad", "3", "--out-dir", str(tmp_path)]) == 2


def test_unknown_experiment_name():
    with pytest.raises(SystemExit) as info:
        main(["experiment", "nonsense"])
    assert info.value.code == 2


def test_config_file_supplies_defaults(tmp_path, simulated):
    responses, _ = simulated([0.1, 0.2, 0.3], tasks=100)
    config = tmp_path / "run.yaml"
    config.write_text(f"estimate:\n  input: {responses}\n  confidence: 0.8\n", encoding="utf-8")
    report_path = tmp_path / "report.json"
    assert main(["estimate", "--config", str(config), "--output", str(report_path)]) == 0
    assert read_report(report_path).sections[0].workers[0].level == 0.8
