import importlib.util
from pathlib import Path

import pytest
from pydantic import ValidationError

from src.config.run_config import (
    EstimateConfig,
    ExperimentConfig,
    load_config_file,
    merge_config,
    validate_run_config,
)
from src.config.settings import Settings
from src.core.errors import ConfigError

ROOT = Path(__file__).resolve().parents[1]


def load_script():
    spec = importlib.util.spec_from_file_location("validate_run_config", ROOT / "scripts" / "validate_run_config.py")
    module = importlib.util.module_from_spec(spec)
    spec.loader.exec_module(module)
    return module


def test_shipped_config_validates():
    cfg = validate_run_config(load_config_file(str(ROOT / "configs" / "eviction.yaml")))
    assert cfg.experiment.seed == 7
    assert cfg.experiment.eviction.pool.rates == [0.3, 0.2, 0.1]
    assert cfg.estimate.method == "diffgen"


def test_yaml_and_json_files(tmp_path):
    yaml_path = tmp_path / "run.yaml"
    yaml_path.write_text("estimate:\n  confidence: 0.8\n", encoding="utf-8")
    json_path = tmp_path / "run.json"
    json_path.write_text('{"estimate": {"confidence": 0.8}}', encoding="utf-8")
    assert load_config_file(str(yaml_path)) == load_config_file(str(json_path))

    empty = tmp_path / "empty.yaml"
    empty.write_text("", encoding="utf-8")
    assert load_config_file(str(empty)) == {}

    marked = tmp_path / "marked.yaml"
    marked.write_text("\ufeffestimate:\n  confidence: 0.8\n", encoding="utf-8")
    assert load_config_file(str(marked)) == load_config_file(str(yaml_path))


def test_bad_config_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config_file(str(tmp_path / "missing.yaml"))

    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(str(broken))

    listing = tmp_path / "list.yaml"
    listing.write_text("- 1\n- 2\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_config_file(str(listing))


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError):
        validate_run_config({"estimate": {"confidnce": 0.9}})
    with pytest.raises(ValidationError):
        validate_run_config({"estimate": {"confidence": 1.5}})


def test_flags_override_file_section():
    cfg = merge_config(EstimateConfig, {"confidence": 0.8, "method": "em"}, {"confidence": 0.95, "method": None})
    assert cfg.confidence == 0.95
    assert cfg.method == "em"
    assert merge_config(EstimateConfig, None, {}).confidence == 0.9


def test_experiment_sections_default_independently():
    cfg = ExperimentConfig(name="fig3", fig3={"bad": 4})
    assert cfg.fig3.bad == 4
    assert cfg.table1 == ExperimentConfig().table1
    with pytest.raises(ValidationError):
        ExperimentConfig(name="table2")


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("CROWDCONF_THREADS", "3")
    monkeypatch.setenv("CROWDCONF_LOG_LEVEL", "DEBUG")
    fresh = Settings()
    assert fresh.THREADS == 3
    assert fresh.LOG_LEVEL == "DEBUG"


def test_validate_script_exit_codes(tmp_path, capsys):
    script = load_script()
    assert script.main(str(tmp_path / "nope.yaml")) == 2

    good = tmp_path / "good.yaml"
    good.write_text("simulate:\n  rates: [0.1, 0.2, 0.3]\n", encoding="utf-8")
    assert script.main(str(good)) == 0
    assert "validated successfully" in capsys.readouterr().out

    bad = tmp_path / "bad.yaml"
    bad.write_text("simulate:\n  rates: [0.1]\n", encoding="utf-8")
    assert script.main(str(bad)) == 1
