import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Type, TypeVar

import yaml
from pydantic import BaseModel, ConfigDict, Field

from src.core.diff3 import Mode
from src.core.diffgen import StrategyKind
from src.core.errors import ConfigError
from src.core.experiments import PriceConfig
from src.core.model import Method
from src.core.simulator import EvictionRule, WorkerPool

M = TypeVar("M", bound=BaseModel)

ExperimentName = Literal["coverage", "table1", "fig3", "price", "eviction"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class EstimateConfig(_Section):
    input: Optional[str] = None
    format: Optional[Literal["csv", "json"]] = None
    method: Method = "diff3"
    confidence: float = Field(default=0.9, gt=0, lt=1)
    interval_mode: Mode = "linearized"
    approx_intervals: bool = False
    strategy: Optional[StrategyKind] = None
    pruning_threshold: Optional[float] = Field(default=None, gt=0, le=0.5)
    seed: int = 0
    workers: Optional[List[str]] = None
    stratify: Optional[str] = None
    selectivity: Optional[float] = Field(default=None, gt=0, lt=1)
    categorical: bool = False
    em_max_iter: int = Field(default=1000, ge=1)
    em_tol: float = Field(default=1e-6, gt=0)
    em_restarts: int = Field(default=1, ge=1)
    output: Optional[str] = None
    workers_csv: Optional[str] = None


class AggregateConfig(_Section):
    input: Optional[str] = None
    format: Optional[Literal["csv", "json"]] = None
    estimates: Optional[str] = None
    rates: Optional[Dict[str, float]] = None
    selectivity: float = Field(default=0.5, gt=0, lt=1)
    worst_case: bool = False
    strict_worst_case: bool = False
    confidence: Optional[float] = Field(default=None, gt=0, lt=1)
    output: Optional[str] = None


class CoverageSettings(_Section):
    m: int = Field(default=3, ge=3)
    trials: int = Field(default=1000, ge=1)
    tasks: int = Field(default=500, ge=1)
    strategy: StrategyKind = "greedy"
    c_grid: Optional[List[float]] = None
    input: Optional[str] = None
    gold: Optional[str] = None
    stratify: Optional[str] = None


class ComparisonSettings(_Section):
    tasks: int = Field(default=400, ge=1)
    workers: int = Field(default=3, ge=3)
    reps: int = Field(default=500, ge=1)
    confidence: float = Field(default=0.9, gt=0, lt=1)


class DecisionSettings(_Section):
    team: int = Field(default=9, ge=1)
    bad: Optional[int] = Field(default=None, ge=0)
    good_rate: float = Field(default=0.1, gt=0, lt=1)
    bad_rate: float = Field(default=0.3, gt=0, lt=1)
    selectivity: float = Field(default=0.5, gt=0, lt=1)


class PriceSettings(PriceConfig):
    model_config = ConfigDict(extra="forbid", frozen=True)


class EvictionSettings(_Section):
    rule: Optional[EvictionRule] = None
    alphas: List[float] = Field(default_factory=lambda: [0.2, 1.0, 5.0])
    thresholds: Optional[List[float]] = None
    runs: int = Field(default=200, ge=1)
    phases: int = Field(default=30, ge=1)
    tasks: int = Field(default=25, ge=1)
    team_size: int = Field(default=7, ge=3)
    confidence: float = Field(default=0.35, gt=0, lt=1)
    strategy: StrategyKind = "greedy"
    pool: WorkerPool = WorkerPool()


class ExperimentConfig(_Section):
    # chosen on the command line when absent from the file
    name: Optional[ExperimentName] = None
    seed: int = 0
    out_dir: str = "results"
    coverage: CoverageSettings = CoverageSettings()
    table1: ComparisonSettings = ComparisonSettings()
    fig3: DecisionSettings = DecisionSettings()
    price: PriceSettings = PriceSettings()
    eviction: EvictionSettings = EvictionSettings()


class SimulateConfig(_Section):
    rates: Optional[List[float]] = Field(default=None, min_length=2)
    tasks: int = Field(default=100, ge=1)
    selectivity: float = Field(default=0.5, gt=0, lt=1)
    seed: int = 0
    output: str = "responses.csv"
    gold_output: Optional[str] = "gold.csv"


class RunConfig(_Section):
    estimate: Optional[EstimateConfig] = None
    aggregate: Optional[AggregateConfig] = None
    experiment: Optional[ExperimentConfig] = None
    simulate: Optional[SimulateConfig] = None


def load_config_file(path: str) -> Dict[str, Any]:
    """Read a YAML or JSON config file into a dict"""
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"Config file not found: {path}")
    text = p.read_text(encoding="utf-8-sig")
    try:
        if p.suffix.lower() in (".yaml", ".yml"):
            data = yaml.safe_load(text)
        else:
            data = json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot parse config file {path}: {e}")
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"Config file {path} must contain a mapping at the top level")
    return data


def validate_run_config(data: dict) -> RunConfig:
    """Validate a loaded config; pydantic.ValidationError propagates unchanged"""
    return RunConfig(**data)


def merge_config(model_cls: Type[M], file_section: Optional[Dict[str, Any]], flags: Dict[str, Any]) -> M:
    """Model defaults, overridden by the file section, overridden by explicit flags"""
    data = dict(file_section or {})
    data.update({key: value for key, value in flags.items() if value is not None})
    return model_cls(**data)
