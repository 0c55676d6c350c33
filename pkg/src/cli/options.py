"""Shared argparse helpers: defaults in help text, list parsing, config merging"""

import argparse
from typing import Any, Callable, Dict, List, Optional, Type

from pydantic import BaseModel

from src.config.run_config import load_config_file
from src.core.errors import UsageError


def default_of(model: Type[BaseModel], field: str) -> Any:
    info = model.model_fields[field]
    if info.default_factory is not None:
        return info.default_factory()
    return info.default


def with_default(text: str, model: Type[BaseModel], field: str) -> str:
    """Help text ending with the model default, so help and reports agree"""
    return f"{text} (default: {default_of(model, field)})"


def float_list(value: str) -> List[float]:
    try:
        return [float(part) for part in value.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {value!r}")


def str_list(value: str) -> List[str]:
    return [part.strip() for part in value.split(",") if part.strip()]


def common_parent(seed: bool = True) -> argparse.ArgumentParser:
    """Options every subcommand accepts; --seed only where something is random"""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON or YAML file with defaults for this subcommand; flags override it")
    if seed:
        parent.add_argument("--seed", type=int, default=None, help="base seed; sub-seeds are derived from it (default: 0)")
    parent.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR (default: CROWDCONF_LOG_LEVEL or INFO)")
    return parent


def file_section(args: argparse.Namespace, name: str) -> Dict[str, Any]:
    if not getattr(args, "config", None):
        return {}
    data = load_config_file(args.config)
    section = data.get(name, {})
    if not isinstance(section, dict):
        raise UsageError(f"Section {name!r} of {args.config} must be a mapping")
    return section


def flag_values(args: argparse.Namespace, names: List[str], rename: Optional[Dict[str, str]] = None) -> Dict[str, Any]:
    """Explicitly given flags as config keys; unset flags are None and dropped later"""
    rename = rename or {}
    return {rename.get(name, name): getattr(args, name, None) for name in names}


def store_true_or_none(parser: argparse.ArgumentParser, flag: str, help_text: str):
    """Boolean flag that stays None when absent so a config file value survives"""
    parser.add_argument(flag, action="store_const", const=True, default=None, help=help_text)


Handler = Callable[[argparse.Namespace], int]
