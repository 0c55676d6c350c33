"""Utility to validate a crowdconf run config (YAML or JSON) using pydantic models."""
import sys
from pathlib import Path

# Ensure project root is on sys.path so we can import `src` package
PROJECT_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(PROJECT_ROOT))

from src.config.run_config import load_config_file, validate_run_config  # noqa: E402


def main(path: str) -> int:
    p = Path(path)
    if not p.exists():
        print(f"Config file not found: {path}")
        return 2

    try:
        cfg = validate_run_config(load_config_file(path))
        print("Run config validated successfully")
        print(cfg.model_dump_json(indent=2, exclude_none=True))
    except Exception as e:
        print("Validation failed:", e)
        return 1
    return 0


if __name__ == '__main__':
    path = sys.argv[1] if len(sys.argv) > 1 else 'configs/eviction.yaml'
    sys.exit(main(path))
