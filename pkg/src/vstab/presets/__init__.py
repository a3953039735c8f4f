"""Experiment configurations shipped with the package."""
from pathlib import Path

PRESET_DIR = Path(__file__).parent
NAMES = ("linear-filter-stable", "linear-prediction-divergent", "nonlinear-e-conditions")


def path(name: str) -> Path:
    if name not in NAMES:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(NAMES)}")
    return PRESET_DIR / f"{name}.toml"
