"""File formats: observation CSV, model/config files and JSON reports.

Floats are always written with 17 significant digits so that files
round-trip exactly.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .measure import Grid, GridMeasure, WeightSpec, grid_gaussian
from .models import ModelSpec, ObservationPath


def fmt(x) -> str:
    return format(float(x), ".17g")


def _json_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return fmt(x)


def dumps_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits (NaN/Infinity as in the json module)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps_json(v, indent, _level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        items = [f"{pad}{dumps_json(v, indent, _level + 1)}" for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _json_float(float(obj))
    if obj is None:
        return "null"
    return json.dumps(str(obj))


def write_json(path, obj) -> None:
    Path(path).write_text(dumps_json(obj) + "\n")


def load_toml(path) -> dict:
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def load_model(path) -> ModelSpec:
    """Model from a JSON file (ModelSpec.to_dict layout) or a TOML file with a [model] table."""
    path = Path(path)
    if path.suffix == ".toml":
        data = load_toml(path)
        data = data.get("model", data)
    else:
        data = json.loads(path.read_text())
        data = data.get("model", data)
    return ModelSpec.from_dict(data)


def write_observations(path, obs: ObservationPath) -> None:
    """CSV with columns k, y and a comment header holding the model and the seed."""
    with open(path, "w", newline="") as fh:
        meta = {"model": obs.model, "seed": obs.seed, "origin": obs.origin}
        fh.write("# " + json.dumps(meta, sort_keys=True) + "\n")
        w = csv.writer(fh)
        w.writerow(["k", "y"])
        for k, y in enumerate(obs.y):
            w.writerow([k, fmt(y)])


def read_observations(path) -> ObservationPath:
    meta = {}
    rows = []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                try:
                    meta = json.loads(line[1:].strip())
                except json.JSONDecodeError:
                    pass
                continue
            rows.append(line)
    reader = csv.DictReader(rows)
    data = sorted(((int(r["k"]), float(r["y"])) for r in reader))
    if [k for k, _ in data] != list(range(len(data))):
        raise ValueError("observation file must list k = 0, 1, 2, ... without gaps")
    seed = meta.get("seed")
    origin = meta.get("origin", "external") if seed is not None else "external"
    return ObservationPath(np.array([y for _, y in data]), seed=seed, origin=origin,
                           model=meta.get("model"))


def parse_weight(spec: str | dict | None) -> WeightSpec | None:
    """``"exp_abs:1.0"`` / ``{"family": ..., "c": ...}`` / None."""
    if spec is None or spec == "none":
        return None
    if isinstance(spec, dict):
        return WeightSpec.from_dict(spec)
    family, _, c = spec.partition(":")
    return WeightSpec(family, float(c))


def parse_init(spec: str | dict, grid: Grid) -> GridMeasure:
    """Initial law on the grid: ``"gaussian:MEAN,VAR"`` or a table {mean, var}."""
    if isinstance(spec, dict):
        return grid_gaussian(grid, float(spec["mean"]), float(spec["var"]))
    kind, _, rest = spec.partition(":")
    if kind != "gaussian":
        raise ValueError(f"unsupported initial law {spec!r}; use gaussian:MEAN,VAR")
    mean, var = (float(t) for t in rest.split(","))
    return grid_gaussian(grid, mean, var)
