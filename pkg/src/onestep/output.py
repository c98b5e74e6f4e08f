"""CSV and JSON-sidecar writers. Numbers use 17 significant digits (round-trip exact)."""

from __future__ import annotations

import json
import platform
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if v is None:
        return ""
    return format(float(v), ".17g")


def write_csv(path: Path | str, columns: Mapping[str, Sequence]) -> Path:
    """Write equal-length columns with a header row."""
    path = Path(path)
    names = list(columns)
    cols = [list(columns[n]) for n in names]
    lengths = {len(c) for c in cols}
    if len(lengths) > 1:
        raise ValueError(f"column lengths differ: {dict(zip(names, map(len, cols)))}")
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        fh.write(",".join(names) + "\n")
        for row in zip(*cols):
            fh.write(",".join(fmt(v) for v in row) + "\n")
    return path


def read_csv(path: Path | str) -> dict[str, np.ndarray]:
    """Read a file written by :func:`write_csv` into float arrays."""
    lines = Path(path).read_text().splitlines()
    names = lines[0].split(",")
    rows = [[float(v) if v else np.nan for v in line.split(",")] for line in lines[1:]]
    data = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return {n: data[:, i] for i, n in enumerate(names)}


def versions() -> dict:
    from onestep import BACKEND, __version__

    return {
        "onestep": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "kernel_backend": BACKEND,
    }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path: Path | str, payload: Mapping) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    return path
