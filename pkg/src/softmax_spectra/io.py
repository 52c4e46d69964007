"""Matrix CSV files and JSON output.

Matrix format: UTF-8, a header line ``# rows=<r> cols=<c>``, then r lines
of c comma-separated decimals. Numbers are written with 17 significant
digits so they round-trip exactly.
"""
import json
import math
import re
from pathlib import Path

import numpy as np

from .errors import InvalidDataset, MalformedInput
from .model import Dataset

_HEADER = re.compile(r"^#\s*rows=(\d+)\s+cols=(\d+)\s*$")


def fmt(x):
    return format(float(x), ".17g")


def read_matrix(path):
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except (OSError, UnicodeDecodeError) as exc:
        raise MalformedInput(f"{path}: {exc}") from exc
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise MalformedInput(f"{path}: empty file")
    m = _HEADER.match(lines[0].strip())
    if not m:
        raise MalformedInput(f"{path}: first line must be '# rows=<r> cols=<c>'")
    rows, cols = int(m.group(1)), int(m.group(2))
    body = lines[1:]
    if len(body) != rows:
        raise MalformedInput(f"{path}: header says {rows} rows, found {len(body)}")
    out = np.zeros((rows, cols))
    for i, line in enumerate(body):
        cells = line.split(",")
        if len(cells) != cols:
            raise MalformedInput(f"{path}: row {i + 1} has {len(cells)} entries, expected {cols}")
        try:
            out[i] = [float(c) for c in cells]
        except ValueError as exc:
            raise MalformedInput(f"{path}: row {i + 1}: {exc}") from exc
    if not np.all(np.isfinite(out)):
        raise MalformedInput(f"{path}: non-finite entries")
    return out


def format_matrix(m):
    m = np.atleast_2d(np.asarray(m, dtype=float))
    lines = [f"# rows={m.shape[0]} cols={m.shape[1]}"]
    lines += [",".join(fmt(v) for v in row) for row in m]
    return "\n".join(lines) + "\n"


def write_matrix(path, m):
    Path(path).write_text(format_matrix(m), encoding="utf-8")


def load_dataset(x_path, t_path):
    x = read_matrix(x_path)
    t = read_matrix(t_path)
    try:
        return Dataset(x, t)
    except InvalidDataset as exc:
        raise MalformedInput(str(exc)) from exc


def write_csv(path, header, rows):
    """Rows of numbers/None; None becomes an empty cell."""
    def cell(v):
        if v is None:
            return ""
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        return fmt(v)

    lines = [",".join(header)] + [",".join(cell(v) for v in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    return obj


def write_json(path, obj):
    text = json.dumps(jsonable(obj), indent=2, sort_keys=True)
    Path(path).write_text(text + "\n", encoding="utf-8")
