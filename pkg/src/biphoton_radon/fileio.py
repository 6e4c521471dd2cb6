"""CSV + sidecar JSON formats for histograms, sinograms, grids and curves.

Numbers are written with ``repr``, the shortest decimal string that reads
back to the same double, so identical runs produce identical bytes. Every
file is written to a temporary sibling first and then renamed into place.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .detection import CoincidenceHistogram
from .errors import InvalidParametersError, MissingDataError
from .tomography import Grid2D, Sinogram


def format_number(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if not math.isfinite(v):
        raise InvalidParametersError(f"refusing to write non-finite value {v!r}")
    return repr(v)


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows) -> Path:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([c if isinstance(c, str) else format_number(c) for c in row])
    return atomic_write_text(path, buf.getvalue())


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    path = Path(path)
    if not path.exists():
        raise MissingDataError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise InvalidParametersError(f"{path} is empty")
    return rows[0], rows[1:]


def write_json(path, obj) -> Path:
    return atomic_write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def read_json(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingDataError(f"missing file: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_suffix(".json")


def _table_rows(values: np.ndarray):
    for i in range(values.shape[0]):
        for j in range(values.shape[1]):
            yield i, j, values[i, j]


def write_histogram(path, hist: CoincidenceHistogram) -> Path:
    """``i,j,value`` rows over the full table; index ``d`` is the out-of-range outcome."""
    write_csv(path, ["i", "j", "value"], _table_rows(hist.table))
    meta = {
        "phi": hist.phi,
        "basis": hist.basis.value,
        "d": hist.dimension,
        "halfRange": hist.half_range,
        "shots": "exact" if hist.shots is None else int(hist.shots),
        "seed": hist.seed,
        "overflow": hist.overflow.item() if hasattr(hist.overflow, "item") else hist.overflow,
    }
    write_json(sidecar_path(path), meta)
    return Path(path)


def _read_table(path, shape, dtype) -> np.ndarray:
    header, rows = read_csv(path)
    if header != ["i", "j", "value"] and header != ["j", "l", "value"]:
        raise InvalidParametersError(f"unexpected header {header} in {path}")
    out = np.zeros(shape, dtype=dtype)
    for a, b, v in rows:
        out[int(a), int(b)] = dtype(v) if dtype is not float else float(v)
    return out


def read_histogram(path) -> CoincidenceHistogram:
    meta = read_json(sidecar_path(path))
    d = int(meta["d"])
    exact = meta["shots"] == "exact"
    table = _read_table(path, (d + 1, d + 1), float if exact else np.int64)
    return CoincidenceHistogram(
        table, float(meta["phi"]), meta["basis"], float(meta["halfRange"]), None if exact else int(meta["shots"]), meta["seed"]
    )


def write_sinogram(path, sino: Sinogram, mode: str = "standard") -> Path:
    write_csv(path, ["j", "l", "value"], _table_rows(sino.values))
    meta = {
        "m": sino.m,
        "n": sino.n,
        "domainHalfWidth": sino.half_width,
        "offsetConvention": "rho_l = -1 + 2l/n, physical offset rho_l * domainHalfWidth",
        "mode": mode,
    }
    write_json(sidecar_path(path), meta)
    return Path(path)


def read_sinogram(path) -> Sinogram:
    meta = read_json(sidecar_path(path))
    values = _read_table(path, (int(meta["m"]), int(meta["n"])), float)
    return Sinogram(values, float(meta["domainHalfWidth"]))


def write_grid(path, grid: Grid2D, mode: str = "standard") -> Path:
    write_csv(path, ["i", "j", "value"], _table_rows(grid.values))
    meta = {
        "n": grid.n,
        "domainHalfWidth": grid.half_width,
        "offsetConvention": "cell centres -W + (i + 1/2) 2W/n",
        "mode": mode,
    }
    write_json(sidecar_path(path), meta)
    return Path(path)


def read_grid(path) -> Grid2D:
    meta = read_json(sidecar_path(path))
    n = int(meta["n"])
    return Grid2D(_read_table(path, (n, n), float), float(meta["domainHalfWidth"]))
