"""CSV ingestion and atomic output writers.

Spectra CSV: header ``sample_id, animal_id, <wavenumber>...``, one row per
spectrum.  Traits CSV: header ``animal_id, <trait>...``; empty cells are
missing.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "InputError",
    "SpectraTable",
    "TraitTable",
    "load_spectra_csv",
    "load_traits_csv",
    "atomic_write_text",
    "write_csv",
    "write_json",
    "fmt",
    "read_table",
]


class InputError(ValueError):
    """Malformed input file; the message names the offending row/column."""


@dataclass(frozen=True)
class SpectraTable:
    sample_id: list[str]
    animal_id: list[str]
    wavenumbers: np.ndarray
    values: np.ndarray  # (samples, channels)
    mode: str = "transmittance"
    flags: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.shape != (len(self.sample_id), len(self.wavenumbers)):
            raise ValueError("values shape does not match ids and wavenumbers")
        if self.mode not in ("transmittance", "absorbance"):
            raise ValueError(f"unknown mode {self.mode!r}")

    def __len__(self):
        return len(self.sample_id)

    def with_values(self, values, **changes) -> "SpectraTable":
        return replace(self, values=np.asarray(values, dtype=float), **changes)


@dataclass(frozen=True)
class TraitTable:
    animal_id: list[str]
    traits: dict[str, np.ndarray]  # NaN marks a missing value

    def __len__(self):
        return len(self.animal_id)

    @property
    def names(self) -> list[str]:
        return list(self.traits)

    def column(self, name) -> np.ndarray:
        return self.traits[name]


def _rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise InputError(f"{path}: empty file")
    return rows


def _number(cell: str, path, row: int, col: int, allow_empty=False) -> float:
    s = cell.strip()
    if allow_empty and s == "":
        return math.nan
    try:
        v = float(s)
    except ValueError:
        raise InputError(f"{path}: non-numeric cell {cell!r} at row {row}, column {col}") from None
    if not math.isfinite(v):
        raise InputError(f"{path}: non-finite cell {cell!r} at row {row}, column {col}")
    return v


def load_spectra_csv(path, mode: str = "transmittance") -> SpectraTable:
    rows = _rows(path)
    header = rows[0]
    if len(header) < 3:
        raise InputError(f"{path}: header needs sample_id, animal_id and at least one wavenumber")
    wn = np.array([_number(c, path, 1, j + 1) for j, c in enumerate(header[2:], start=2)])
    bad = np.flatnonzero(np.diff(wn) <= 0)
    if bad.size:
        j = int(bad[0]) + 3
        raise InputError(f"{path}: wavenumbers not strictly increasing at column {j}")
    width = len(header)
    ids, animals, values, seen = [], [], [], {}
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != width:
            raise InputError(f"{path}: row {i} has {len(r)} cells, expected {width}")
        sid = r[0].strip()
        if sid in seen:
            raise InputError(f"{path}: duplicate sample_id {sid!r} at rows {seen[sid]} and {i}")
        seen[sid] = i
        ids.append(sid)
        animals.append(r[1].strip())
        values.append([_number(c, path, i, j) for j, c in enumerate(r[2:], start=3)])
    if not ids:
        raise InputError(f"{path}: no data rows")
    return SpectraTable(ids, animals, wn, np.array(values, dtype=float), mode)


def load_traits_csv(path) -> TraitTable:
    rows = _rows(path)
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise InputError(f"{path}: header needs animal_id and at least one trait")
    if len(set(header[1:])) != len(header) - 1:
        raise InputError(f"{path}: duplicate trait column")
    animals, cols = [], [[] for _ in header[1:]]
    for i, r in enumerate(rows[1:], start=2):
        if len(r) != len(header):
            raise InputError(f"{path}: row {i} has {len(r)} cells, expected {len(header)}")
        animals.append(r[0].strip())
        for j, c in enumerate(r[1:]):
            cols[j].append(_number(c, path, i, j + 2, allow_empty=True))
    return TraitTable(animals, {h: np.array(c, dtype=float) for h, c in zip(header[1:], cols)})


def read_table(path) -> tuple[dict, list[dict]]:
    """Read a CSV written by :func:`write_csv`: ``(meta, rows as dicts)``."""
    meta, lines = {}, []
    with open(path, encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("# ") and ": " in line:
                key, value = line[2:].split(": ", 1)
                meta[key] = json.loads(value)
            else:
                lines.append(line)
    return meta, list(csv.DictReader(lines))


def fmt(v) -> str:
    """Stable text for a CSV cell: ``repr`` for floats, empty for NaN."""
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    if isinstance(v, (np.integer,)):
        return str(int(v))
    return str(v)


def atomic_write_text(path, text: str) -> Path:
    """Write via a temporary file in the target directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def write_csv(path, header, rows, meta: dict | None = None) -> Path:
    """CSV with optional ``# key: json`` preamble lines carrying run metadata."""
    buf = io.StringIO()
    for key, value in (meta or {}).items():
        buf.write(f"# {key}: {json.dumps(value, sort_keys=True, default=_json_default)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return atomic_write_text(path, buf.getvalue())


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (set, frozenset)):
        return sorted(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _clean(o):
    # JSON has no NaN; write null instead
    if isinstance(o, float) and not math.isfinite(o):
        return None
    if isinstance(o, dict):
        return {k: _clean(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_clean(v) for v in o]
    return o


def write_json(path, obj) -> Path:
    text = json.dumps(_clean(json.loads(json.dumps(obj, default=_json_default))), indent=2, sort_keys=True)
    return atomic_write_text(path, text + "\n")
