"""CSV output with a '#'-prefixed metadata block and round-trippable floats."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

FLOAT_FORMAT = "{:.17g}"


def _fmt(v: Any) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return FLOAT_FORMAT.format(float(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence[Any]],
              metadata: Mapping[str, Any] | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        for key, value in (metadata or {}).items():
            if not isinstance(value, str):
                value = json.dumps(value, sort_keys=True, default=_json_default)
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    return path


def read_csv(path) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Return ``(metadata, header, data)`` with ``data`` as a float array."""
    meta: dict[str, str] = {}
    lines: list[str] = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(":")
                meta[key.strip()] = value.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    data = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    return meta, header, data.reshape(-1, len(header))


def write_two_column(path, x: Sequence[float], y: Sequence[float], comment: str = "") -> Path:
    """Whitespace separated file for gnuplot."""
    path = Path(path)
    with open(path, "w") as fh:
        if comment:
            fh.write(f"# {comment}\n")
        for a, b in zip(x, y):
            fh.write(f"{FLOAT_FORMAT.format(float(a))} {FLOAT_FORMAT.format(float(b))}\n")
    return path


def _json_default(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    raise TypeError(f"not JSON serialisable: {type(obj)}")
