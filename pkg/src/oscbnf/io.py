"""CSV tables with JSON sidecars.

Reals are written with 17 significant digits so values round-trip exactly;
framing follows RFC 4180 (comma separated, CRLF line ends, quoting as
needed).
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


def format_value(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}" if v.denominator != 1 else str(v.numerator)
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for row in rows:
        w.writerow([format_value(v) for v in row])
    return buf.getvalue()


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Write a table and return the sha256 of its bytes."""
    data = csv_text(header, rows).encode()
    Path(path).write_bytes(data)
    return hashlib.sha256(data).hexdigest()


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, Fraction):
        return format_value(obj)
    return obj


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def canonical_hash(obj) -> str:
    text = json.dumps(_jsonable(obj), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode()).hexdigest()


def write_table(path, header: Sequence[str], rows: Iterable[Sequence], meta: dict) -> str:
    """CSV plus ``<name>.json`` sidecar with ``meta``; returns the CSV hash."""
    path = Path(path)
    digest = write_csv(path, header, rows)
    write_json(path.with_suffix(".json"), {"columns": list(header), **meta})
    return digest


def monotone_map_table(path, m, meta: dict | None = None) -> str:
    """Serialize a :class:`~oscbnf.measure.MonotoneMap` as ``(abscissa, value)``."""
    return write_table(path, ["abscissa", "value"], zip(m.x, m.y), {**m.meta, **(meta or {})})


def density_table(path, d, meta: dict | None = None) -> str:
    """Serialize a :class:`~oscbnf.measure.DensityProfile` at bin centres."""
    return write_table(path, ["abscissa", "value"], zip(d.centres, d.values),
                       {"lambda": d.lam, "support": list(d.support), "bins": int(d.masses.size),
                        "method": d.method, **d.meta, **(meta or {})})
