"""Trace CSV and latency-column readers/writers.

Trace columns (version 1)::

    msg_id, source, emit_time_s, light_id, vehicle_id,
    seg_<name>_ms ..., total_ms, delivered, d_m, H, gamma, ber

Empty cells mean "not applicable" (e.g. no latency for a message that never
reached a light). Floats are written with ``repr`` so files are byte-stable.
"""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .sim import TraceRecord

TRACE_VERSION = 1
BASE_COLUMNS = ["msg_id", "source", "emit_time_s", "light_id", "vehicle_id"]
TAIL_COLUMNS = ["total_ms", "delivered", "d_m", "H", "gamma", "ber"]


def trace_columns(segment_names: Sequence[str]) -> list[str]:
    return BASE_COLUMNS + [f"seg_{n}_ms" for n in segment_names] + TAIL_COLUMNS


def _num(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x))


def _ms(x: Optional[float]) -> str:
    return "" if x is None else repr(float(x) * 1e3)


def trace_to_csv(records: Iterable[TraceRecord], segment_names: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(trace_columns(segment_names))
    for r in records:
        w.writerow(
            [r.msg_id, r.source, _num(r.emit_time), r.light_id or "", r.vehicle_id]
            + [_ms(r.segments.get(n)) for n in segment_names]
            + [_ms(r.total), "true" if r.delivered else "false", _num(r.distance), _num(r.h), _num(r.gamma), _num(r.ber)]
        )
    return buf.getvalue()


def write_trace(path: Union[str, Path], records, segment_names) -> None:
    Path(path).write_text(trace_to_csv(records, segment_names), encoding="utf-8", newline="")


def write_json(path: Union[str, Path], obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


class ColumnError(ValueError):
    """Missing column or unparseable cells; ``rows`` holds offending row numbers."""

    def __init__(self, message: str, rows: Sequence[int] = ()):
        self.rows = list(rows)
        super().__init__(message)


def _is_number(text: str) -> bool:
    try:
        float(text)
        return True
    except ValueError:
        return False


def read_latency_column(text: str, column: Optional[str] = None) -> np.ndarray:
    """Latencies (ms) from a CSV, returned in **seconds**.

    Accepts a headerless single-column file or a file with a header row. With
    a header, ``column`` picks the column (default ``total_ms`` if present,
    else the first). If a ``delivered`` column exists only delivered rows are
    used. Empty cells are skipped. Row numbers in errors are 1-based file lines.
    """
    reader = csv.reader(io.StringIO(text))
    numbered = [(reader.line_num, r) for r in reader]
    numbered = [(n, r) for n, r in numbered if any(c.strip() for c in r)]
    if not numbered:
        raise ColumnError("no data rows")
    header = None
    if not all(_is_number(c) or not c.strip() for c in numbered[0][1]):
        header, numbered = [c.strip() for c in numbered[0][1]], numbered[1:]

    if header is None:
        if column not in (None, "0"):
            raise ColumnError(f"column {column!r} requested but the file has no header")
        idx = 0
        delivered_idx = None
    else:
        name = column or ("total_ms" if "total_ms" in header else header[0])
        if name not in header:
            raise ColumnError(f"column {name!r} not found; available: {', '.join(header)}")
        idx = header.index(name)
        delivered_idx = header.index("delivered") if "delivered" in header else None

    values, bad = [], []
    for line, r in numbered:
        if delivered_idx is not None and delivered_idx < len(r):
            if r[delivered_idx].strip().lower() in ("false", "0"):
                continue
        cell = r[idx].strip() if idx < len(r) else ""
        if not cell:
            continue
        try:
            v = float(cell)
        except ValueError:
            bad.append(line)
            continue
        if not math.isfinite(v) or v < 0:
            bad.append(line)
            continue
        values.append(v)
    if bad:
        shown = ", ".join(map(str, bad[:20])) + (" ..." if len(bad) > 20 else "")
        raise ColumnError(f"unparseable latency values on rows {shown}", bad)
    return np.asarray(values, dtype=float) / 1e3
