"""Text formats for count files, tables and reports.

* Count files are CSV with header ``label,counts,duration_s,rate_scale``.
  Tomography files hold the 16 probe labels; Hardy files hold the six
  Hardy labels (quoted, since they contain a comma).
* Tables (sweeps, delay scans) are CSV with a header row.
* Reports are JSON. Complex numbers are written as ``"re+imj"`` strings
  with 17 significant digits, so every float survives a round trip.
"""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .hardy import HARDY_LABELS, HardyCounts
from .tomography import CountRecord

COUNT_HEADER = ("label", "counts", "duration_s", "rate_scale")


def format_float(x) -> str:
    return f"{float(x):.17g}"


def format_complex(z) -> str:
    z = complex(z)
    return f"{z.real:.17g}{z.imag:+.17g}j"


def parse_complex(text: str) -> complex:
    return complex(text.strip().replace(" ", ""))


def _count_value(text, where):
    try:
        val = float(text)
    except ValueError:
        raise ValueError(f"{where}: counts {text!r} is not a number") from None
    return int(val) if val.is_integer() else val


def format_counts(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COUNT_HEADER)
    for r in records:
        w.writerow([r.label, r.counts if isinstance(r.counts, int) else format_float(r.counts),
                    format_float(r.duration), format_float(r.rate_scale)])
    return buf.getvalue()


def parse_counts(text: str, expected_labels=None):
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and not r[0].startswith("#")]
    if not rows or tuple(c.strip() for c in rows[0]) != COUNT_HEADER:
        raise ValueError(f"count file must start with the header {','.join(COUNT_HEADER)}")
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != 4:
            raise ValueError(f"line {lineno}: expected 4 fields, got {len(row)}")
        label, counts, duration, scale = (c.strip() for c in row)
        records.append(CountRecord(label, _count_value(counts, f"line {lineno}"), float(duration), float(scale)))
    if expected_labels is not None:
        seen = [r.label for r in records]
        missing = [lb for lb in expected_labels if lb not in seen]
        extra = [lb for lb in seen if lb not in expected_labels]
        dup = sorted({lb for lb in seen if seen.count(lb) > 1})
        problems = []
        if missing:
            problems.append("missing labels: " + ", ".join(missing))
        if extra:
            problems.append("unknown labels: " + ", ".join(extra))
        if dup:
            problems.append("duplicate labels: " + ", ".join(dup))
        if problems:
            raise ValueError("count file does not match the expected rows; " + "; ".join(problems))
    return records


def hardy_to_records(counts: HardyCounts, rate_scale=1.0):
    return [CountRecord(lb, counts[lb], counts.duration, rate_scale) for lb in HARDY_LABELS]


def records_to_hardy(records) -> HardyCounts:
    durations = {r.duration for r in records}
    if len(durations) != 1:
        raise ValueError("Hardy rows must share one acquisition duration")
    return HardyCounts({r.label: r.counts for r in records}, durations.pop())


def parse_hardy_counts(text: str) -> HardyCounts:
    return records_to_hardy(parse_counts(text, HARDY_LABELS))


def format_table(columns: dict) -> str:
    """CSV from ``{name: sequence}``; complex values use the ``re+imj`` form."""
    names = list(columns)
    n = {len(v) for v in columns.values()}
    if len(n) > 1:
        raise ValueError("table columns differ in length")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names)
    for row in zip(*columns.values()):
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (complex, np.complexfloating)):
        return format_complex(v)
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def _uncell(text):
    if text in ("true", "false"):
        return text == "true"
    if text.endswith("j"):
        return parse_complex(text)
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def parse_table(text: str) -> dict:
    rows = list(csv.reader(io.StringIO(text)))
    names = rows[0]
    cols = {name: [] for name in names}
    for row in rows[1:]:
        for name, cell in zip(names, row):
            cols[name].append(_uncell(cell))
    return cols


def to_jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return format_complex(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def format_report(report: dict) -> str:
    return json.dumps(to_jsonable(report), indent=2) + "\n"


def parse_report(text: str) -> dict:
    return json.loads(text)


def matrix_from_report(rows) -> np.ndarray:
    return np.array([[parse_complex(c) if isinstance(c, str) else c for c in row] for row in rows], dtype=complex)


def write_text(path, text: str):
    """Write via a temporary file so a failed run never leaves a partial file."""
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
