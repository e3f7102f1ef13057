"""Flatten a run's metrics stream into CSV or JSON."""

import csv
import io
import json
from pathlib import Path

from ts2c.errors import ParameterError
from ts2c.harness.run import read_metrics

BASE_COLUMNS = ("step", "eval_return", "success_rate", "train_cost_cum", "intervention_rate", "wall_seconds")
FORMATS = ("csv", "json")


def _cell(v):
    if isinstance(v, bool) or v is None:
        return "" if v is None else str(v).lower()
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def load_rows(run_dir):
    """Metrics records joined with wall-clock timing (kept in its own file)."""
    rows = read_metrics(run_dir)
    timing = Path(run_dir) / "timing.jsonl"
    walls = []
    if timing.is_file():
        walls = [json.loads(x).get("wall_seconds") for x in timing.read_text().splitlines() if x.strip()]
    for i, r in enumerate(rows):
        r["wall_seconds"] = walls[i] if i < len(walls) else None
    return rows


def columns(rows):
    extra = sorted({k for r in rows for k in r} - set(BASE_COLUMNS))
    return list(BASE_COLUMNS) + extra


def to_csv(rows) -> str:
    cols = columns(rows)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def to_json(rows) -> str:
    cols = columns(rows)
    return json.dumps([{c: r.get(c) for c in cols} for r in rows], indent=1) + "\n"


def export_run(run_dir, fmt="csv", out=None) -> Path:
    if fmt not in FORMATS:
        raise ParameterError(f"format must be one of {FORMATS}")
    rows = load_rows(run_dir)
    text = to_csv(rows) if fmt == "csv" else to_json(rows)
    out = Path(out) if out is not None else Path(run_dir) / f"metrics.{fmt}"
    out.write_text(text)
    return out
