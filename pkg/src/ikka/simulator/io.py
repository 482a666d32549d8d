"""Reading and writing run logs and metrics."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .core import LOG_COLUMNS, RunLog
from .metrics import RunMetrics

BOOL_COLUMNS = ("tracked", "occluded")


class LogSchemaError(ValueError):
    pass


def _cell(name: str, value) -> str:
    if name in BOOL_COLUMNS:
        return "1" if value else "0"
    if name == "active_tracker":
        return str(value)
    return f"{value:.6f}"


def format_log(log: RunLog) -> str:
    """Render a run log as CSV with six decimals and booleans as 0/1."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LOG_COLUMNS)
    for row in log.rows:
        w.writerow([_cell(name, v) for name, v in zip(LOG_COLUMNS, row)])
    return buf.getvalue()


def write_log(log: RunLog, path) -> None:
    Path(path).write_text(format_log(log))


def parse_log(text: str, required=LOG_COLUMNS) -> list:
    """Parse run-log CSV into a list of dicts keyed by column name.

    Only ``required`` columns must be present; a missing one raises
    :class:`LogSchemaError` naming it.
    """
    reader = csv.DictReader(io.StringIO(text))
    header = reader.fieldnames or []
    for name in required:
        if name not in header:
            raise LogSchemaError(f"missing column {name!r}")
    rows = []
    for lineno, raw in enumerate(reader, start=2):
        row = {}
        for name, value in raw.items():
            if name is None:
                raise LogSchemaError(f"line {lineno}: too many fields")
            if value is None:
                raise LogSchemaError(f"line {lineno}: missing value for {name!r}")
            try:
                if name in BOOL_COLUMNS:
                    if value not in ("0", "1"):
                        raise ValueError(value)
                    row[name] = value == "1"
                elif name == "active_tracker":
                    row[name] = value
                else:
                    row[name] = float(value)
            except ValueError:
                raise LogSchemaError(f"line {lineno}: bad value {value!r} in column {name!r}") from None
        rows.append(row)
    return rows


def read_log(path, required=LOG_COLUMNS) -> list:
    return parse_log(Path(path).read_text(), required)


def format_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_metrics(metrics: RunMetrics, path) -> None:
    Path(path).write_text(format_json(metrics.to_dict()))


def read_metrics(path) -> RunMetrics:
    try:
        return RunMetrics.from_dict(json.loads(Path(path).read_text()))
    except (json.JSONDecodeError, TypeError) as exc:
        raise ValueError(f"corrupt metrics file {path}: {exc}") from None
