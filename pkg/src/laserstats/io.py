"""CSV and JSON emission.

CSV output starts with ``#``-prefixed metadata lines, then a header row, then
data. Floats are written in shortest round-trip form (``repr``).
"""
from __future__ import annotations

import csv
import datetime
import json
import math
import sys
from contextlib import contextmanager

import numpy as np

from . import __version__

TRAJECTORY_HEADER = ("t_seconds", "N", "n")


def _plain(value):
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return None if math.isnan(value) or math.isinf(value) else value
    if hasattr(value, "value"):  # enums
        return value.value
    return value


def format_cell(value) -> str:
    value = _plain(value)
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (dict, list)):
        return json.dumps(value, separators=(",", ":"))
    return str(value)


def build_metadata(device=None, seed=None, timestamp=True, **extra) -> dict:
    meta = {"tool": f"laserstats {__version__}"}
    if device is not None:
        meta["device"] = device.to_dict()
    if seed is not None:
        meta["seed"] = seed
    meta.update(extra)
    if timestamp:
        meta["generated"] = datetime.datetime.now(datetime.timezone.utc).isoformat(
            timespec="seconds"
        )
    return meta


def dumps_json(obj) -> str:
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def flatten(record: dict, prefix: str = "") -> dict:
    out = {}
    for key, value in record.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(flatten(value, name + "."))
        else:
            out[name] = value
    return out


def write_table(stream, columns, rows, metadata=None, fmt="csv", failures=None):
    """Write rows (mappings keyed by column) as CSV or as a JSON envelope."""
    if fmt == "json":
        doc = {}
        if metadata is not None:
            doc["metadata"] = metadata
        doc["columns"] = list(columns)
        doc["rows"] = [{c: row[c] for c in columns} for row in rows]
        if failures:
            doc["failures"] = failures
        stream.write(dumps_json(doc))
        return
    if fmt != "csv":
        raise ValueError(f"unknown format {fmt!r}")
    if metadata is not None:
        for key, value in metadata.items():
            stream.write(f"# {key}: {json.dumps(_plain(value), separators=(',', ':'))}\n")
    for failure in failures or ():
        stream.write(f"# failed row: {json.dumps(_plain(failure), separators=(',', ':'))}\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(row[c]) for c in columns])


def write_record(stream, record: dict, metadata=None, fmt="json"):
    """Write one report record; CSV flattens nested keys with dots."""
    if fmt == "json":
        doc = dict(record)
        if metadata is not None:
            doc = {"metadata": metadata, **doc}
        stream.write(dumps_json(doc))
        return
    flat = flatten(record)
    write_table(stream, list(flat), [flat], metadata, "csv")


def write_trajectory_csv(stream, trajectory):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRAJECTORY_HEADER)
    for t, N, n in zip(trajectory.t, trajectory.N, trajectory.n):
        writer.writerow([format_cell(t), format_cell(N), format_cell(n)])


@contextmanager
def open_sink(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh
