"""Result persistence: CSV with a config-hash comment line, JSON with sorted keys."""

from __future__ import annotations

import csv
import io
import json
import sys

import numpy as np

from .discretization.operator import atomic_write_bytes


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def format_csv(header: list[str], rows: list[list], config_hash: str | None = None) -> str:
    buf = io.StringIO()
    if config_hash is not None:
        buf.write(f"# config-hash: {config_hash}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def read_csv(text: str) -> tuple[dict, list[str], list[list[str]]]:
    """(comment key/values, header, rows) of a CSV written by format_csv."""
    comments, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, val = line[1:].partition(":")
            comments[key.strip()] = val.strip()
        elif line:
            body.append(line)
    rows = list(csv.reader(body))
    return comments, rows[0], rows[1:]


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


def format_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def emit(text: str, path: str | None):
    """Write atomically to ``path``, or to stdout when no path is given."""
    if path is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        atomic_write_bytes(path, text.encode())
