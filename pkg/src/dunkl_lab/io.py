"""Serialisation helpers: canonical JSON, config hashes and CSV tables."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path

import numpy as np


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def canonical_json(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"))


def config_hash(config: dict) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON form."""
    return hashlib.sha256(canonical_json(config).encode()).hexdigest()[:16]


def dumps(obj) -> str:
    return json.dumps(_plain(obj), indent=2, sort_keys=False)


def write_text(path, text: str) -> None:
    p = Path(path)
    if p.parent and not p.parent.exists():
        p.parent.mkdir(parents=True, exist_ok=True)
    with open(p, "w", newline="") as fh:
        fh.write(text)


def csv_table(header, rows) -> str:
    """RFC-4180 style table: header row, CRLF line ends, ``.`` decimal separator."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def exit_batch_csv(batch) -> str:
    d = batch.points.shape[1]
    header = ["path_id", "tau"] + [f"x{j + 1}" for j in range(d)] + ["n_jumps", "capped", "status", "overshoot"]
    capped = batch.capped
    from .simulate import STATUS

    rows = (
        [batch.first_index + i, float(batch.tau[i]), *map(float, batch.points[i]), int(batch.n_jumps[i]),
         int(capped[i]), STATUS[int(batch.status[i])], float(batch.overshoot[i])]
        for i in range(len(batch))
    )
    return csv_table(header, rows)
