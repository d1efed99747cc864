"""Deterministic CSV and JSON writers.

CSV numbers use 17 significant digits; JSON numbers use Python's shortest
round-trip representation.  Non-finite floats become the strings ``"inf"``,
``"-inf"`` and ``"nan"`` so that every JSON file is strict JSON.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path

import numpy as np

from .store import fmt


def plain(obj):
    """Convert numpy scalars/arrays, tuples and dataclasses into JSON-ready values."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    if isinstance(obj, complex):
        return {"re": plain(obj.real), "im": plain(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def json_text(obj) -> str:
    return json.dumps(plain(obj), indent=2, allow_nan=False) + "\n"


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    return "" if v is None else str(v)


def write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return path


# ----------------------------------------------------------------------------
# spectrum exports


def spectrum_csv(spec) -> str:
    return csv_text(("lambda", "a", "n_contributors"),
                    ((ln.lam, ln.a, ln.n_contributors) for ln in spec.lines))


def spectrum_document(spec, config_hash=None) -> dict:
    return {
        "config_hash": config_hash,
        "x_max": spec.x_max,
        "group_tol": spec.group_tol,
        "n_lines": len(spec),
        "n_rays": len(spec.rays),
        "warnings": list(spec.warnings),
        "lines": [{"lambda": ln.lam, "a": ln.a,
                   "contributors": [{"word": c.word, "repetition": c.repetition, "tau": c.tau, "term": c.term}
                                    for c in ln.contributors]}
                  for ln in spec.lines],
    }


def intervals_csv(rows) -> str:
    header = ("b", "k_center", "p", "q", "lo", "hi", "left_gap", "right_gap", "block_sum",
              "label", "witness_lo", "witness_hi", "triangle_ok")
    return csv_text(header, rows)
