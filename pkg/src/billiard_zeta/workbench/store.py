"""Orbit database persistence as JSON lines.

The first line is a header (format tag, disks, ``m_max``, solver tolerance,
record count, optional config hash); each further line is one solved class.
Floats are written with 17 significant digits, which round-trips binary64
exactly.  Loading rebuilds every orbit from its stored angles and refuses
records whose length, residual or monodromy disagree with the recomputation.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..database import OrbitDatabase, OrbitRecord
from ..errors import BilliardZetaError, IntegrityError, ParseError
from ..geometry import Configuration, Disk
from ..linearization import poincare_map
from ..orbits import DEFAULT_TOL, orbit_from_angles, reflection_residual
from ..symbolic import Word, enumerate_words

FORMAT_TAG = "billiard-zeta-orbits"
FORMAT_VERSION = 1
#: relative agreement required between stored and recomputed scalars
LOAD_RTOL = 1e-12


def fmt(x: float) -> str:
    return format(float(x), ".17g")


def _array(values) -> str:
    return "[" + ", ".join(fmt(v) for v in values) + "]"


def header_line(config: Configuration, m_max: int, count: int, tol: float, config_hash=None) -> str:
    disks = ", ".join(_array((*d.center, d.radius)) for d in config.disks)
    h = json.dumps(config_hash)
    return (f'{{"format": "{FORMAT_TAG}", "version": {FORMAT_VERSION}, "config_hash": {h}, '
            f'"m_max": {int(m_max)}, "tol": {fmt(tol)}, "count": {int(count)}, "disks": [{disks}]}}')


def record_line(rec: OrbitRecord) -> str:
    o, mono = rec
    return (f'{{"word": "{o.word}", "m": {o.m}, "tau": {fmt(o.tau)}, "tau_primitive": {fmt(o.tau_primitive)}, '
            f'"angles": {_array(o.angles)}, "trace": {fmt(mono.trace)}, '
            f'"det_id_minus": {fmt(mono.det_id_minus)}, "residual": {fmt(o.residual)}, '
            f'"iterations": {int(o.iterations)}}}')


def save_orbits(db: OrbitDatabase, path, tol: float = DEFAULT_TOL, config_hash=None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [header_line(db.config, db.m_max, len(db.records), tol, config_hash)]
    lines.extend(record_line(rec) for rec in db.records)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def read_header(path) -> dict:
    with Path(path).open(encoding="utf-8") as fh:
        first = fh.readline()
    return _parse_header(first)


def _parse_header(line: str) -> dict:
    try:
        head = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed header: {exc.msg}", 1) from None
    if not isinstance(head, dict) or head.get("format") != FORMAT_TAG:
        raise ParseError("not an orbit database file", 1)
    if head.get("version") != FORMAT_VERSION:
        raise ParseError(f"unsupported version {head.get('version')!r}", 1)
    for key in ("m_max", "tol", "count", "disks"):
        if key not in head:
            raise ParseError(f"header lacks {key!r}", 1)
    return head


_FIELDS = ("word", "m", "tau", "tau_primitive", "angles", "trace", "det_id_minus", "residual", "iterations")


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= LOAD_RTOL * max(abs(a), abs(b), 1.0)


def _check_record(config, row: dict, lineno: int, residual_tol: float) -> OrbitRecord:
    try:
        word = Word.parse(row["word"])
    except (BilliardZetaError, ValueError) as exc:
        raise ParseError(f"bad word {row['word']!r}: {exc}", lineno) from None
    if str(word) != row["word"]:
        raise IntegrityError(f"line {lineno}: word {row['word']!r} is not canonical")
    if row["m"] != word.m or len(row["angles"]) != word.m:
        raise IntegrityError(f"line {lineno}: length fields disagree with word {word}")
    try:
        orbit = orbit_from_angles(config, word, row["angles"], residual=float(row["residual"]),
                                  iterations=int(row["iterations"]))
        mono = poincare_map(config, orbit)
    except BilliardZetaError as exc:
        raise IntegrityError(f"line {lineno}: {exc}") from exc
    grad = float(np.linalg.norm(reflection_residual(config, orbit.points, word.symbols)))
    if grad > residual_tol:
        raise IntegrityError(f"line {lineno}: stored angles are not a billiard ray (residual {grad:.3e})")
    for name, got in (("tau", orbit.tau), ("tau_primitive", orbit.tau_primitive),
                      ("trace", mono.trace), ("det_id_minus", mono.det_id_minus)):
        if not _close(float(row[name]), got):
            raise IntegrityError(f"line {lineno}: stored {name} = {row[name]!r} but recomputed {got!r}")
    return OrbitRecord(orbit, mono)


def load_orbits(path, config: Configuration | None = None, verify: bool = True) -> OrbitDatabase:
    """Read and revalidate an orbit database.

    Raises :class:`ParseError` (with the line number) on malformed input and
    :class:`IntegrityError` when a record contradicts its recomputation, when
    the disks differ from ``config`` or when classes are missing.
    """
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise ParseError("empty file", 1)
    head = _parse_header(lines[0])
    try:
        stored = Configuration(tuple(Disk((cx, cy), r) for cx, cy, r in head["disks"]))
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad disk list: {exc}", 1) from None
    if config is not None and stored.disks != config.disks:
        raise IntegrityError("stored disks differ from the requested configuration")
    config = stored
    residual_tol = max(1e-10, 10.0 * float(head["tol"]))
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"malformed record: {exc.msg}", lineno) from None
        if not isinstance(row, dict) or any(k not in row for k in _FIELDS):
            raise ParseError("record lacks required fields", lineno)
        if not all(isinstance(row[k], (int, float)) and math.isfinite(row[k])
                   for k in _FIELDS if k not in ("word", "angles")):
            raise ParseError("non-numeric record field", lineno)
        if verify:
            records.append(_check_record(config, row, lineno, residual_tol))
        else:
            orbit = orbit_from_angles(config, row["word"], row["angles"], float(row["residual"]),
                                      int(row["iterations"]))
            records.append(OrbitRecord(orbit, poincare_map(config, orbit)))
    if len(records) != head["count"]:
        raise ParseError(f"expected {head['count']} records, found {len(records)}", len(lines) + 1)
    expected = enumerate_words(config.r, int(head["m_max"]))
    if [str(w) for w in expected] != [str(rec.orbit.word) for rec in records]:
        raise IntegrityError("records do not match the admissible classes up to m_max")
    return OrbitDatabase(config, int(head["m_max"]), tuple(records))
