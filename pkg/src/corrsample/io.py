"""JSON/CSV readers and writers.

Distribution JSON: ``{"n": 3, "probs": ["1/3", "1/3", "1/3"]}``.  String and
integer entries are exact rationals; JSON floats select the float path.
Subset JSON: ``{"n": 5, "set": [1, 3, 4]}`` with strictly increasing elements.
"""
from __future__ import annotations

import csv
import io
import json
from fractions import Fraction
from pathlib import Path
from typing import Any

from .core import DiscreteDistribution, format_rational, parse_rational
from .errors import InvalidInputError
from .harness import CSV_COLUMNS, SweepReport


def _loads(text: str, source: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None


def _object(doc: Any, keys: tuple, source: str) -> dict:
    if not isinstance(doc, dict):
        raise InvalidInputError(f"{source}: expected a JSON object")
    missing = [k for k in keys if k not in doc]
    if missing:
        raise InvalidInputError(f"{source}: missing key(s) {missing}")
    n = doc["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InvalidInputError(f"{source}: 'n' must be a positive integer")
    return doc


def parse_distribution(text: str, source: str = "<distribution>") -> DiscreteDistribution:
    doc = _object(_loads(text, source), ("n", "probs"), source)
    probs = doc["probs"]
    if not isinstance(probs, list) or len(probs) != doc["n"]:
        raise InvalidInputError(f"{source}: 'probs' must be a list of length n={doc['n']}")
    values = []
    for i, v in enumerate(probs):
        if isinstance(v, bool) or not isinstance(v, (int, float, str)):
            raise InvalidInputError(f"{source}: probs[{i}] is not a number")
        try:
            values.append(parse_rational(v) if isinstance(v, (int, str)) else v)
        except InvalidInputError as exc:
            raise InvalidInputError(f"{source}: probs[{i}]: {exc}") from None
    try:
        return DiscreteDistribution(values)
    except InvalidInputError as exc:
        raise InvalidInputError(f"{source}: {exc}") from None


def render_distribution(d: DiscreteDistribution) -> str:
    probs = [format_rational(v) if d.exact else v for v in d.probs]
    return json.dumps({"n": d.n, "probs": probs})


def parse_subset(text: str, source: str = "<subset>") -> tuple[frozenset, int]:
    doc = _object(_loads(text, source), ("n", "set"), source)
    n, elems = doc["n"], doc["set"]
    if not isinstance(elems, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in elems):
        raise InvalidInputError(f"{source}: 'set' must be a list of integers")
    for i, x in enumerate(elems):
        if not 1 <= x <= n:
            raise InvalidInputError(f"{source}: set[{i}] = {x} outside [1, {n}]")
        if i and x <= elems[i - 1]:
            raise InvalidInputError(f"{source}: set[{i}] = {x} breaks strictly increasing order")
    return frozenset(elems), n


def render_subset(s, n: int) -> str:
    return json.dumps({"n": n, "set": sorted(s)})


def load_distribution(path: str | Path) -> DiscreteDistribution:
    return parse_distribution(Path(path).read_text(), str(path))


def load_subset(path: str | Path) -> tuple[frozenset, int]:
    return parse_subset(Path(path).read_text(), str(path))


def dumps_json(doc: Any) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def render_sweep_csv(report: SweepReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in report.rows:
        w.writerow(row.csv_fields())
    return buf.getvalue()


def parse_sweep_csv(text: str, source: str = "<csv>") -> list[dict]:
    """Read a sweep CSV back into dicts of Fractions/floats/ints (blank cells become ``None``)."""
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise InvalidInputError(f"{source}:1: empty file") from None
    if tuple(header) != CSV_COLUMNS:
        raise InvalidInputError(f"{source}:1: expected header {','.join(CSV_COLUMNS)}")
    rows = []
    for lineno, rec in enumerate(reader, start=2):
        if len(rec) != len(CSV_COLUMNS):
            raise InvalidInputError(f"{source}:{lineno}: expected {len(CSV_COLUMNS)} fields, got {len(rec)}")
        row: dict[str, Any] = {}
        for col, cell in zip(CSV_COLUMNS, rec):
            try:
                if cell == "":
                    row[col] = None
                elif col in ("trials", "seed"):
                    row[col] = int(cell)
                elif col in ("empirical", "stderr"):
                    row[col] = float(cell)
                else:
                    row[col] = _number(cell)
            except (ValueError, InvalidInputError):
                raise InvalidInputError(f"{source}:{lineno}: bad value {cell!r} in column {col}") from None
        rows.append(row)
    return rows


def _number(cell: str) -> Fraction | float:
    # exact columns may hold floats when a float strategy filled them
    if any(c in cell for c in ".eE") and "/" not in cell:
        return float(cell)
    return parse_rational(cell)
