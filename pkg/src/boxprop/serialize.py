"""Text and JSON renderings of boxes, pavings and statistics.

Every bound is written as a string (``"inf"``/``"-inf"`` for infinities)
so JSON output stays standard and round-trips bit-exactly.
"""

from __future__ import annotations

import json
from importlib import resources
from typing import Iterable, Mapping

from .interval import EMPTY, Interval, format_float, parse_float_token
from .paving import BOUNDARY, INNER, Paving

__all__ = [
    "bounds",
    "box_record",
    "paving_records",
    "paving_from_records",
    "paving_table",
    "box_row",
    "interval_from",
    "load_schema",
    "dumps",
]


def bounds(d: Interval, style: str = "repr") -> list[str] | None:
    if d.is_empty:
        return None
    return [format_float(d.lo, style), format_float(d.hi, style)]


def interval_from(pair) -> Interval:
    if pair is None:
        return EMPTY
    return Interval(parse_float_token(pair[0]), parse_float_token(pair[1]))


def box_record(status: str, box: Mapping[str, Interval], style: str = "repr") -> dict:
    return {"status": status, "domains": {n: bounds(d, style) for n, d in box.items()}}


def paving_records(p: Paving, style: str = "repr") -> list[dict]:
    return [box_record(status, box, style) for status, box in p.boxes()]


def paving_from_records(variables: list[str], epsilon: float, records: Iterable[dict]) -> Paving:
    p = Paving(list(variables), epsilon)
    for r in records:
        box = {n: interval_from(b) for n, b in r["domains"].items()}
        if r["status"] == INNER:
            p.inner.append(box)
        elif r["status"] == BOUNDARY:
            p.boundary.append(box)
        else:
            raise ValueError(f"unknown box status {r['status']!r}")
    return p


def box_row(status: str, box: Mapping[str, Interval], style: str = "repr") -> str:
    cells = [f"{status:<8}"]
    cells += [f"{n}={d.to_text(style)}" for n, d in box.items()]
    return "  ".join(cells)


def paving_table(p: Paving, style: str = "repr") -> str:
    return "\n".join(box_row(s, b, style) for s, b in p.boxes())


def load_schema() -> dict:
    """JSON schema of the CLI's ``--format json`` output."""
    text = resources.files("boxprop").joinpath("output.schema.json").read_text()
    return json.loads(text)


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=False)
