"""CSV output with a commented configuration header and content hash.

Files look like::

    # config: {"family": "zero", ...}
    # sha256: <hash of the data lines below the header>
    lambda,v_plus_closed,...
    0.0625,0.25,...

Reals are written with 17 significant digits, lines end with LF, and the
same inputs always give the same bytes.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from pathlib import Path
from typing import Iterable, Sequence


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float) or hasattr(value, "dtype"):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    text = str(value)
    if any(c in text for c in ',"\n'):
        text = '"' + text.replace('"', '""') + '"'
    return text


def config_json(config: dict) -> str:
    return json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)


def config_hash(config: dict) -> str:
    return hashlib.sha256(config_json(config).encode()).hexdigest()


def render(config: dict, columns: Sequence[str], rows: Iterable[Sequence],
           notes: Sequence[str] = ()) -> str:
    body = io.StringIO()
    body.write(",".join(columns) + "\n")
    for row in rows:
        body.write(",".join(fmt(v) for v in row) + "\n")
    data = body.getvalue()
    head = [f"# config: {config_json(config)}",
            f"# sha256: {hashlib.sha256(data.encode()).hexdigest()}"]
    head += [f"# note: {n}" for n in notes]
    return "\n".join(head) + "\n" + data


def write_table(path, config: dict, columns, rows, notes=()) -> str:
    text = render(config, columns, rows, notes)
    if path is not None:
        with open(Path(path), "w", newline="\n", encoding="utf-8") as fh:
            fh.write(text)
    return text


def read_table(path) -> tuple[list[str], list[str], list[list[str]]]:
    """Header comment lines, column names and raw cells of a table."""
    comments, lines = [], []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        (comments if line.startswith("#") else lines).append(line)
    columns = lines[0].split(",")
    return comments, columns, [ln.split(",") for ln in lines[1:]]
