"""Bit-stable table serialization (CSV and JSON).

Numbers are serialized with 9 significant digits, metadata rides on '#'
prefixed lines (CSV) or a metadata object (JSON), line endings are LF, and
identical inputs always produce byte-identical files.
"""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, List, Optional, Sequence, Tuple


def fmt_num(x: float) -> str:
    """9 significant digits; nan stays literal for degenerate cells."""
    return format(float(x), ".9g")


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return fmt_num(value)
    if isinstance(value, int):
        return str(value)
    return str(value)


@dataclass
class Table:
    columns: Tuple[str, ...]
    rows: List[Tuple[Any, ...]]
    metadata: List[Tuple[str, Any]] = field(default_factory=list)

    def add_meta(self, key: str, value: Any) -> None:
        self.metadata.append((key, value))


def render_csv(table: Table) -> str:
    lines = [f"# {key}={_cell(value)}" for key, value in table.metadata]
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(_cell(v) for v in row))
    return "\n".join(lines) + "\n"


def _json_value(value: Any) -> Any:
    if isinstance(value, bool):
        return value
    if isinstance(value, float):
        if math.isnan(value):
            return None
        return float(fmt_num(value))
    return value


def render_json(table: Table) -> str:
    obj = {
        "metadata": {key: _json_value(v) for key, v in table.metadata},
        "columns": list(table.columns),
        "rows": [[_json_value(v) for v in row] for row in table.rows],
    }
    return json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n"


def write_table(table: Table, format: str = "csv", destination: Optional[str] = None) -> None:
    """Serialize to a path or stdout. Raises OSError on unwritable destinations."""
    if not table.rows:
        raise ValueError("refusing to write an empty table")
    text = render_csv(table) if format == "csv" else render_json(table)
    if destination is None or destination == "-":
        sys.stdout.write(text)
    else:
        with open(destination, "w", newline="\n") as fh:
            fh.write(text)
