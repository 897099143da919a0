"""Tabular input handling: CSV loading into a typed cell grid."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Union

from .errors import TableError

# A cell is a finite number, a text value, or empty.
Cell = Union[float, str, None]


@dataclass(frozen=True)
class DataTable:
    columns: tuple[str, ...]
    rows: tuple[tuple[Cell, ...], ...]

    def __post_init__(self) -> None:
        if not self.columns:
            raise TableError("table needs at least one column")
        if len(set(self.columns)) != len(self.columns):
            raise TableError("column names must be unique")
        if not self.rows:
            raise TableError("table needs at least one row")
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise TableError(f"row {i} has {len(row)} cells, expected {width}")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def column(self, name: str) -> list[Cell]:
        idx = self.columns.index(name)
        return [row[idx] for row in self.rows]

    def numeric_columns(self) -> dict[str, list[float]]:
        """Columns whose cells are all numbers, in declaration order."""
        out: dict[str, list[float]] = {}
        for name in self.columns:
            values = self.column(name)
            if values and all(isinstance(v, float) for v in values):
                out[name] = list(values)  # type: ignore[arg-type]
        return out

    def head(self, n: int) -> list[tuple[Cell, ...]]:
        return list(self.rows[:n])

    @classmethod
    def from_csv(cls, path: str | Path) -> "DataTable":
        path = Path(path)
        if not path.is_file():
            raise TableError(f"data file not found: {path}")
        try:
            with path.open(newline="", encoding="utf-8") as fh:
                reader = csv.reader(fh)
                raw = [row for row in reader if row]
        except (OSError, csv.Error, UnicodeDecodeError) as exc:
            raise TableError(f"cannot read {path}: {exc}") from exc
        if len(raw) < 2:
            raise TableError(f"{path} needs a header row and at least one data row")
        header = tuple(name.strip() for name in raw[0])
        rows = tuple(tuple(_parse_cell(v) for v in row) for row in raw[1:])
        return cls(columns=header, rows=rows)


def _parse_cell(text: str) -> Cell:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return text
    # nan/inf render as text rather than poisoning correlations downstream
    return value if math.isfinite(value) else text


def render_rows(table: DataTable, limit: int) -> str:
    """Header plus the first ``limit`` rows as comma-joined lines."""
    lines = [", ".join(table.columns)]
    for row in table.head(limit):
        lines.append(", ".join(_cell_text(c) for c in row))
    return "\n".join(lines)


def _cell_text(cell: Cell) -> str:
    if cell is None:
        return ""
    if isinstance(cell, float):
        return f"{cell:g}"
    return cell
