# results.py
from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from utils import format_cell, parse_cell

logger = logging.getLogger(__name__)


# =========================
# Models
# =========================

@dataclass(frozen=True)
class CurveRow:
    """
    One record of tabular output: ordered (column, value) pairs.

    Values are ints, floats (inf allowed), or None for the NA sentinel.
    """

    cells: Tuple[Tuple[str, object], ...]

    @classmethod
    def of(cls, **columns) -> "CurveRow":
        return cls(tuple(columns.items()))

    @classmethod
    def from_pairs(cls, pairs: Iterable[Tuple[str, object]]) -> "CurveRow":
        return cls(tuple(pairs))

    @property
    def columns(self) -> Tuple[str, ...]:
        return tuple(name for name, _ in self.cells)

    def get(self, name: str, default=None):
        for key, value in self.cells:
            if key == name:
                return value
        return default

    def as_dict(self) -> Dict[str, object]:
        return dict(self.cells)


# =========================
# CSV text
# =========================

def _header(rows: Sequence[CurveRow]) -> Tuple[str, ...]:
    if not rows:
        raise ValueError("no rows to write")
    header = rows[0].columns
    for i, row in enumerate(rows[1:], start=2):
        if row.columns != header:
            raise ValueError(f"row {i} has columns {row.columns}, expected {header}")
    return header


def to_csv_text(rows: Sequence[CurveRow]) -> str:
    """Header plus one line per row; 12 significant digits, NA for missing values."""
    header = _header(rows)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(value) for _, value in row.cells])
    return buf.getvalue()


def parse_csv_text(text: str) -> List[CurveRow]:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ValueError("empty CSV input")

    rows: List[CurveRow] = []
    for lineno, record in enumerate(reader, start=2):
        if not record:
            continue
        if len(record) != len(header):
            raise ValueError(f"line {lineno}: expected {len(header)} fields, got {len(record)}")
        rows.append(CurveRow.from_pairs(zip(header, (parse_cell(cell) for cell in record))))
    return rows


# =========================
# Files
# =========================

def save_rows(rows: Sequence[CurveRow], path: Union[str, Path]) -> Path:
    return save_text(to_csv_text(rows), path)


def save_text(text: str, path: Union[str, Path]) -> Path:
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    # write temp then replace
    tmp_path = path.with_suffix(path.suffix + ".tmp")
    with tmp_path.open("w", encoding="utf-8", newline="") as f:
        f.write(text)
    tmp_path.replace(path)
    logger.info(f"wrote {path}")
    return path


def load_rows(path: Union[str, Path]) -> List[CurveRow]:
    return parse_csv_text(Path(path).read_text(encoding="utf-8"))


def column(rows: Sequence[CurveRow], name: str) -> List[Optional[object]]:
    return [row.get(name) for row in rows]
