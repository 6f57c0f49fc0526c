"""Benchmark ingestion: CSV tables, column typing, value sampling, corpus profiles.

Benchmark directory contract::

    <root>/datalake/*.csv
    <root>/query/*.csv
    <root>/ground_truth.csv   # header: query_table,data_lake_table

Ground-truth cells carry file names including the ``.csv`` extension; internal
table ids are file stems.
"""

from __future__ import annotations

import csv
import enum
import random
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DegenerateInputError, EmptyCorpusError, FormatError, LoadError
from .util import parallel_map

# web-scraped benchmark tables can carry enormous cells
csv.field_size_limit(min(sys.maxsize, 2**31 - 1))

# Fraction of data rows that may be repaired (padded/trimmed) before the file
# is rejected as ragged.
RAGGED_ROW_TOLERANCE = 0.05

# A column is typed Int/Float/Other only if at least this percentage of its
# non-null values matches; precedence is Int -> Float -> datetime -> Str.
TYPE_MAJORITY_PERCENT = 95

GROUND_TRUTH_HEADER = ("query_table", "data_lake_table")


class ColumnType(enum.Enum):
    STR = "str"
    INT = "int"
    FLOAT = "float"
    OTHER = "other"


@dataclass(frozen=True)
class TableRef:
    """Identity of a table within a benchmark: file stem plus role."""

    id: str
    path: str
    role: str  # "query" | "lake"


@dataclass
class Column:
    name: str
    position: int
    values: list[str | None]
    dtype: ColumnType

    @property
    def null_count(self) -> int:
        return sum(1 for v in self.values if v is None)


@dataclass
class Table:
    id: str
    path: str
    columns: list[Column]

    @property
    def row_count(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    @property
    def column_count(self) -> int:
        return len(self.columns)

    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]


@dataclass(frozen=True)
class CorpusProfile:
    files: int
    total_rows: int
    total_cols: int
    avg_rows: int
    avg_cols: int
    missing_pct: float
    type_pct: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "files": self.files,
            "total_rows": self.total_rows,
            "total_cols": self.total_cols,
            "avg_shape": [self.avg_rows, self.avg_cols],
            "missing_pct": round(self.missing_pct, 2),
            "type_pct": {k: round(v, 2) for k, v in self.type_pct.items()},
        }


_INT_RE = re.compile(r"[+-]?\d+")
_FLOAT_RE = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
# Documented datetime shapes: ISO 8601 (date, optional time/offset), YYYY/MM/DD,
# MM-DD-YYYY. Anything else non-numeric stays Str.
_DATETIME_RES = (
    re.compile(
        r"\d{4}-\d{2}-\d{2}"
        r"(?:[T ]\d{2}:\d{2}(?::\d{2}(?:\.\d+)?)?(?:Z|[+-]\d{2}:?\d{2})?)?"
    ),
    re.compile(r"\d{4}/\d{2}/\d{2}"),
    re.compile(r"\d{2}-\d{2}-\d{4}"),
)


def _infer_dtype(values: list[str | None]) -> ColumnType:
    non_null = [v.strip() for v in values if v is not None]
    if not non_null:
        return ColumnType.STR
    n = len(non_null)
    ints = sum(1 for v in non_null if _INT_RE.fullmatch(v))
    if ints * 100 >= TYPE_MAJORITY_PERCENT * n:
        return ColumnType.INT
    floats = sum(1 for v in non_null if _FLOAT_RE.fullmatch(v))
    if floats * 100 >= TYPE_MAJORITY_PERCENT * n:
        return ColumnType.FLOAT
    dates = sum(1 for v in non_null if any(p.fullmatch(v) for p in _DATETIME_RES))
    if dates * 100 >= TYPE_MAJORITY_PERCENT * n:
        return ColumnType.OTHER
    return ColumnType.STR


def infer_column_type(col: Column) -> ColumnType:
    """Deterministic strict-majority typing over the column's non-null values."""
    return _infer_dtype(col.values)


def load_table(path: str | Path, max_rows: int | None = None) -> Table:
    """Parse one CSV into a Table; rows beyond ``max_rows`` are dropped.

    Cells that are empty or whitespace-only become nulls. Ragged rows are
    padded (or trimmed) to header width, but only up to 5% of data rows;
    beyond that the file is rejected.
    """
    p = Path(path)
    try:
        # utf-8-sig strips a leading BOM, which would otherwise pollute the
        # first header name and break byte-exact name matching
        fh = open(p, "r", encoding="utf-8-sig", errors="replace", newline="")
    except OSError as exc:
        raise LoadError(f"cannot read {p}: {exc}") from exc
    with fh:
        rows = [r for r in csv.reader(fh) if r]  # blank lines ignored
    if not rows:
        raise FormatError(f"{p}: empty file, no header row")
    header = rows[0]
    width = len(header)
    data = rows[1:]
    if max_rows is not None:
        if max_rows < 1:
            raise DegenerateInputError("max_rows must be >= 1")
        data = data[:max_rows]

    repaired = 0
    fixed: list[list[str]] = []
    for row in data:
        if len(row) != width:
            repaired += 1
            row = row[:width] + [""] * (width - len(row))
        fixed.append(row)
    if repaired > RAGGED_ROW_TOLERANCE * max(len(data), 1):
        raise FormatError(
            f"{p}: {repaired} ragged rows out of {len(data)} exceed the repair threshold"
        )

    columns = []
    for j, name in enumerate(header):
        values = [(cell if cell.strip() else None) for cell in (row[j] for row in fixed)]
        columns.append(Column(name=name, position=j, values=values, dtype=_infer_dtype(values)))
    return Table(id=p.stem, path=str(p), columns=columns)


def sample_column_values(col: Column, n: int, seed: int) -> list[str]:
    """Up to ``n`` distinct non-null values, sampled without replacement under ``seed``."""
    if n < 1:
        raise DegenerateInputError("sample size must be >= 1")
    distinct = list(dict.fromkeys(v for v in col.values if v is not None))
    if len(distinct) <= n:
        return distinct
    return random.Random(seed).sample(distinct, n)


def profile_corpus(tables: list[Table]) -> CorpusProfile:
    """Aggregate shape, missingness, and column-type share over a table set."""
    if not tables:
        raise EmptyCorpusError("cannot profile an empty corpus")
    files = len(tables)
    total_rows = sum(t.row_count for t in tables)
    total_cols = sum(t.column_count for t in tables)
    cells = sum(t.row_count * t.column_count for t in tables)
    nulls = sum(c.null_count for t in tables for c in t.columns)
    type_counts = {ct: 0 for ct in ColumnType}
    for t in tables:
        for c in t.columns:
            type_counts[c.dtype] += 1
    type_pct = {
        ct.value: (100.0 * type_counts[ct] / total_cols if total_cols else 0.0)
        for ct in ColumnType
    }
    return CorpusProfile(
        files=files,
        total_rows=total_rows,
        total_cols=total_cols,
        avg_rows=round(total_rows / files),
        avg_cols=round(total_cols / files),
        missing_pct=100.0 * nulls / cells if cells else 0.0,
        type_pct=type_pct,
    )


@dataclass
class Benchmark:
    root: Path
    queries: list[Table]
    lake: list[Table]
    ground_truth: dict[str, set[str]]  # query stem -> candidate stems
    refs: list[TableRef] = field(default_factory=list)

    def query_by_id(self) -> dict[str, Table]:
        return {t.id: t for t in self.queries}

    def lake_by_id(self) -> dict[str, Table]:
        return {t.id: t for t in self.lake}


def _stem(file_name: str) -> str:
    return Path(file_name).stem


def read_ground_truth(path: str | Path) -> dict[str, set[str]]:
    """Read the two-column pair file into a query -> candidates mapping (stems)."""
    p = Path(path)
    if not p.exists():
        raise FormatError(f"missing ground truth file: {p}")
    with open(p, "r", encoding="utf-8", errors="replace", newline="") as fh:
        reader = csv.reader(fh)
        rows = [r for r in reader if r]
    if not rows or tuple(rows[0]) != GROUND_TRUTH_HEADER:
        raise FormatError(
            f"{p}: header must be exactly {','.join(GROUND_TRUTH_HEADER)}"
        )
    gt: dict[str, set[str]] = {}
    for r in rows[1:]:
        if len(r) != 2:
            raise FormatError(f"{p}: ground truth rows must have exactly 2 fields, got {r}")
        gt.setdefault(_stem(r[0]), set()).add(_stem(r[1]))
    return gt


def load_benchmark(
    root: str | Path, max_rows: int | None = None, workers: int = 1
) -> Benchmark:
    """Load a benchmark directory into memory. Tables are immutable after load."""
    root = Path(root)
    lake_dir = root / "datalake"
    query_dir = root / "query"
    if not lake_dir.is_dir() or not query_dir.is_dir():
        raise FormatError(f"{root}: expected datalake/ and query/ subdirectories")
    lake_paths = sorted(lake_dir.glob("*.csv"))
    query_paths = sorted(query_dir.glob("*.csv"))
    lake = parallel_map(lambda p: load_table(p, max_rows), lake_paths, workers)
    queries = parallel_map(lambda p: load_table(p, max_rows), query_paths, workers)
    gt = read_ground_truth(root / "ground_truth.csv")
    refs = [TableRef(t.id, t.path, "lake") for t in lake] + [
        TableRef(t.id, t.path, "query") for t in queries
    ]
    return Benchmark(root=root, queries=queries, lake=lake, ground_truth=gt, refs=refs)
