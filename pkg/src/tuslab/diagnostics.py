"""Schema/value overlap between ground-truth pairs, plus distribution reports.

Both coefficients are Szymkiewicz-Simpson: |A n B| / min(|A|, |B|), which is
1.0 whenever one set contains the other. Column names are compared byte-exact
by default; value overlap pools distinct cell values per column type.
"""

from __future__ import annotations

import csv
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Benchmark, ColumnType, Table
from .errors import DegenerateInputError, EmptySelectionError
from .util import parallel_map

# Distinct-value pools are capped per (table, type) to bound memory on large
# lakes; the cap and how often it fired are echoed into the report.
VALUE_CAP = 100_000
VALUE_CAP_SEED = 0

OVERLAP_CSV_HEADER = [
    "query",
    "candidate",
    "name_overlap",
    "str_overlap",
    "int_overlap",
    "float_overlap",
    "other_overlap",
]


@dataclass(frozen=True)
class OverlapRecord:
    query: str
    candidate: str
    name_overlap: float
    value_overlap: dict[ColumnType, float | None]


@dataclass(frozen=True)
class OverlapDistribution:
    bucket_edges: list[int]  # [0, 10, ..., 100]
    bucket_pct: list[float]  # one entry per decile bucket
    mean: float
    count: int
    absent: int

    def to_dict(self) -> dict:
        return {
            "bucket_edges": self.bucket_edges,
            "bucket_pct": [round(p, 4) for p in self.bucket_pct],
            "mean": round(self.mean, 6),
            "count": self.count,
            "absent": self.absent,
        }


def _name_set(table: Table, normalize: bool) -> set[str]:
    if normalize:
        return {c.name.strip().lower() for c in table.columns}
    return {c.name for c in table.columns}


def column_name_overlap(q: Table, c: Table, normalize_names: bool = False) -> float:
    """Overlap coefficient over distinct column names (byte-exact by default)."""
    if not q.columns or not c.columns:
        raise DegenerateInputError("both tables need at least one column")
    names_q = _name_set(q, normalize_names)
    names_c = _name_set(c, normalize_names)
    return len(names_q & names_c) / min(len(names_q), len(names_c))


def pooled_values(
    table: Table,
    dtype: ColumnType,
    token_mode: bool = False,
    cap: int = VALUE_CAP,
) -> tuple[set[str], bool]:
    """Distinct cell values (or whitespace tokens) of the given type, capped.

    Returns the pool and whether the cap fired.
    """
    pool: set[str] = set()
    for col in table.columns:
        if col.dtype is not dtype:
            continue
        for v in col.values:
            if v is None:
                continue
            if token_mode:
                pool.update(v.split())
            else:
                pool.add(v)
    if len(pool) > cap:
        sampled = random.Random(VALUE_CAP_SEED).sample(sorted(pool), cap)
        return set(sampled), True
    return pool, False


def value_overlap(
    q: Table,
    c: Table,
    dtype: ColumnType,
    token_mode: bool = False,
    cap: int = VALUE_CAP,
) -> float | None:
    """Overlap coefficient over pooled type-``dtype`` values; None if either pool is empty."""
    vq, _ = pooled_values(q, dtype, token_mode, cap)
    vc, _ = pooled_values(c, dtype, token_mode, cap)
    if not vq or not vc:
        return None
    return len(vq & vc) / min(len(vq), len(vc))


def overlap_distribution(records: list[OverlapRecord], field: str) -> OverlapDistribution:
    """Decile histogram over one coefficient; absent values are counted separately.

    ``field`` is ``name`` or one of the ColumnType values (str/int/float/other).
    """
    values: list[float] = []
    absent = 0
    for r in records:
        if field == "name":
            v: float | None = r.name_overlap
        else:
            v = r.value_overlap.get(ColumnType(field))
        if v is None:
            absent += 1
        else:
            values.append(v)
    if not values:
        raise EmptySelectionError(f"no present values for field {field!r}")
    buckets = [0] * 10
    for v in values:
        buckets[min(int(v * 10), 9)] += 1
    n = len(values)
    return OverlapDistribution(
        bucket_edges=list(range(0, 101, 10)),
        bucket_pct=[100.0 * b / n for b in buckets],
        mean=sum(values) / n,
        count=n,
        absent=absent,
    )


def compute_overlap_records(
    benchmark: Benchmark,
    normalize_names: bool = False,
    token_mode: bool = False,
    cap: int = VALUE_CAP,
    workers: int = 1,
) -> tuple[list[OverlapRecord], dict]:
    """One record per resolvable ground-truth pair, sorted by (query, candidate).

    Value pools are computed once per (table, type) and shared across pairs.
    Returns the records plus run stats (skipped pairs, cap events).
    """
    queries = benchmark.query_by_id()
    lake = benchmark.lake_by_id()
    pairs = sorted(
        (q, c) for q, cands in benchmark.ground_truth.items() for c in cands
    )
    resolvable = [(q, c) for q, c in pairs if q in queries and c in lake]

    pools: dict[tuple[str, str, ColumnType], set[str]] = {}
    capped = 0
    for role, table in [("q", t) for t in benchmark.queries] + [
        ("c", t) for t in benchmark.lake
    ]:
        for dtype in ColumnType:
            pool, hit_cap = pooled_values(table, dtype, token_mode, cap)
            pools[(role, table.id, dtype)] = pool
            capped += int(hit_cap)

    def one(pair: tuple[str, str]) -> OverlapRecord:
        q_id, c_id = pair
        q, c = queries[q_id], lake[c_id]
        vo: dict[ColumnType, float | None] = {}
        for dtype in ColumnType:
            vq = pools[("q", q_id, dtype)]
            vc = pools[("c", c_id, dtype)]
            vo[dtype] = (
                len(vq & vc) / min(len(vq), len(vc)) if vq and vc else None
            )
        return OverlapRecord(
            query=q_id,
            candidate=c_id,
            name_overlap=column_name_overlap(q, c, normalize_names),
            value_overlap=vo,
        )

    records = parallel_map(one, resolvable, workers)
    stats = {
        "pairs_total": len(pairs),
        "pairs_skipped_unresolvable": len(pairs) - len(resolvable),
        "value_cap": cap,
        "capped_pools": capped,
        "normalize_names": normalize_names,
        "token_mode": token_mode,
    }
    return records, stats


def write_overlap_csv(records: list[OverlapRecord], path: str | Path) -> None:
    """CSV emission: one row per record, empty field = absent coefficient."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(OVERLAP_CSV_HEADER)
        for r in records:
            row = [r.query, r.candidate, f"{r.name_overlap:.6f}"]
            for dtype in (ColumnType.STR, ColumnType.INT, ColumnType.FLOAT, ColumnType.OTHER):
                v = r.value_overlap.get(dtype)
                row.append("" if v is None else f"{v:.6f}")
            w.writerow(row)


def overlap_report(records: list[OverlapRecord], stats: dict) -> dict:
    """JSON-ready distribution report for every field that has present values."""
    report: dict = {"stats": stats, "distributions": {}}
    for field in ["name", "str", "int", "float", "other"]:
        try:
            report["distributions"][field] = overlap_distribution(records, field).to_dict()
        except EmptySelectionError:
            report["distributions"][field] = None
    return report
