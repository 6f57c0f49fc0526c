"""Shared fixtures: in-memory tables and on-disk benchmark builders."""

from __future__ import annotations

import csv
from pathlib import Path

import pytest

from tuslab.corpus import Column, Table, _infer_dtype


def build_table(table_id: str, header: list[str], rows: list[list[str | None]]) -> Table:
    """Assemble a Table directly, mirroring what load_table would produce."""
    columns = []
    for j, name in enumerate(header):
        values = [
            (None if row[j] is None or str(row[j]).strip() == "" else str(row[j]))
            for row in rows
        ]
        columns.append(Column(name=name, position=j, values=values, dtype=_infer_dtype(values)))
    return Table(id=table_id, path=f"<memory:{table_id}>", columns=columns)


def write_csv(path: Path, header: list[str], rows: list[list[str]]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_benchmark(
    root: Path,
    lake: dict[str, tuple[list[str], list[list[str]]]],
    queries: dict[str, tuple[list[str], list[list[str]]]],
    gt_pairs: list[tuple[str, str]],
) -> Path:
    """Lay out datalake/, query/ and ground_truth.csv. Names are file names with .csv."""
    for name, (header, rows) in lake.items():
        write_csv(root / "datalake" / name, header, rows)
    for name, (header, rows) in queries.items():
        write_csv(root / "query" / name, header, rows)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / "ground_truth.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["query_table", "data_lake_table"])
        w.writerows(gt_pairs)
    return root


@pytest.fixture
def tiny_benchmark(tmp_path: Path) -> Path:
    """Three lake tables, two queries; q1 matches a and b, q2 matches c."""
    header = ["city", "population"]
    return write_benchmark(
        tmp_path / "bench",
        lake={
            "a.csv": (header, [["Paris", "100"], ["Lyon", "200"]]),
            "b.csv": (header, [["Paris", "150"], ["Nice", "50"]]),
            "c.csv": (["animal", "legs"], [["cat", "4"], ["hen", "2"]]),
        },
        queries={
            "q1.csv": (header, [["Paris", "100"]]),
            "q2.csv": (["animal", "legs"], [["dog", "4"]]),
        },
        gt_pairs=[("q1.csv", "a.csv"), ("q1.csv", "b.csv"), ("q2.csv", "c.csv")],
    )
