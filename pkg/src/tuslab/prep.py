"""Benchmark normalization and synthetic partition-based benchmark generation.

Normalization applies, in order: prune ground-truth rows pointing at missing
files, optionally drop lake tables no ground-truth row references, add missing
self-candidacy rows (only for queries whose file also exists in the lake),
optionally truncate tables to a row cap. The whole pass is idempotent: running
it twice reports all zeros the second time.

Generation splits each seed table into an h x v grid of fragments (contiguous
row ranges x contiguous column windows, adjacent windows sharing one column so
fragments stay matchable) and labels all same-seed fragments unionable with
the seed's query fragment.
"""

from __future__ import annotations

import csv
import io
import logging
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import GROUND_TRUTH_HEADER, Column, Table, _infer_dtype
from .errors import DegenerateInputError, FormatError
from .util import atomic_write_text, parallel_map, stable_json_dumps

logger = logging.getLogger(__name__)


@dataclass
class PrepReport:
    gt_pruned: int = 0
    unreferenced_removed: int = 0
    self_rows_added: int = 0
    tables_truncated: int = 0
    queries_sampled_out: int = 0  # query files removed by sampling

    def to_dict(self) -> dict:
        return {
            "gt_pruned": self.gt_pruned,
            "unreferenced_removed": self.unreferenced_removed,
            "self_rows_added": self.self_rows_added,
            "tables_truncated": self.tables_truncated,
            "queries_sampled_out": self.queries_sampled_out,
        }


@dataclass(frozen=True)
class GeneratorConfig:
    horizontal: int
    vertical: int
    rename_probability: float = 0.0
    perturb_probability: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.horizontal < 1 or self.vertical < 1:
            raise ValueError("horizontal and vertical partition counts must be >= 1")
        for p in (self.rename_probability, self.perturb_probability):
            if not (0.0 <= p <= 1.0):
                raise ValueError("probabilities must lie in [0, 1]")


def sample_queries(ids: list[str], n: int, seed: int) -> list[str]:
    """Uniform sample without replacement; deterministic under seed; sorted."""
    if n > len(ids):
        raise DegenerateInputError(f"cannot sample {n} from {len(ids)} query ids")
    return sorted(random.Random(seed).sample(sorted(ids), n))


def _read_gt_rows(path: Path) -> list[tuple[str, str]]:
    if not path.exists():
        raise FormatError(f"missing ground truth file: {path}")
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as fh:
        rows = [r for r in csv.reader(fh) if r]
    if not rows or tuple(rows[0]) != GROUND_TRUTH_HEADER:
        raise FormatError(f"{path}: header must be exactly {','.join(GROUND_TRUTH_HEADER)}")
    return [(r[0], r[1]) for r in rows[1:]]


def _write_gt_rows(path: Path, rows: list[tuple[str, str]]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(GROUND_TRUTH_HEADER)
    w.writerows(sorted(set(rows)))
    atomic_write_text(path, buf.getvalue())


def _truncate_csv(path: Path, cap: int) -> bool:
    """Keep the header plus the first ``cap`` data rows; True if rewritten."""
    with open(path, "r", encoding="utf-8", errors="replace", newline="") as fh:
        rows = list(csv.reader(fh))
    if len(rows) - 1 <= cap:
        return False
    tmp = path.with_name(path.name + ".staged")
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerows(rows[: cap + 1])
    tmp.replace(path)
    return True


def normalize_benchmark(
    root: str | Path,
    drop_unreferenced: bool = False,
    self_candidacy: bool = True,
    row_cap: int | None = None,
    sample_n: int | None = None,
    sample_seed: int = 0,
    workers: int = 1,
) -> PrepReport:
    """Normalize a benchmark directory in place; see module docstring for order."""
    root = Path(root)
    lake_dir = root / "datalake"
    query_dir = root / "query"
    if not lake_dir.is_dir() or not query_dir.is_dir():
        raise FormatError(f"{root}: expected datalake/ and query/ subdirectories")
    gt_path = root / "ground_truth.csv"
    rows = _read_gt_rows(gt_path)
    report = PrepReport()

    if sample_n is not None:
        query_files = sorted(p.name for p in query_dir.glob("*.csv"))
        keep = set(sample_queries(query_files, sample_n, sample_seed))
        for name in query_files:
            if name not in keep:
                (query_dir / name).unlink()
                report.queries_sampled_out += 1

    query_files = {p.name for p in query_dir.glob("*.csv")}
    lake_files = {p.name for p in lake_dir.glob("*.csv")}

    resolved = [(q, c) for q, c in rows if q in query_files and c in lake_files]
    report.gt_pruned = len(rows) - len(resolved)
    rows = resolved

    if drop_unreferenced:
        referenced = {c for _, c in rows}
        for name in sorted(lake_files - referenced):
            (lake_dir / name).unlink()
            report.unreferenced_removed += 1
        lake_files &= referenced

    if self_candidacy:
        have = set(rows)
        for qn in sorted(query_files):
            if (qn, qn) not in have:
                if qn in lake_files:
                    rows.append((qn, qn))
                    report.self_rows_added += 1
                else:
                    logger.info("query %s has no lake twin; self row skipped", qn)

    _write_gt_rows(gt_path, rows)

    if row_cap is not None:
        if row_cap < 1:
            raise DegenerateInputError("row cap must be >= 1")
        targets = sorted(lake_dir.glob("*.csv")) + sorted(query_dir.glob("*.csv"))
        truncated = parallel_map(lambda p: _truncate_csv(p, row_cap), targets, workers)
        report.tables_truncated = sum(truncated)

    atomic_write_text(root / "prep_report.json", stable_json_dumps(report.to_dict()))
    return report


def _table_rows(table: Table) -> list[list[str]]:
    rows = []
    for i in range(table.row_count):
        rows.append([c.values[i] if c.values[i] is not None else "" for c in table.columns])
    return rows


def _write_table_csv(path: Path, header: list[str], rows: list[list[str]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _column_windows(n_cols: int, v: int) -> list[tuple[int, int]]:
    """Contiguous windows; each non-final window extends one column into the next."""
    bounds = [i * n_cols // v for i in range(v + 1)]
    windows = []
    for i in range(v):
        end = bounds[i + 1] + 1 if i < v - 1 else bounds[i + 1]
        windows.append((bounds[i], min(end, n_cols)))
    return windows


def _perturb_cell(value: str, rng: random.Random) -> str:
    digits = [i for i, ch in enumerate(value) if ch.isdigit()]
    if digits:
        i = rng.choice(digits)
        return value[:i] + str(rng.randrange(10)) + value[i + 1 :]
    if value.lower() != value:
        return value.lower()
    return value.upper()


def generate_partition_benchmark(
    seeds: list[Table], cfg: GeneratorConfig, out_root: str | Path
) -> dict[str, set[str]]:
    """Write the benchmark layout for the fragment grid; returns the gt mapping (stems)."""
    out_root = Path(out_root)
    lake_dir = out_root / "datalake"
    query_dir = out_root / "query"
    gt_rows: list[tuple[str, str]] = []
    gt: dict[str, set[str]] = {}

    for seed_table in seeds:
        n_rows, n_cols = seed_table.row_count, seed_table.column_count
        if n_rows < 2 or n_cols < 2:
            raise DegenerateInputError(f"seed {seed_table.id} needs >= 2 rows and >= 2 columns")
        if cfg.horizontal > n_rows or cfg.vertical > n_cols:
            raise DegenerateInputError(
                f"seed {seed_table.id} ({n_rows}x{n_cols}) cannot be split "
                f"{cfg.horizontal}x{cfg.vertical}"
            )
        rng = random.Random(f"{cfg.seed}:{seed_table.id}")
        header = seed_table.column_names()
        rows = _table_rows(seed_table)
        windows = _column_windows(n_cols, cfg.vertical)
        row_bounds = [j * n_rows // cfg.horizontal for j in range(cfg.horizontal + 1)]

        fragment_names = []
        query_name = None
        for j in range(cfg.horizontal):
            for i in range(cfg.vertical):
                lo, hi = windows[i]
                frag_header = list(header[lo:hi])
                for ci in range(len(frag_header)):
                    if rng.random() < cfg.rename_probability:
                        frag_header[ci] = f"{frag_header[ci]}_r{rng.randrange(10000)}"
                frag_rows = []
                for r in rows[row_bounds[j] : row_bounds[j + 1]]:
                    cells = list(r[lo:hi])
                    for ci in range(len(cells)):
                        if cells[ci] and rng.random() < cfg.perturb_probability:
                            cells[ci] = _perturb_cell(cells[ci], rng)
                    frag_rows.append(cells)
                name = f"{seed_table.id}__h{j}v{i}"
                fragment_names.append(name)
                _write_table_csv(lake_dir / f"{name}.csv", frag_header, frag_rows)
                if j == 0 and i == 0:
                    query_name = name
                    _write_table_csv(query_dir / f"{name}.csv", frag_header, frag_rows)

        gt[query_name] = set(fragment_names)
        gt_rows += [(f"{query_name}.csv", f"{frag}.csv") for frag in fragment_names]

    _write_gt_rows(out_root / "ground_truth.csv", gt_rows)
    manifest = {
        "seed_count": len(seeds),
        "horizontal": cfg.horizontal,
        "vertical": cfg.vertical,
        "rename_probability": cfg.rename_probability,
        "perturb_probability": cfg.perturb_probability,
        "seed": cfg.seed,
        "seed_tables": sorted(t.id for t in seeds),
    }
    atomic_write_text(out_root / "generator_manifest.json", stable_json_dumps(manifest))
    return gt


def make_random_seed_tables(
    count: int, rows: int = 60, cols: int = 4, vocab: int = 12, seed: int = 0
) -> list[Table]:
    """Synthetic categorical seed tables with per-seed disjoint vocabularies.

    Low per-column cardinality means row partitions of the same seed share
    most distinct values, the regime where lexical retrieval shines.
    """
    if rows < 2 or cols < 2:
        raise DegenerateInputError("seed tables need at least 2 rows and 2 columns")
    tables = []
    for si in range(count):
        rng = random.Random(f"{seed}:seed{si}")
        header = [f"field{si}_{ci}" for ci in range(cols)]
        columns = []
        for ci in range(cols):
            values = [f"s{si}c{ci}w{rng.randrange(vocab)}" for _ in range(rows)]
            columns.append(
                Column(name=header[ci], position=ci, values=values, dtype=_infer_dtype(values))
            )
        tables.append(Table(id=f"seed{si:03d}", path=f"<generated:seed{si:03d}>", columns=columns))
    return tables
