"""Exact top-k retrieval over normalized table vectors, and a bipartite table scorer.

The index is flat: every query computes exact inner products against every
candidate in float64, then sorts by (score desc, candidate id asc). Candidate
ids are kept sorted so the tie-break is a stable row-order tie-break.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, DimensionError, FormatError
from .vectorize import TableVector

logger = logging.getLogger(__name__)

RANKINGS_CSV_HEADER = ["query", "rank", "candidate", "score"]


@dataclass
class VectorIndex:
    ids: list[str]       # ascending
    matrix: np.ndarray   # (n, dim) float64; rows unit-norm or flagged zero
    zero_ids: frozenset[str]

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[1])

    def __len__(self) -> int:
        return len(self.ids)


@dataclass
class Ranking:
    query_id: str
    entries: list[tuple[str, float]]  # (candidate id, score), scores non-increasing


def build_index(vectors: list[TableVector]) -> VectorIndex:
    if not vectors:
        raise DegenerateInputError("cannot index zero vectors")
    dims = {v.vector.shape[0] for v in vectors}
    if len(dims) != 1:
        raise DimensionError(f"mixed vector dimensions: {sorted(dims)}")
    ordered = sorted(vectors, key=lambda v: v.table_id)
    matrix = np.ascontiguousarray(
        np.stack([v.vector for v in ordered]).astype(np.float64, copy=False)
    )
    zero = frozenset(v.table_id for v in ordered if not v.normalized)
    return VectorIndex(ids=[v.table_id for v in ordered], matrix=matrix, zero_ids=zero)


def top_k_search(query: TableVector, index: VectorIndex, k: int) -> Ranking:
    """Exact inner products against every candidate; ties break by ascending id."""
    if k < 1:
        raise DegenerateInputError("k must be >= 1")
    if query.vector.shape[0] != index.dim:
        raise DimensionError(
            f"query dim {query.vector.shape[0]} != index dim {index.dim}"
        )
    if not query.normalized:
        logger.warning("query %s has a zero vector; candidates rank by id", query.table_id)
    scores = index.matrix @ query.vector.astype(np.float64, copy=False)
    n = len(index.ids)
    # primary: score descending; secondary: row order == ascending candidate id
    order = np.lexsort((np.arange(n), -scores))[: min(k, n)]
    return Ranking(
        query_id=query.table_id,
        entries=[(index.ids[i], float(scores[i])) for i in order],
    )


def write_rankings_csv(rankings: list[Ranking], path: str | Path) -> None:
    """Golden-file friendly: fixed 6-decimal scores, 1-based ranks."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RANKINGS_CSV_HEADER)
        for r in rankings:
            for rank, (cand, score) in enumerate(r.entries, start=1):
                w.writerow([r.query_id, rank, cand, f"{score:.6f}"])


def read_rankings_csv(path: str | Path) -> list[Ranking]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        rows = list(reader)
    if not rows or rows[0] != RANKINGS_CSV_HEADER:
        raise FormatError(f"{path}: expected header {','.join(RANKINGS_CSV_HEADER)}")
    by_query: dict[str, list[tuple[int, str, float]]] = {}
    order: list[str] = []
    for q, rank, cand, score in rows[1:]:
        if q not in by_query:
            by_query[q] = []
            order.append(q)
        by_query[q].append((int(rank), cand, float(score)))
    rankings = []
    for q in order:
        entries = [(c, s) for _, c, s in sorted(by_query[q])]
        rankings.append(Ranking(query_id=q, entries=entries))
    return rankings


def _hungarian_min(cost: np.ndarray) -> list[int]:
    """Square min-cost assignment via shortest augmenting paths with potentials.

    Returns the column assigned to each row. O(n^3).
    """
    n = cost.shape[0]
    rows = cost.tolist()  # plain lists: much faster scalar access in the hot loop
    inf = float("inf")
    u = [0.0] * (n + 1)
    v = [0.0] * (n + 1)
    match = [0] * (n + 1)  # match[j] = row matched to column j (1-based; 0 free)
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        match[0] = i
        j0 = 0
        minv = [inf] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = match[j0]
            delta = inf
            j1 = 0
            row = rows[i0 - 1]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(n + 1):
                if used[j]:
                    u[match[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match[j0] = match[j1]
            j0 = j1
    assign = [0] * n
    for j in range(1, n + 1):
        if match[j]:
            assign[match[j] - 1] = j - 1
    return assign


def unit_rows(vectors: list[np.ndarray]) -> np.ndarray:
    """Stack column vectors into a row matrix with unit rows (zero rows kept)."""
    m = np.stack(vectors).astype(np.float64, copy=False)
    norms = np.linalg.norm(m, axis=1)
    norms[norms == 0.0] = 1.0
    return m / norms[:, None]


def matching_score(sim: np.ndarray) -> float:
    """Max-weight matching value over a cosine matrix, divided by min side size.

    Every column on the smaller side is matched (even at negative similarity),
    so the score lies in [-1, 1].
    """
    if sim.shape[0] > sim.shape[1]:
        sim = sim.T  # rows = smaller side; every row must be matched
    m, n = sim.shape
    cost = np.zeros((n, n), dtype=np.float64)
    cost[:m, :] = -sim  # dummy rows keep cost 0 and absorb leftover columns
    assign = _hungarian_min(cost)
    total = float(sum(sim[i, assign[i]] for i in range(m)))
    return total / m


def bipartite_table_score(
    q_cols: list[np.ndarray], c_cols: list[np.ndarray]
) -> float:
    """Hungarian max-weight matching over the column cosine matrix, normalized."""
    if not q_cols or not c_cols:
        raise DegenerateInputError("both column lists must be non-empty")
    dims = {v.shape[0] for v in q_cols} | {v.shape[0] for v in c_cols}
    if len(dims) != 1:
        raise DimensionError(f"mixed column vector dimensions: {sorted(dims)}")
    return matching_score(unit_rows(q_cols) @ unit_rows(c_cols).T)
