"""Retrieval effectiveness and ground-truth-integrity rates.

Per-query top-k sets C are compared against ground-truth sets G:

    P@k     = mean |C n G| / k
    R@k     = mean |C n G| / |G|
    IDEAL   = mean min(k,|G|)/k  and  mean min(k,|G|)/|G|   (method-free ceiling)
    GTFP@k  = sum |C \\ G| / (N * k)
    GTFN@k  = sum (min(k,|G|) - |G n C|) / sum min(k,|G|)  ==  1 - CappedRecall@k

Queries whose ground-truth set is empty (possible after self-exclusion) are
dropped from every average; the dropped count is logged and reported.
"""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from dataclasses import dataclass, field

from .errors import (
    DegenerateInputError,
    EmptyGroundTruthError,
    MissingGroundTruthError,
)
from .search import Ranking

logger = logging.getLogger(__name__)

GroundTruth = dict[str, set[str]]

EVAL_CSV_HEADER = [
    "method",
    "benchmark",
    "k",
    "p_at_k",
    "r_at_k",
    "ideal_p_at_k",
    "ideal_r_at_k",
    "gtfp_at_k",
    "gtfn_at_k",
    "query_count",
    "offline_seconds",
    "online_seconds",
]


def apply_self_policy(
    rankings: list[Ranking], gt: GroundTruth, count_self: bool
) -> tuple[list[Ranking], GroundTruth]:
    """When self-matches don't count, strip each query from its own C and G."""
    if count_self:
        return rankings, gt
    stripped = [
        Ranking(r.query_id, [(c, s) for c, s in r.entries if c != r.query_id])
        for r in rankings
    ]
    gt2 = {q: {c for c in cands if c != q} for q, cands in gt.items()}
    return stripped, gt2


def _evaluated(
    rankings: list[Ranking], gt: GroundTruth
) -> tuple[list[tuple[Ranking, set[str]]], int]:
    """Pair rankings with their ground truth; drop empty-G queries, count them."""
    kept: list[tuple[Ranking, set[str]]] = []
    dropped = 0
    for r in rankings:
        if r.query_id not in gt:
            raise MissingGroundTruthError(f"query {r.query_id!r} has no ground-truth entry")
        g = gt[r.query_id]
        if not g:
            dropped += 1
            continue
        kept.append((r, g))
    if dropped:
        logger.info("dropped %d queries with empty ground truth from averages", dropped)
    return kept, dropped


def precision_recall_at_k(
    rankings: list[Ranking], gt: GroundTruth, k: int
) -> tuple[float, float]:
    if k < 1:
        raise DegenerateInputError("k must be >= 1")
    kept, _ = _evaluated(rankings, gt)
    if not kept:
        raise EmptyGroundTruthError("no queries with non-empty ground truth")
    p_sum = 0.0
    r_sum = 0.0
    for r, g in kept:
        hits = len({c for c, _ in r.entries[:k]} & g)
        p_sum += hits / k
        r_sum += hits / len(g)
    n = len(kept)
    return p_sum / n, r_sum / n


def ideal_at_k(gt: GroundTruth, k: int, corpus_size: int | None = None) -> tuple[float, float]:
    """Ceiling on P@k / R@k imposed purely by ground-truth set sizes."""
    if k < 1:
        raise DegenerateInputError("k must be >= 1")
    sizes = [len(g) for g in gt.values() if g]
    if not sizes:
        raise EmptyGroundTruthError("ground truth has no non-empty sets")
    p = sum(min(k, s) / k for s in sizes) / len(sizes)
    r = sum(min(k, s) / s for s in sizes) / len(sizes)
    return p, r


def gtfp_at_k(rankings: list[Ranking], gt: GroundTruth, k: int) -> float:
    """Share of top-k slots filled by candidates absent from the ground truth."""
    if k < 1:
        raise DegenerateInputError("k must be >= 1")
    kept, _ = _evaluated(rankings, gt)
    if not kept:
        raise EmptyGroundTruthError("no queries with non-empty ground truth")
    misses = 0
    for r, g in kept:
        misses += sum(1 for c, _ in r.entries[:k] if c not in g)
    return misses / (len(kept) * k)


def capped_recall_at_k(rankings: list[Ranking], gt: GroundTruth, k: int) -> float:
    if k < 1:
        raise DegenerateInputError("k must be >= 1")
    kept, _ = _evaluated(rankings, gt)
    hits = 0
    capped = 0
    for r, g in kept:
        hits += len({c for c, _ in r.entries[:k]} & g)
        capped += min(k, len(g))
    if capped == 0:
        raise EmptyGroundTruthError("capped ground-truth total is zero")
    return hits / capped


def gtfn_at_k(rankings: list[Ranking], gt: GroundTruth, k: int) -> float:
    """Capped share of ground-truth positives missing from the top k."""
    if k < 1:
        raise DegenerateInputError("k must be >= 1")
    kept, _ = _evaluated(rankings, gt)
    missed = 0
    capped = 0
    for r, g in kept:
        hits = len({c for c, _ in r.entries[:k]} & g)
        missed += min(k, len(g)) - hits
        capped += min(k, len(g))
    if capped == 0:
        raise EmptyGroundTruthError("capped ground-truth total is zero")
    return missed / capped


class StageTimer:
    """Wall-clock accumulator per named stage; offline vs online split.

    Offline covers loading, vectorizing, and indexing; online covers query
    search. Stage names outside the two sets are kept but not aggregated.
    """

    OFFLINE_STAGES = ("load", "vectorize", "index")
    ONLINE_STAGES = ("search",)

    def __init__(self):
        self.seconds: dict[str, float] = {}

    @contextmanager
    def stage(self, name: str):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            dt = time.perf_counter() - t0
            self.seconds[name] = self.seconds.get(name, 0.0) + dt
            logger.info("stage=%s seconds=%.3f", name, dt)

    @property
    def offline_seconds(self) -> float:
        return sum(self.seconds.get(s, 0.0) for s in self.OFFLINE_STAGES)

    @property
    def online_seconds(self) -> float:
        return sum(self.seconds.get(s, 0.0) for s in self.ONLINE_STAGES)


def timing(timers: list[StageTimer]) -> tuple[float, float]:
    """Mean offline/online seconds over one or more instrumented runs."""
    if not timers:
        raise DegenerateInputError("at least one timed run is required")
    off = sum(t.offline_seconds for t in timers) / len(timers)
    on = sum(t.online_seconds for t in timers) / len(timers)
    return off, on


@dataclass
class EvalReport:
    method: str
    benchmark: str
    ks: list[int]
    per_k: dict[int, dict[str, float]]  # p, r, ideal_p, ideal_r, gtfp, gtfn
    query_count: int
    dropped_empty_gt: int
    offline_seconds: float
    online_seconds: float
    count_self: bool = True
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        # rates at 3 decimals, matching how result tables are reported
        return {
            "method": self.method,
            "benchmark": self.benchmark,
            "count_self": self.count_self,
            "query_count": self.query_count,
            "dropped_empty_gt": self.dropped_empty_gt,
            "metrics": {
                str(k): {name: round(v, 3) for name, v in self.per_k[k].items()}
                for k in self.ks
            },
            "offline_seconds": round(self.offline_seconds, 3),
            "online_seconds": round(self.online_seconds, 3),
            **self.extra,
        }

    def csv_rows(self) -> list[list[str]]:
        rows = []
        for k in self.ks:
            m = self.per_k[k]
            rows.append(
                [
                    self.method,
                    self.benchmark,
                    str(k),
                    f"{m['p_at_k']:.3f}",
                    f"{m['r_at_k']:.3f}",
                    f"{m['ideal_p_at_k']:.3f}",
                    f"{m['ideal_r_at_k']:.3f}",
                    f"{m['gtfp_at_k']:.3f}",
                    f"{m['gtfn_at_k']:.3f}",
                    str(self.query_count),
                    f"{self.offline_seconds:.3f}",
                    f"{self.online_seconds:.3f}",
                ]
            )
        return rows


def evaluate_rankings(
    rankings: list[Ranking],
    gt: GroundTruth,
    ks: list[int],
    method: str = "",
    benchmark: str = "",
    count_self: bool = True,
    offline_seconds: float = 0.0,
    online_seconds: float = 0.0,
) -> EvalReport:
    """Compute the full metric block for every requested k."""
    eff_rankings, eff_gt = apply_self_policy(rankings, gt, count_self)
    kept, dropped = _evaluated(eff_rankings, eff_gt)
    if not kept:
        raise EmptyGroundTruthError("no queries with non-empty ground truth")
    eval_gt = {r.query_id: g for r, g in kept}
    per_k: dict[int, dict[str, float]] = {}
    for k in ks:
        p, r = precision_recall_at_k(eff_rankings, eff_gt, k)
        ip, ir = ideal_at_k(eval_gt, k)
        per_k[k] = {
            "p_at_k": p,
            "r_at_k": r,
            "ideal_p_at_k": ip,
            "ideal_r_at_k": ir,
            "gtfp_at_k": gtfp_at_k(eff_rankings, eff_gt, k),
            "gtfn_at_k": gtfn_at_k(eff_rankings, eff_gt, k),
        }
    return EvalReport(
        method=method,
        benchmark=benchmark,
        ks=list(ks),
        per_k=per_k,
        query_count=len(kept),
        dropped_empty_gt=dropped,
        offline_seconds=offline_seconds,
        online_seconds=online_seconds,
        count_self=count_self,
    )
