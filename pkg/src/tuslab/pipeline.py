"""Pipeline orchestration: stages, run config, and on-disk artifacts.

Stages compose through the output directory: ``vectorize`` persists a vector
store (.npy matrices + JSON manifest), ``search`` turns it into rankings.csv,
``evaluate`` runs the whole chain and emits the metric report. Reruns with the
same config, seed, and inputs produce byte-identical artifacts (timing fields
excluded) at any worker count.

A ``.partial`` marker is written into the output directory while a stage is
running and removed on success; if it survives, the run died midway.
"""

from __future__ import annotations

import io
import json
import logging
import os
from contextlib import contextmanager
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import audit as audit_mod
from . import diagnostics, metrics, prep, search, vectorize
from .corpus import Benchmark, load_benchmark, profile_corpus
from .errors import DegenerateInputError, FormatError, ProviderError
from .providers import (
    FileEmbeddingProvider,
    HttpChatProvider,
    HttpEmbeddingProvider,
    ReplayChatProvider,
    fetch_embeddings,
)
from .util import (
    atomic_write_bytes,
    atomic_write_text,
    file_tree_hash,
    parallel_map,
    stable_json_dumps,
)

logger = logging.getLogger(__name__)

METHODS = ("hash", "tfidf", "count", "embed-vc", "embed-c", "embed-v", "bipartite")

_KIND_BY_METHOD = {
    "hash": vectorize.VectorizerKind.HASHING,
    "tfidf": vectorize.VectorizerKind.TFIDF,
    "count": vectorize.VectorizerKind.COUNT,
}

PARTIAL_MARKER = ".partial"


@dataclass
class RunConfig:
    benchmark: str = ""
    out: str = ""
    method: str = "tfidf"
    k_list: list[int] = field(default_factory=lambda: [10])
    pooling: str | None = None  # default: max for lexical, mean for embeddings
    count_self: bool = True
    seed: int = 0
    max_values: int = 1000
    dim: int = 4096
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)
    timing_runs: int = 1
    # diagnostics
    normalize_names: bool = False
    value_tokens: bool = False
    # embedding provider
    embed_url: str | None = None
    embed_fixture: str | None = None
    embed_cache: str | None = None
    # audit / adjudication
    k_prime: int = 3
    runs: int = 5
    temperature: float = 0.1
    few_shot: str | None = None
    template: str | None = None
    replay: str | None = None
    chat_url: str | None = None
    max_rows: int = 50
    in_flight: int = 1
    max_pairs: int | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise DegenerateInputError(f"unknown method {self.method!r}; pick from {METHODS}")
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise DegenerateInputError("k values must be positive")
        if self.k_list != sorted(self.k_list):
            raise DegenerateInputError("k values must be ascending")
        if self.pooling is not None and self.pooling not in ("max", "mean"):
            raise DegenerateInputError("pooling must be 'max' or 'mean'")

    def effective_pooling(self) -> str:
        if self.pooling is not None:
            return self.pooling
        return "mean" if self.method.startswith("embed-") else "max"


def parse_config_file(path: str | Path) -> dict[str, str]:
    """Plain key=value lines; '#' comments and blank lines ignored."""
    values: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def echo_resolved_config(cfg: RunConfig, out_dir: Path) -> None:
    lines = []
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if isinstance(value, list):
            value = ",".join(str(v) for v in value)
        lines.append(f"{f.name}={value}")
    atomic_write_text(out_dir / "resolved_config.txt", "\n".join(sorted(lines)) + "\n")


@contextmanager
def partial_marker(out_dir: Path, stage: str):
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / PARTIAL_MARKER
    marker.write_text(stage + "\n")
    yield
    marker.unlink(missing_ok=True)


def benchmark_corpus_hash(root: Path) -> str:
    pairs = [(f"datalake/{p.name}", p) for p in sorted((root / "datalake").glob("*.csv"))]
    pairs += [(f"query/{p.name}", p) for p in sorted((root / "query").glob("*.csv"))]
    gt = root / "ground_truth.csv"
    if gt.exists():
        pairs.append(("ground_truth.csv", gt))
    return file_tree_hash(pairs)


# ---------------------------------------------------------------------------
# vector computation


def _table_documents(benchmark: Benchmark, cfg: RunConfig) -> tuple[list, list]:
    def docs_for(table):
        return [
            vectorize.build_column_document(col, cfg.max_values, cfg.seed, table.id)
            for col in table.columns
        ]

    lake_docs = parallel_map(docs_for, benchmark.lake, cfg.workers)
    query_docs = parallel_map(docs_for, benchmark.queries, cfg.workers)
    return lake_docs, query_docs


def _fit_vocabulary(benchmark, lake_docs, query_docs, vcfg):
    """Corpus-wide fit, queries included; tables present in both roles count once."""
    lake_ids = {t.id for t in benchmark.lake}
    fit_docs = [d for docs in lake_docs for d in docs]
    for table, docs in zip(benchmark.queries, query_docs):
        if table.id not in lake_ids:
            fit_docs.extend(docs)
    return vectorize.build_vocabulary(fit_docs, vcfg)


def lexical_column_vectors(
    benchmark: Benchmark, cfg: RunConfig, method: str | None = None
) -> tuple[dict[str, list[np.ndarray]], dict[str, list[np.ndarray]]]:
    """Per-table lists of column vectors for a lexical method, lake and query."""
    method = method or cfg.method
    kind = _KIND_BY_METHOD[method]
    ngram = (1, 1) if kind is vectorize.VectorizerKind.HASHING else (1, 2)
    vcfg = vectorize.VectorizerConfig(
        kind=kind, dim=cfg.dim, ngram_range=ngram, lowercase=True, seed=cfg.seed
    )
    lake_docs, query_docs = _table_documents(benchmark, cfg)
    vocab = None
    if kind is not vectorize.VectorizerKind.HASHING:
        vocab = _fit_vocabulary(benchmark, lake_docs, query_docs, vcfg)

    def vectors_for(docs):
        return [vectorize.vectorize_column(d, vcfg, vocab) for d in docs]

    lake_cols = parallel_map(vectors_for, lake_docs, cfg.workers)
    query_cols = parallel_map(vectors_for, query_docs, cfg.workers)
    return (
        {t.id: cols for t, cols in zip(benchmark.lake, lake_cols)},
        {t.id: cols for t, cols in zip(benchmark.queries, query_cols)},
    )


def _embedding_provider(cfg: RunConfig):
    if cfg.embed_fixture:
        return FileEmbeddingProvider(cfg.embed_fixture)
    return HttpEmbeddingProvider(cfg.embed_url)


def embedding_column_vectors(
    benchmark: Benchmark, cfg: RunConfig
) -> tuple[dict[str, list[np.ndarray]], dict[str, list[np.ndarray]]]:
    variant = cfg.method.split("-", 1)[1]
    tables = list(benchmark.lake) + list(benchmark.queries)
    texts: list[str] = []
    spans: list[tuple[str, int, int]] = []
    for t in tables:
        start = len(texts)
        for col in t.columns:
            texts.append(
                vectorize.serialize_for_embedding(col, variant, cfg.max_values, cfg.seed)
            )
        spans.append((t.id, start, len(texts)))
    provider = _embedding_provider(cfg)
    cache = cfg.embed_cache
    if cache is None and cfg.out:
        cache = str(Path(cfg.out) / f"embed_cache_{provider.provider_id}.jsonl")
    vectors = fetch_embeddings(texts, provider, cache)
    arrays = [np.asarray(v, dtype=np.float64) for v in vectors]

    n_lake = len(benchmark.lake)
    lake_cols: dict[str, list[np.ndarray]] = {}
    query_cols: dict[str, list[np.ndarray]] = {}
    for i, (tid, lo, hi) in enumerate(spans):
        target = lake_cols if i < n_lake else query_cols
        target[tid] = arrays[lo:hi]
    return lake_cols, query_cols


def pooled_table_vectors(
    col_vectors: dict[str, list[np.ndarray]], pooling: str
) -> list[vectorize.TableVector]:
    mode = vectorize.PoolingMode(pooling)
    return [
        vectorize.make_table_vector(tid, cols, mode)
        for tid, cols in sorted(col_vectors.items())
    ]


def compute_table_vectors(
    benchmark: Benchmark, cfg: RunConfig
) -> tuple[list[vectorize.TableVector], list[vectorize.TableVector]]:
    """Pooled, normalized table vectors (lake, query) for any pooled method."""
    if cfg.method in _KIND_BY_METHOD:
        lake_cols, query_cols = lexical_column_vectors(benchmark, cfg)
    elif cfg.method.startswith("embed-"):
        lake_cols, query_cols = embedding_column_vectors(benchmark, cfg)
    else:
        raise DegenerateInputError(f"method {cfg.method!r} has no pooled table vectors")
    pooling = cfg.effective_pooling()
    return pooled_table_vectors(lake_cols, pooling), pooled_table_vectors(query_cols, pooling)


# ---------------------------------------------------------------------------
# vector store


def _npy_bytes(matrix: np.ndarray) -> bytes:
    buf = io.BytesIO()
    np.save(buf, matrix)
    return buf.getvalue()


def write_table_vector_store(
    out_dir: Path,
    cfg: RunConfig,
    corpus_hash: str,
    lake_tvs: list[vectorize.TableVector],
    query_tvs: list[vectorize.TableVector],
) -> None:
    lake_tvs = sorted(lake_tvs, key=lambda v: v.table_id)
    query_tvs = sorted(query_tvs, key=lambda v: v.table_id)
    atomic_write_bytes(out_dir / "vectors_lake.npy", _npy_bytes(np.stack([v.vector for v in lake_tvs])))
    atomic_write_bytes(out_dir / "vectors_query.npy", _npy_bytes(np.stack([v.vector for v in query_tvs])))
    manifest = {
        "store_kind": "table",
        "method": cfg.method,
        "dim": cfg.dim,
        "pooling": cfg.effective_pooling(),
        "seed": cfg.seed,
        "max_values": cfg.max_values,
        "corpus_hash": corpus_hash,
        "lake_ids": [v.table_id for v in lake_tvs],
        "query_ids": [v.table_id for v in query_tvs],
        "lake_zero_ids": [v.table_id for v in lake_tvs if not v.normalized],
        "query_zero_ids": [v.table_id for v in query_tvs if not v.normalized],
    }
    atomic_write_text(out_dir / "vectors_manifest.json", stable_json_dumps(manifest))


def write_column_vector_store(
    out_dir: Path,
    cfg: RunConfig,
    corpus_hash: str,
    lake_cols: dict[str, list[np.ndarray]],
    query_cols: dict[str, list[np.ndarray]],
) -> None:
    def flatten(cols: dict[str, list[np.ndarray]]):
        ids = sorted(cols)
        counts = [len(cols[tid]) for tid in ids]
        matrix = np.concatenate([np.stack(cols[tid]) for tid in ids])
        return ids, counts, matrix

    lake_ids, lake_counts, lake_matrix = flatten(lake_cols)
    query_ids, query_counts, query_matrix = flatten(query_cols)
    atomic_write_bytes(out_dir / "vectors_lake.npy", _npy_bytes(lake_matrix))
    atomic_write_bytes(out_dir / "vectors_query.npy", _npy_bytes(query_matrix))
    manifest = {
        "store_kind": "columns",
        "method": cfg.method,
        "base_vectorizer": "tfidf",
        "dim": cfg.dim,
        "pooling": None,
        "seed": cfg.seed,
        "max_values": cfg.max_values,
        "corpus_hash": corpus_hash,
        "lake_ids": lake_ids,
        "lake_column_counts": lake_counts,
        "query_ids": query_ids,
        "query_column_counts": query_counts,
    }
    atomic_write_text(out_dir / "vectors_manifest.json", stable_json_dumps(manifest))


def load_vector_store(out_dir: Path) -> dict:
    manifest_path = out_dir / "vectors_manifest.json"
    if not manifest_path.exists():
        raise FormatError(f"no vector store in {out_dir}; run vectorize first")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    lake = np.load(out_dir / "vectors_lake.npy")
    query = np.load(out_dir / "vectors_query.npy")
    return {"manifest": manifest, "lake": lake, "query": query}


def _store_table_vectors(store: dict) -> tuple[list[vectorize.TableVector], list[vectorize.TableVector]]:
    m = store["manifest"]
    if m["store_kind"] != "table":
        raise FormatError("vector store holds column vectors; search needs the table store")
    lake_zero = set(m.get("lake_zero_ids", []))
    query_zero = set(m.get("query_zero_ids", []))
    lake = [
        vectorize.TableVector(tid, store["lake"][i], tid not in lake_zero)
        for i, tid in enumerate(m["lake_ids"])
    ]
    query = [
        vectorize.TableVector(tid, store["query"][i], tid not in query_zero)
        for i, tid in enumerate(m["query_ids"])
    ]
    return lake, query


def _store_column_vectors(store: dict) -> tuple[dict[str, list[np.ndarray]], dict[str, list[np.ndarray]]]:
    m = store["manifest"]
    if m["store_kind"] != "columns":
        raise FormatError("vector store holds table vectors, not column vectors")

    def unflatten(ids, counts, matrix):
        out: dict[str, list[np.ndarray]] = {}
        at = 0
        for tid, n in zip(ids, counts):
            out[tid] = [matrix[at + j] for j in range(n)]
            at += n
        return out

    return (
        unflatten(m["lake_ids"], m["lake_column_counts"], store["lake"]),
        unflatten(m["query_ids"], m["query_column_counts"], store["query"]),
    )


# ---------------------------------------------------------------------------
# search


def run_search(
    lake_tvs: list[vectorize.TableVector],
    query_tvs: list[vectorize.TableVector],
    k: int,
    workers: int,
) -> list[search.Ranking]:
    index = search.build_index(lake_tvs)
    ordered = sorted(query_tvs, key=lambda v: v.table_id)
    return parallel_map(lambda q: search.top_k_search(q, index, k), ordered, workers)


def run_bipartite_search(
    lake_cols: dict[str, list[np.ndarray]],
    query_cols: dict[str, list[np.ndarray]],
    k: int,
    workers: int,
) -> list[search.Ranking]:
    # normalize each table's column matrix once, not once per pair
    lake_ids = sorted(lake_cols)
    lake_units = {cid: search.unit_rows(lake_cols[cid]) for cid in lake_ids}
    query_units = {qid: search.unit_rows(query_cols[qid]) for qid in query_cols}

    def one(query_id: str) -> search.Ranking:
        qm = query_units[query_id]
        scored = [
            (search.matching_score(qm @ lake_units[cid].T), cid) for cid in lake_ids
        ]
        scored.sort(key=lambda t: (-t[0], t[1]))
        return search.Ranking(query_id, [(cid, s) for s, cid in scored[:k]])

    return parallel_map(one, sorted(query_cols), workers)


# ---------------------------------------------------------------------------
# stages


def stage_profile(cfg: RunConfig) -> dict:
    out_dir = Path(cfg.out)
    with partial_marker(out_dir, "profile"):
        benchmark = load_benchmark(cfg.benchmark, workers=cfg.workers)
        report = {
            "benchmark": Path(cfg.benchmark).name,
            "datalake": profile_corpus(benchmark.lake).to_dict(),
            "query": profile_corpus(benchmark.queries).to_dict(),
        }
        atomic_write_text(out_dir / "corpus_profile.json", stable_json_dumps(report))
        echo_resolved_config(cfg, out_dir)
    return report


def stage_overlap(cfg: RunConfig) -> dict:
    out_dir = Path(cfg.out)
    with partial_marker(out_dir, "overlap"):
        benchmark = load_benchmark(cfg.benchmark, workers=cfg.workers)
        records, stats = diagnostics.compute_overlap_records(
            benchmark,
            normalize_names=cfg.normalize_names,
            token_mode=cfg.value_tokens,
            workers=cfg.workers,
        )
        diagnostics.write_overlap_csv(records, out_dir / "overlap_records.csv")
        report = diagnostics.overlap_report(records, stats)
        atomic_write_text(out_dir / "overlap_report.json", stable_json_dumps(report))
        echo_resolved_config(cfg, out_dir)
    return report


def stage_vectorize(cfg: RunConfig) -> None:
    out_dir = Path(cfg.out)
    with partial_marker(out_dir, "vectorize"):
        benchmark = load_benchmark(cfg.benchmark, workers=cfg.workers)
        corpus_hash = benchmark_corpus_hash(Path(cfg.benchmark))
        if cfg.method == "bipartite":
            lake_cols, query_cols = lexical_column_vectors(benchmark, cfg, method="tfidf")
            write_column_vector_store(out_dir, cfg, corpus_hash, lake_cols, query_cols)
        else:
            lake_tvs, query_tvs = compute_table_vectors(benchmark, cfg)
            write_table_vector_store(out_dir, cfg, corpus_hash, lake_tvs, query_tvs)
        echo_resolved_config(cfg, out_dir)


def stage_search(cfg: RunConfig) -> list[search.Ranking]:
    out_dir = Path(cfg.out)
    with partial_marker(out_dir, "search"):
        store = load_vector_store(out_dir)
        k_max = max(cfg.k_list)
        if store["manifest"]["store_kind"] == "columns":
            lake_cols, query_cols = _store_column_vectors(store)
            rankings = run_bipartite_search(lake_cols, query_cols, k_max, cfg.workers)
        else:
            lake_tvs, query_tvs = _store_table_vectors(store)
            rankings = run_search(lake_tvs, query_tvs, k_max, cfg.workers)
        search.write_rankings_csv(rankings, out_dir / "rankings.csv")
    return rankings


@dataclass
class _EvalRun:
    benchmark: Benchmark
    rankings: list[search.Ranking]
    timer: metrics.StageTimer
    store_kind: str  # "table" | "columns"
    lake_vectors: object
    query_vectors: object


def _evaluate_once(cfg: RunConfig) -> _EvalRun:
    timer = metrics.StageTimer()
    with timer.stage("load"):
        benchmark = load_benchmark(cfg.benchmark, workers=cfg.workers)
    k_max = max(cfg.k_list + [cfg.k_prime])
    if cfg.method == "bipartite":
        with timer.stage("vectorize"):
            lake_cols, query_cols = lexical_column_vectors(benchmark, cfg, method="tfidf")
        with timer.stage("search"):
            rankings = run_bipartite_search(lake_cols, query_cols, k_max, cfg.workers)
        return _EvalRun(benchmark, rankings, timer, "columns", lake_cols, query_cols)
    with timer.stage("vectorize"):
        lake_tvs, query_tvs = compute_table_vectors(benchmark, cfg)
    with timer.stage("index"):
        index = search.build_index(lake_tvs)
    with timer.stage("search"):
        ordered = sorted(query_tvs, key=lambda v: v.table_id)
        rankings = parallel_map(
            lambda q: search.top_k_search(q, index, k_max), ordered, cfg.workers
        )
    return _EvalRun(benchmark, rankings, timer, "table", lake_tvs, query_tvs)


def run_pipeline(cfg: RunConfig) -> metrics.EvalReport:
    """vectorize -> index -> search -> metrics, with artifacts and timing."""
    cfg.validate()
    out_dir = Path(cfg.out)
    with partial_marker(out_dir, "evaluate"):
        timers = []
        run = None
        for _ in range(max(1, cfg.timing_runs)):
            run = _evaluate_once(cfg)
            timers.append(run.timer)
        offline, online = metrics.timing(timers)
        benchmark, rankings = run.benchmark, run.rankings

        corpus_hash = benchmark_corpus_hash(Path(cfg.benchmark))
        if run.store_kind == "columns":
            write_column_vector_store(out_dir, cfg, corpus_hash, run.lake_vectors, run.query_vectors)
        else:
            write_table_vector_store(out_dir, cfg, corpus_hash, run.lake_vectors, run.query_vectors)
        search.write_rankings_csv(rankings, out_dir / "rankings.csv")

        report = metrics.evaluate_rankings(
            rankings,
            benchmark.ground_truth,
            cfg.k_list,
            method=cfg.method,
            benchmark=Path(cfg.benchmark).name,
            count_self=cfg.count_self,
            offline_seconds=offline,
            online_seconds=online,
        )
        atomic_write_text(out_dir / "eval_report.json", stable_json_dumps(report.to_dict()))
        csv_lines = [",".join(metrics.EVAL_CSV_HEADER)]
        csv_lines += [",".join(row) for row in report.csv_rows()]
        atomic_write_text(out_dir / "eval_report.csv", "\n".join(csv_lines) + "\n")
        echo_resolved_config(cfg, out_dir)
        logger.info(
            "evaluate done: method=%s queries=%d offline=%.3fs online=%.3fs",
            cfg.method, report.query_count, offline, online,
        )
    return report


def stage_audit(cfg: RunConfig) -> list[audit_mod.DisagreementPair]:
    out_dir = Path(cfg.out)
    with partial_marker(out_dir, "audit"):
        rankings_path = out_dir / "rankings.csv"
        if not rankings_path.exists():
            raise FormatError(f"{rankings_path} not found; run evaluate or search first")
        rankings = search.read_rankings_csv(rankings_path)
        benchmark = load_benchmark(cfg.benchmark, workers=cfg.workers)
        eff_rankings, eff_gt = metrics.apply_self_policy(
            rankings, benchmark.ground_truth, cfg.count_self
        )
        pairs = audit_mod.extract_disagreements(eff_rankings, eff_gt, cfg.k_prime)
        audit_mod.write_disagreements_csv(pairs, out_dir / "disagreements.csv")
        echo_resolved_config(cfg, out_dir)
    return pairs


def _chat_provider(cfg: RunConfig):
    if cfg.replay:
        return ReplayChatProvider(cfg.replay)
    return HttpChatProvider(cfg.chat_url)


def stage_adjudicate(cfg: RunConfig) -> dict:
    out_dir = Path(cfg.out)
    with partial_marker(out_dir, "adjudicate"):
        pairs_path = out_dir / "disagreements.csv"
        if not pairs_path.exists():
            raise FormatError(f"{pairs_path} not found; run audit first")
        pairs = audit_mod.read_disagreements_csv(pairs_path)
        if cfg.max_pairs is not None:
            pairs = pairs[: cfg.max_pairs]
        benchmark = load_benchmark(cfg.benchmark, workers=cfg.workers)
        provider = _chat_provider(cfg)
        journal = audit_mod.VerdictJournal(out_dir / "verdicts.jsonl")
        verdicts, failures = audit_mod.adjudicate_pairs(
            pairs,
            benchmark.query_by_id(),
            benchmark.lake_by_id(),
            provider,
            runs=cfg.runs,
            temperature=cfg.temperature,
            max_rows=cfg.max_rows,
            few_shot_path=cfg.few_shot,
            template_path=cfg.template,
            journal=journal,
            in_flight=cfg.in_flight,
        )
        breakdown = audit_mod.agreement_breakdown(verdicts, benchmark.ground_truth)
        summary = {
            "pairs": len(pairs),
            "adjudicated": len(verdicts),
            "failed": [
                {"query": p.query, "candidate": p.candidate, "error": err}
                for p, err in failures
            ],
            "ties": sum(1 for v in verdicts if v.tie),
            "verdicts": [
                {
                    "query": v.pair.query,
                    "candidate": v.pair.candidate,
                    "kind": v.pair.kind.value,
                    "majority": v.majority.value,
                    "runs": [l.value for l in v.run_labels],
                    "tie": v.tie,
                }
                for v in verdicts
            ],
            "agreement": breakdown.to_dict(),
        }
        atomic_write_text(out_dir / "adjudication_summary.json", stable_json_dumps(summary))
        atomic_write_text(
            out_dir / "agreement_breakdown.json", stable_json_dumps(breakdown.to_dict())
        )
        echo_resolved_config(cfg, out_dir)
        if failures:
            raise ProviderError(
                f"{len(failures)} pairs failed adjudication; completed verdicts are journaled"
            )
    return summary


def stage_prep(
    cfg: RunConfig,
    drop_unreferenced: bool = False,
    self_candidacy: bool = True,
    row_cap: int | None = None,
    sample_n: int | None = None,
) -> prep.PrepReport:
    report = prep.normalize_benchmark(
        cfg.benchmark,
        drop_unreferenced=drop_unreferenced,
        self_candidacy=self_candidacy,
        row_cap=row_cap,
        sample_n=sample_n,
        sample_seed=cfg.seed,
        workers=cfg.workers,
    )
    logger.info("prep done: %s", report.to_dict())
    return report
