"""Column-to-vector machinery: lexical vectorizers, embedding serializations, pooling.

Frozen choices (vector values depend on them):
  - tokens are maximal alphanumeric runs of length >= 2; word n-grams are
    tokens joined by a single space
  - the hashing vectorizer buckets terms with FNV-1a 32-bit, no sign flipping
  - tfidf uses smoothed idf ln((1+N)/(1+df)) + 1 and L2 row normalization
  - corpus-wide vocabularies are capped at the ``dim`` most document-frequent
    terms (ties lexicographic), indices assigned in lexicographic order
  - embedding serializations: "<name>: <values>" / "<name>" / "<values>",
    values space-joined with original casing
"""

from __future__ import annotations

import enum
import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import Column, sample_column_values
from .errors import DegenerateInputError, DimensionError

_TOKEN_RE = re.compile(r"[^\W_]{2,}", re.UNICODE)

_FNV_OFFSET = 0x811C9DC5
_FNV_PRIME = 0x01000193


class VectorizerKind(enum.Enum):
    HASHING = "hashing"
    TFIDF = "tfidf"
    COUNT = "count"


class PoolingMode(enum.Enum):
    MAX = "max"
    MEAN = "mean"


@dataclass(frozen=True)
class VectorizerConfig:
    kind: VectorizerKind
    dim: int = 4096
    ngram_range: tuple[int, int] = (1, 2)
    lowercase: bool = True
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.ngram_range
        if not (1 <= lo <= hi <= 3):
            raise ValueError(f"ngram_range must satisfy 1 <= lo <= hi <= 3, got {self.ngram_range}")
        if self.dim < 1:
            raise ValueError("dim must be >= 1")


@dataclass(frozen=True)
class ColumnDocument:
    column_id: str  # "<table id>:<position>"
    text: str       # lowercased, space-joined sampled values
    name: str


@dataclass(frozen=True)
class Vocabulary:
    index: dict[str, int]     # term -> dense index, |index| <= dim
    doc_freq: dict[str, int]  # df for retained terms
    n_docs: int


@dataclass
class TableVector:
    table_id: str
    vector: np.ndarray
    normalized: bool  # False marks the all-zero exemption


def fnv1a_32(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & 0xFFFFFFFF
    return h


def tokenize(text: str, ngram_range: tuple[int, int] = (1, 1)) -> list[str]:
    """Alphanumeric runs of length >= 2, expanded to word n-grams in range."""
    lo, hi = ngram_range
    if not (1 <= lo <= hi <= 3):
        raise ValueError(f"ngram_range must satisfy 1 <= lo <= hi <= 3, got {ngram_range}")
    tokens = _TOKEN_RE.findall(text)
    if (lo, hi) == (1, 1):
        return tokens
    terms: list[str] = []
    for n in range(lo, hi + 1):
        for i in range(len(tokens) - n + 1):
            terms.append(" ".join(tokens[i : i + n]))
    return terms


def build_column_document(col: Column, n: int, seed: int, table_id: str = "") -> ColumnDocument:
    values = sample_column_values(col, n, seed)
    return ColumnDocument(
        column_id=f"{table_id}:{col.position}",
        text=" ".join(values).lower(),
        name=col.name,
    )


def build_vocabulary(docs: list[ColumnDocument], cfg: VectorizerConfig) -> Vocabulary:
    """Fit the corpus-wide vocabulary: two-phase (df counting, then capped index).

    Retains the ``cfg.dim`` most document-frequent terms, ties broken
    lexicographically; indices are assigned in lexicographic term order.
    """
    df: Counter[str] = Counter()
    for doc in docs:
        text = doc.text.lower() if cfg.lowercase else doc.text
        df.update(set(tokenize(text, cfg.ngram_range)))
    retained = sorted(df, key=lambda t: (-df[t], t))[: cfg.dim]
    index = {t: i for i, t in enumerate(sorted(retained))}
    return Vocabulary(index=index, doc_freq={t: df[t] for t in retained}, n_docs=len(docs))


def _l2_normalized(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    return v / norm if norm > 0.0 else v


def vectorize_column(
    doc: ColumnDocument, cfg: VectorizerConfig, vocab: Vocabulary | None = None
) -> np.ndarray:
    """One dense float64 vector of length ``cfg.dim``; zero for empty documents."""
    needs_vocab = cfg.kind in (VectorizerKind.TFIDF, VectorizerKind.COUNT)
    if needs_vocab and vocab is None:
        raise ValueError(f"{cfg.kind.value} vectorizer requires a fitted vocabulary")
    if not needs_vocab and vocab is not None:
        raise ValueError("hashing vectorizer takes no vocabulary")

    text = doc.text.lower() if cfg.lowercase else doc.text
    terms = tokenize(text, cfg.ngram_range)
    v = np.zeros(cfg.dim, dtype=np.float64)
    if not terms:
        return v

    if cfg.kind is VectorizerKind.HASHING:
        for t in terms:
            v[fnv1a_32(t.encode("utf-8")) % cfg.dim] += 1.0
        return _l2_normalized(v)

    counts = Counter(terms)
    if cfg.kind is VectorizerKind.COUNT:
        for t, c in counts.items():
            i = vocab.index.get(t)
            if i is not None:
                v[i] = float(c)
        return v

    # tfidf
    for t, c in counts.items():
        i = vocab.index.get(t)
        if i is not None:
            idf = np.log((1.0 + vocab.n_docs) / (1.0 + vocab.doc_freq[t])) + 1.0
            v[i] = float(c) * idf
    return _l2_normalized(v)


def serialize_for_embedding(col: Column, variant: str, n: int, seed: int) -> str:
    """Column-to-text for an external encoder: variant 'vc', 'c', or 'v'."""
    variant = variant.lower()
    if variant == "c":
        return col.name
    values = " ".join(sample_column_values(col, n, seed))
    if variant == "v":
        return values
    if variant == "vc":
        return f"{col.name}: {values}"
    raise ValueError(f"unknown serialization variant {variant!r}")


def pool_columns(vectors: list[np.ndarray], mode: PoolingMode) -> np.ndarray:
    """Elementwise max or arithmetic mean; the caller L2-normalizes the result."""
    if not vectors:
        raise DegenerateInputError("cannot pool zero column vectors")
    dims = {v.shape[0] for v in vectors}
    if len(dims) != 1:
        raise DimensionError(f"mixed column vector dimensions: {sorted(dims)}")
    stacked = np.stack(vectors)
    if mode is PoolingMode.MAX:
        return stacked.max(axis=0)
    return stacked.mean(axis=0)


def make_table_vector(
    table_id: str, col_vectors: list[np.ndarray], mode: PoolingMode
) -> TableVector:
    """Pool column vectors and L2-normalize; all-zero results are flagged, not scaled."""
    pooled = pool_columns(col_vectors, mode)
    norm = float(np.linalg.norm(pooled))
    if norm > 0.0:
        return TableVector(table_id=table_id, vector=pooled / norm, normalized=True)
    return TableVector(table_id=table_id, vector=pooled, normalized=False)
