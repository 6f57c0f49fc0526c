"""Tokenizer, vectorizers, vocabulary, pooling, and serialization behavior."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from tuslab.errors import DegenerateInputError, DimensionError
from tuslab.vectorize import (
    ColumnDocument,
    PoolingMode,
    VectorizerConfig,
    VectorizerKind,
    build_column_document,
    build_vocabulary,
    fnv1a_32,
    make_table_vector,
    pool_columns,
    serialize_for_embedding,
    tokenize,
    vectorize_column,
)

from .conftest import build_table


def _doc(text, column_id="t:0", name="c"):
    return ColumnDocument(column_id=column_id, text=text, name=name)


def test_tokenize_unigrams():
    assert tokenize("red car", (1, 1)) == ["red", "car"]


def test_tokenize_bigrams_enumerated_by_hand():
    assert tokenize("red car", (1, 2)) == ["red", "car", "red car"]


def test_tokenize_drops_single_char_tokens():
    assert tokenize("a x", (1, 1)) == []
    assert tokenize("a bc d", (1, 1)) == ["bc"]


def test_tokenize_alphanumeric_runs():
    assert tokenize("ab_cd 42 x!", (1, 1)) == ["ab", "cd", "42"]


def test_fnv1a_32_known_vectors():
    # fixed 32-bit FNV-1a reference values
    assert fnv1a_32(b"") == 0x811C9DC5
    assert fnv1a_32(b"a") == 0xE40C292C
    assert fnv1a_32(b"foobar") == 0xBF9CF968


def test_build_column_document_lowercases_and_joins():
    t = build_table("t", ["c"], [["A"], ["B"]])
    doc = build_column_document(t.columns[0], 1000, seed=0, table_id="t")
    assert sorted(doc.text.split()) == ["a", "b"]
    assert doc.column_id == "t:0" and doc.name == "c"


def test_build_column_document_empty_column():
    t = build_table("t", ["c"], [[None]])
    assert build_column_document(t.columns[0], 10, 0).text == ""


def test_build_column_document_caps_at_n():
    t = build_table("t", ["c"], [[f"w{i}"] for i in range(1500)])
    doc = build_column_document(t.columns[0], 1000, seed=5)
    assert len(doc.text.split()) == 1000


def test_count_vectorizer_by_hand():
    cfg = VectorizerConfig(VectorizerKind.COUNT, dim=8, ngram_range=(1, 1))
    vocab = build_vocabulary([_doc("xx xx yy")], cfg)
    v = vectorize_column(_doc("xx xx yy"), cfg, vocab)
    ix, iy = vocab.index["xx"], vocab.index["yy"]
    assert v[ix] == 2.0 and v[iy] == 1.0
    assert v.sum() == 3.0  # everything else zero


def test_hashing_empty_document_is_zero():
    cfg = VectorizerConfig(VectorizerKind.HASHING, dim=16, ngram_range=(1, 1))
    v = vectorize_column(_doc(""), cfg)
    assert not v.any()


def test_tfidf_single_document_identity():
    cfg = VectorizerConfig(VectorizerKind.TFIDF, dim=8, ngram_range=(1, 1))
    vocab = build_vocabulary([_doc("xx")], cfg)
    v = vectorize_column(_doc("xx"), cfg, vocab)
    # idf = ln(2/2) + 1 = 1; single term normalizes to 1
    assert v[vocab.index["xx"]] == pytest.approx(1.0)
    assert np.linalg.norm(v) == pytest.approx(1.0)


def test_tfidf_idf_formula_by_hand():
    cfg = VectorizerConfig(VectorizerKind.TFIDF, dim=8, ngram_range=(1, 1))
    docs = [_doc("xx yy"), _doc("xx"), _doc("xx zz")]
    vocab = build_vocabulary(docs, cfg)
    v = vectorize_column(_doc("xx yy"), cfg, vocab)
    idf_x = math.log(4 / 4) + 1      # df=3, N=3
    idf_y = math.log(4 / 2) + 1      # df=1
    raw = np.zeros(8)
    raw[vocab.index["xx"]] = idf_x
    raw[vocab.index["yy"]] = idf_y
    raw /= np.linalg.norm(raw)
    np.testing.assert_allclose(v, raw, atol=1e-12)


def test_hashing_bag_semantics_order_invariant():
    cfg = VectorizerConfig(VectorizerKind.HASHING, dim=64, ngram_range=(1, 1))
    v1 = vectorize_column(_doc("one two three two"), cfg)
    v2 = vectorize_column(_doc("two three two one"), cfg)
    np.testing.assert_array_equal(v1, v2)


def test_unit_norms_hashing_and_tfidf():
    rng = random.Random(3)
    words = [f"w{i}" for i in range(40)]
    docs = [_doc(" ".join(rng.choices(words, k=rng.randint(1, 30)))) for _ in range(20)]
    hcfg = VectorizerConfig(VectorizerKind.HASHING, dim=128, ngram_range=(1, 1))
    tcfg = VectorizerConfig(VectorizerKind.TFIDF, dim=128, ngram_range=(1, 2))
    vocab = build_vocabulary(docs, tcfg)
    for d in docs:
        assert np.linalg.norm(vectorize_column(d, hcfg)) == pytest.approx(1.0, abs=1e-6)
        assert np.linalg.norm(vectorize_column(d, tcfg, vocab)) == pytest.approx(1.0, abs=1e-6)


def test_vocabulary_deterministic_and_capped():
    cfg = VectorizerConfig(VectorizerKind.COUNT, dim=3, ngram_range=(1, 1))
    docs = [_doc("aa bb"), _doc("aa cc"), _doc("aa dd")]
    v1 = build_vocabulary(docs, cfg)
    v2 = build_vocabulary(docs, cfg)
    assert v1.index == v2.index
    assert len(v1.index) == 3
    # aa has df 3; bb/cc/dd tie at df 1, lexicographic keeps bb and cc
    assert set(v1.index) == {"aa", "bb", "cc"}
    assert sorted(v1.index.values()) == [0, 1, 2]


def test_vocabulary_includes_all_docs_in_n():
    cfg = VectorizerConfig(VectorizerKind.TFIDF, dim=16, ngram_range=(1, 1))
    vocab = build_vocabulary([_doc("aa"), _doc("bb"), _doc("")], cfg)
    assert vocab.n_docs == 3


def test_vocab_requirement_enforced():
    hcfg = VectorizerConfig(VectorizerKind.HASHING, dim=8, ngram_range=(1, 1))
    ccfg = VectorizerConfig(VectorizerKind.COUNT, dim=8, ngram_range=(1, 1))
    vocab = build_vocabulary([_doc("xx")], ccfg)
    with pytest.raises(ValueError):
        vectorize_column(_doc("xx"), ccfg, None)
    with pytest.raises(ValueError):
        vectorize_column(_doc("xx"), hcfg, vocab)


def test_serialize_variants():
    t = build_table("t", ["city"], [["Paris"]])
    col = t.columns[0]
    assert serialize_for_embedding(col, "vc", 10, 0) == "city: Paris"
    assert serialize_for_embedding(col, "c", 10, 0) == "city"
    assert serialize_for_embedding(col, "v", 10, 0) == "Paris"


def test_serialize_preserves_casing_and_empty():
    t = build_table("t", ["Name"], [["MiXeD"]])
    assert "MiXeD" in serialize_for_embedding(t.columns[0], "vc", 10, 0)
    empty = build_table("t", ["c"], [[None]])
    assert serialize_for_embedding(empty.columns[0], "v", 10, 0) == ""


def test_pool_max_and_mean_by_hand():
    a = np.array([1.0, 0.0])
    b = np.array([0.0, 2.0])
    np.testing.assert_array_equal(pool_columns([a, b], PoolingMode.MAX), [1.0, 2.0])
    c = np.array([0.0, 1.0])
    np.testing.assert_array_equal(pool_columns([a, c], PoolingMode.MEAN), [0.5, 0.5])


def test_pool_single_vector_identity():
    a = np.array([0.3, 0.7])
    np.testing.assert_array_equal(pool_columns([a], PoolingMode.MAX), a)
    np.testing.assert_array_equal(pool_columns([a], PoolingMode.MEAN), a)


def test_pool_max_idempotent():
    vecs = [np.array([1.0, 0.5]), np.array([0.2, 2.0])]
    m = pool_columns(vecs, PoolingMode.MAX)
    np.testing.assert_array_equal(pool_columns(vecs + [m], PoolingMode.MAX), m)


def test_pool_errors():
    with pytest.raises(DegenerateInputError):
        pool_columns([], PoolingMode.MAX)
    with pytest.raises(DimensionError):
        pool_columns([np.zeros(2), np.zeros(3)], PoolingMode.MAX)


def test_make_table_vector_normalizes_and_flags_zero():
    tv = make_table_vector("t", [np.array([3.0, 4.0])], PoolingMode.MAX)
    assert tv.normalized and np.linalg.norm(tv.vector) == pytest.approx(1.0)
    zv = make_table_vector("z", [np.zeros(2)], PoolingMode.MEAN)
    assert not zv.normalized and not zv.vector.any()


def test_end_to_end_determinism_same_seed():
    t = build_table("t", ["c"], [[f"w{i % 7}"] for i in range(30)])
    cfg = VectorizerConfig(VectorizerKind.HASHING, dim=64, ngram_range=(1, 1))
    docs1 = [build_column_document(c, 5, seed=9, table_id="t") for c in t.columns]
    docs2 = [build_column_document(c, 5, seed=9, table_id="t") for c in t.columns]
    v1 = make_table_vector("t", [vectorize_column(d, cfg) for d in docs1], PoolingMode.MAX)
    v2 = make_table_vector("t", [vectorize_column(d, cfg) for d in docs2], PoolingMode.MAX)
    assert v1.vector.tobytes() == v2.vector.tobytes()


def test_config_validation():
    with pytest.raises(ValueError):
        VectorizerConfig(VectorizerKind.HASHING, dim=0)
    with pytest.raises(ValueError):
        VectorizerConfig(VectorizerKind.HASHING, ngram_range=(2, 1))
    with pytest.raises(ValueError):
        tokenize("x", (0, 1))
