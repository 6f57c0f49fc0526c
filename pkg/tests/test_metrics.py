"""Hand-computed metric cases, algebraic identities, and the self policy."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from tuslab.errors import (
    DegenerateInputError,
    EmptyGroundTruthError,
    MissingGroundTruthError,
)
from tuslab.metrics import (
    StageTimer,
    apply_self_policy,
    capped_recall_at_k,
    evaluate_rankings,
    gtfn_at_k,
    gtfp_at_k,
    ideal_at_k,
    precision_recall_at_k,
    timing,
)
from tuslab.search import Ranking


def _rank(query, *cands):
    return Ranking(query, [(c, 1.0 - 0.01 * i) for i, c in enumerate(cands)])


def test_perfect_retrieval_precision_one():
    rankings = [_rank("q", "a", "b")]
    gt = {"q": {"a", "b", "c"}}
    p, r = precision_recall_at_k(rankings, gt, 2)
    assert p == 1.0
    assert r == pytest.approx(2 / 3)


def test_precision_average_by_hand():
    rankings = [_rank("q1", "a", "x"), _rank("q2", "a", "b")]
    gt = {"q1": {"a", "b"}, "q2": {"a", "b"}}
    p, _ = precision_recall_at_k(rankings, gt, 2)
    assert p == pytest.approx(0.75)


def test_recall_contribution_by_hand():
    rankings = [_rank("q", "a", "x")]
    gt = {"q": {"a", "b", "c", "d"}}
    _, r = precision_recall_at_k(rankings, gt, 2)
    assert r == pytest.approx(0.25)


def test_missing_ground_truth_raises():
    with pytest.raises(MissingGroundTruthError):
        precision_recall_at_k([_rank("q", "a")], {"other": {"a"}}, 1)


def test_ideal_saturated():
    gt = {"q1": {"a", "b"}, "q2": {"c", "d", "e"}}
    p, r = ideal_at_k(gt, 2)
    assert p == 1.0


def test_ideal_closed_form():
    p, r = ideal_at_k({"q": {"a", "b", "c", "d", "e"}}, 10)
    assert p == pytest.approx(0.5)
    assert r == pytest.approx(1.0)


def test_ideal_errors():
    with pytest.raises(EmptyGroundTruthError):
        ideal_at_k({"q": set()}, 5)
    with pytest.raises(DegenerateInputError):
        ideal_at_k({"q": {"a"}}, 0)


def test_gtfp_no_disagreement():
    assert gtfp_at_k([_rank("q", "a", "b")], {"q": {"a", "b"}}, 2) == 0.0


def test_gtfp_by_hand():
    # N=2, k=2: one miss and zero misses -> 1/4
    rankings = [_rank("q1", "a", "x"), _rank("q2", "a", "b")]
    gt = {"q1": {"a", "b"}, "q2": {"a", "b"}}
    assert gtfp_at_k(rankings, gt, 2) == pytest.approx(0.25)


def test_gtfn_by_hand():
    # q1: |G|=3, k=2, 1 hit; q2: |G|=1, 1 hit -> (1+0)/(2+1)
    rankings = [_rank("q1", "a", "x"), _rank("q2", "m")]
    gt = {"q1": {"a", "b", "c"}, "q2": {"m"}}
    assert gtfn_at_k(rankings, gt, 2) == pytest.approx(1 / 3)


def test_gtfn_perfect_zero():
    assert gtfn_at_k([_rank("q", "a")], {"q": {"a"}}, 1) == 0.0


def _random_fixture(rng):
    n_cands = rng.randint(3, 30)
    cands = [f"c{i:02d}" for i in range(n_cands)]
    rankings = []
    gt = {}
    for qi in range(rng.randint(1, 8)):
        q = f"q{qi}"
        order = rng.sample(cands, rng.randint(1, n_cands))
        rankings.append(Ranking(q, [(c, 1.0 - 0.001 * i) for i, c in enumerate(order)]))
        gt[q] = set(rng.sample(cands, rng.randint(1, n_cands)))
    return rankings, gt


def test_gtfn_plus_capped_recall_is_one_everywhere():
    rng = random.Random(77)
    for _ in range(50):
        rankings, gt = _random_fixture(rng)
        k = rng.randint(1, 10)
        assert gtfn_at_k(rankings, gt, k) + capped_recall_at_k(rankings, gt, k) == pytest.approx(
            1.0, abs=1e-12
        )


def test_gtfp_equals_gtfn_when_gt_saturates_k():
    rng = random.Random(99)
    for _ in range(50):
        n_cands = rng.randint(8, 30)
        cands = [f"c{i:02d}" for i in range(n_cands)]
        k = rng.randint(1, 5)
        rankings, gt = [], {}
        for qi in range(rng.randint(1, 6)):
            q = f"q{qi}"
            order = rng.sample(cands, n_cands)  # full-length rankings
            rankings.append(Ranking(q, [(c, 1.0 - 0.001 * i) for i, c in enumerate(order)]))
            gt[q] = set(rng.sample(cands, rng.randint(k, n_cands)))  # |G| >= k
        assert gtfp_at_k(rankings, gt, k) == gtfn_at_k(rankings, gt, k)


def test_metrics_query_permutation_invariant():
    rng = random.Random(13)
    rankings, gt = _random_fixture(rng)
    shuffled = rankings[:]
    rng.shuffle(shuffled)
    for k in (1, 3):
        assert precision_recall_at_k(rankings, gt, k) == precision_recall_at_k(shuffled, gt, k)
        assert gtfp_at_k(rankings, gt, k) == gtfp_at_k(shuffled, gt, k)


def test_brute_force_fraction_oracle():
    rng = random.Random(1234)
    for _ in range(30):
        rankings, gt = _random_fixture(rng)
        k = rng.randint(1, 8)
        N = len(rankings)
        p_frac = sum(
            Fraction(len({c for c, _ in r.entries[:k]} & gt[r.query_id]), k) for r in rankings
        ) / N
        r_frac = sum(
            Fraction(
                len({c for c, _ in r.entries[:k]} & gt[r.query_id]), len(gt[r.query_id])
            )
            for r in rankings
        ) / N
        p, r = precision_recall_at_k(rankings, gt, k)
        assert abs(p - float(p_frac)) < 1e-12
        assert abs(r - float(r_frac)) < 1e-12


def test_apply_self_policy_strips_query_from_both_sides():
    rankings = [_rank("q", "q", "a")]
    gt = {"q": {"q", "a"}}
    r2, gt2 = apply_self_policy(rankings, gt, count_self=False)
    assert [c for c, _ in r2[0].entries] == ["a"]
    assert gt2 == {"q": {"a"}}
    same_r, same_gt = apply_self_policy(rankings, gt, count_self=True)
    assert same_r is rankings and same_gt is gt


def test_self_inclusive_gtfp_at_1_is_zero():
    rankings = [_rank("q1", "q1", "x"), _rank("q2", "q2", "y")]
    gt = {"q1": {"q1"}, "q2": {"q2", "y"}}
    assert gtfp_at_k(rankings, gt, 1) == 0.0


def test_empty_gt_queries_dropped_from_averages():
    rankings = [_rank("q1", "a"), _rank("q2", "b")]
    gt = {"q1": {"a"}, "q2": set()}
    p, r = precision_recall_at_k(rankings, gt, 1)
    assert p == 1.0 and r == 1.0
    report = evaluate_rankings(rankings, gt, [1])
    assert report.query_count == 1 and report.dropped_empty_gt == 1


def test_evaluate_rankings_report_shape_and_bounds():
    rankings = [_rank("q1", "a", "x"), _rank("q2", "b", "c")]
    gt = {"q1": {"a", "b"}, "q2": {"b", "c", "d"}}
    report = evaluate_rankings(rankings, gt, [1, 2], method="tfidf", benchmark="toy")
    d = report.to_dict()
    assert set(d["metrics"]) == {"1", "2"}
    for k in (1, 2):
        m = report.per_k[k]
        assert 0.0 <= m["p_at_k"] <= m["ideal_p_at_k"] + 1e-9
        assert 0.0 <= m["r_at_k"] <= m["ideal_r_at_k"] + 1e-9
    rows = report.csv_rows()
    assert len(rows) == 2 and rows[0][0] == "tfidf"


def test_stage_timer_and_averaging():
    t1 = StageTimer()
    with t1.stage("load"):
        pass
    with t1.stage("search"):
        pass
    off, on = timing([t1])
    assert off >= 0.0 and on >= 0.0
    t2 = StageTimer()
    with t2.stage("vectorize"):
        pass
    off2, on2 = timing([t1, t2])
    assert on2 == pytest.approx(t1.online_seconds / 2)
    with pytest.raises(DegenerateInputError):
        timing([])


def test_zero_query_run_online_is_zero():
    t = StageTimer()
    with t.stage("load"):
        pass
    assert t.online_seconds == 0.0
