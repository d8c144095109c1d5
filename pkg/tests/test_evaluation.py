import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multirank.core import AnswerSet, Question
from multirank.evaluation import (
    alpha_dcg,
    alpha_ndcg_at_k,
    alpha_ndcg_from_coverage,
    breakdown_report,
    evaluate,
    evaluate_question,
    ideal_alpha_dcg,
    mrecall_at_k,
    recall_at_k,
)

ANS = AnswerSet((("ans0",), ("ans1", "alias one"), ("ans2",)))


def texts(*covers):
    return [" ".join(["filler"] + [f"ans{a}" for a in c]) for c in covers]


def test_recall_examples():
    assert recall_at_k(ANS, texts((), (), (0,), (), ()))
    assert not recall_at_k(ANS, texts((), ()))
    assert recall_at_k(AnswerSet((("first alias", "second alias"),)), ["has the second alias here"])


def test_recall_respects_k():
    assert not recall_at_k(ANS, texts((), (0,)), k=1)


def test_mrecall_examples():
    two = AnswerSet((("a0",), ("a1",)))
    assert mrecall_at_k(two, ["a0", "a1", "x", "y", "z"])
    seven = AnswerSet(tuple((f"a{i}",) for i in range(7)))
    assert mrecall_at_k(seven, [f"a{i}" for i in range(5)])
    three = AnswerSet((("a0",), ("a1",), ("a2",)))
    assert not mrecall_at_k(three, ["a0", "a1", "x", "y", "z"])


def test_mrecall_k5_vs_k10_witness():
    seven = AnswerSet(tuple((f"a{i}",) for i in range(7)))
    ranked = [f"a{i}" for i in range(5)] + [f"x{i}" for i in range(5)]
    assert mrecall_at_k(seven, ranked, k=5)
    assert not mrecall_at_k(seven, ranked, k=10)


@given(st.lists(st.sets(st.integers(0, 2), max_size=3), min_size=1, max_size=6), st.sets(st.integers(0, 2), max_size=3))
def test_mrecall_monotone_in_coverage(covs, extra):
    base = texts(*covs)
    k = len(base) + 1
    before = mrecall_at_k(ANS, base + ["filler"], k)
    after = mrecall_at_k(ANS, base + texts(extra), k)
    assert not (before and not after)


@given(st.lists(st.sets(st.integers(0, 0), max_size=1), min_size=1, max_size=6))
def test_mrecall_equals_recall_for_single_answer(covs):
    one = AnswerSet((("ans0",),))
    ranked = texts(*covs)
    assert mrecall_at_k(one, ranked) == recall_at_k(one, ranked)


def test_alpha_ndcg_examples():
    one = AnswerSet((("ans0",),))
    assert alpha_ndcg_at_k(one, texts((0,), (), ())) == 1.0
    assert alpha_dcg([{0}, {0}], 0.9) == pytest.approx(1 + 0.1 / math.log2(3), abs=1e-12)
    assert alpha_ndcg_at_k(one, texts((0,), (0,))) == pytest.approx(1.0, abs=1e-12)
    assert alpha_ndcg_at_k(ANS, texts((), ())) == 0.0


def test_alpha_ndcg_penalizes_redundancy_order():
    # covering a new answer second beats repeating the first one
    good = alpha_ndcg_from_coverage([{0}, {1}, {0}], exact=True)
    bad = alpha_ndcg_from_coverage([{0}, {0}, {1}], exact=True)
    assert good == 1.0 and bad < 1.0


@given(st.lists(st.sets(st.integers(0, 3), max_size=3), min_size=1, max_size=6), st.floats(0.0, 1.0))
def test_alpha_ndcg_bounds(cov, alpha):
    for exact in (False, True):
        v = alpha_ndcg_from_coverage(cov, alpha, exact)
        assert 0.0 <= v <= 1.0 + 1e-12


@given(st.lists(st.sets(st.integers(0, 3), max_size=3), min_size=1, max_size=6))
def test_greedy_ideal_never_exceeds_exact(cov):
    assert ideal_alpha_dcg(cov, 0.9) <= ideal_alpha_dcg(cov, 0.9, exact=True) + 1e-12


def test_exact_ideal_size_limit():
    with pytest.raises(ValueError):
        ideal_alpha_dcg([{0}] * 9, exact=True)


def fixture_records():
    qs = {
        "a": Question("a", "", AnswerSet((("ans0",),))),
        "b": Question("b", "", AnswerSet((("ans0",), ("ans1",)))),
        "c": Question("c", "", AnswerSet((("ans0",), ("ans1",), ("ans2",)))),
        "d": Question("d", "", AnswerSet((("ans0",), ("ans1",)))),
    }
    ranked = {
        "a": texts((0,), ()),
        "b": texts((0,), (1,)),
        "c": texts((0,), (0,)),
        "d": texts((), ()),
    }
    return qs, ranked


def test_report_aggregates_recompute():
    qs, ranked = fixture_records()
    report = evaluate(qs, ranked, k=2, depths={"a": 1, "b": 2, "c": 1, "d": 1})
    assert report.all["mrecall"] == pytest.approx(100 * np.mean([r.mrecall for r in report.records]))
    multi = [r for r in report.records if r.n_answers > 1]
    assert report.multi["questions"] == 3
    assert report.multi["recall"] == pytest.approx(100 * np.mean([r.recall for r in multi]))
    assert report.mean_depth == 1.2
    assert "MRecall" in report.table()


def test_breakdown_buckets():
    qs, ranked = fixture_records()
    report = evaluate(qs, ranked, k=2)
    rows = breakdown_report(report.records)
    assert [r["bucket"] for r in rows] == ["1", "2", "3"]
    assert sum(r["count"] for r in rows) == 4
    for row in rows:
        sub = [r for r in report.records if str(r.n_answers) == row["bucket"]]
        assert row["mrecall"] == pytest.approx(100 * np.mean([r.mrecall for r in sub]))
        assert row["percent"] == pytest.approx(100 * len(sub) / 4)
    capped = breakdown_report(report.records, cap=2)
    assert [r["bucket"] for r in capped] == ["1", "2+"]


def test_single_bucket():
    one = [evaluate_question(Question(str(i), "", AnswerSet((("ans0",),))), texts((0,)), 1) for i in range(3)]
    assert len(breakdown_report(one)) == 1


def test_report_json_stable():
    qs, ranked = fixture_records()
    a = evaluate(qs, ranked, k=2).dumps()
    b = evaluate(qs, dict(reversed(list(ranked.items()))), k=2).dumps()
    assert a == b
