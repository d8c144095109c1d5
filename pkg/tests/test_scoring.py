import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multirank.core import AnswerSet, Question
from multirank.matching import covered_answers
from multirank.scoring import (
    CoverageOracleScorer,
    LogLinearScorer,
    TabularScorer,
    UniformScorer,
    loglinear_log_probs,
    score_next,
)

from conftest import make_candidates

Q = Question("q", "which alpha beta", AnswerSet((("ans0",), ("ans1",), ("ans2",))))


def random_instance(rng):
    n = int(rng.integers(2, 12))
    texts = []
    for _ in range(n):
        cov = [f"ans{a}" for a in range(3) if rng.random() < 0.3]
        words = list(rng.choice(["alpha", "beta", "gamma", "delta"], size=rng.integers(1, 5)))
        texts.append(" ".join(words + cov))
    cs = make_candidates(texts, seed=int(rng.integers(1000)), scores=tuple(rng.normal(size=n)))
    m = int(rng.integers(0, n))
    prefix = tuple(int(i) for i in rng.permutation(np.arange(1, n + 1))[:m])
    return cs, prefix


def test_tabular_uniform_row():
    cs = make_candidates(["a", "b", "c", "d"])
    scorer = TabularScorer(4, {(): [0.25] * 4})
    assert np.allclose(scorer.score_next(Q, cs, ()), np.log(0.25))


def test_tabular_rejects_bad_rows():
    with pytest.raises(ValueError):
        TabularScorer(3, {(): [0.5, 0.5, 0.5]})
    with pytest.raises(ValueError):
        TabularScorer(3, {(): [0.5, 0.5]})


def test_tabular_json_roundtrip():
    scorer = TabularScorer(3, {(): [0.2, 0.3, 0.5], (1,): [0.0, 0.5, 0.5]})
    again = TabularScorer.from_json(scorer.to_json())
    cs = make_candidates(["a", "b", "c"])
    for prefix in [(), (1,), (2,)]:
        assert np.array_equal(scorer.score_next(Q, cs, prefix), again.score_next(Q, cs, prefix))


def test_coverage_oracle_prefers_new_answer():
    cs = make_candidates(["x ans0", "y ans0", "z ans1"])
    lp = CoverageOracleScorer().score_next(Q, cs, (1,))
    assert lp[2] > lp[1]


def test_loglinear_zero_weights_uniform():
    cs = make_candidates(["alpha ans0", "beta", "gamma ans1", "delta"], scores=(1.0, 2.0, 3.0, 4.0))
    lp = LogLinearScorer().score_next(Q, cs, (2,))
    assert np.allclose(lp, -np.log(4))


def test_unknown_prefix_index_rejected():
    cs = make_candidates(["a", "b"])
    for scorer in (UniformScorer(), CoverageOracleScorer(), LogLinearScorer()):
        with pytest.raises(ValueError):
            scorer.score_next(Q, cs, (3,))
        with pytest.raises(ValueError):
            scorer.score_next(Q, cs, (1, 1))


def test_normalization_fuzz():
    rng = np.random.default_rng(0)
    scorers = [
        UniformScorer(),
        CoverageOracleScorer(),
        CoverageOracleScorer(tau=0.05),
        LogLinearScorer(rng.normal(size=4) * 5),
    ]
    for _ in range(500):
        cs, prefix = random_instance(rng)
        for scorer in scorers:
            lp = score_next(scorer, Q, cs, prefix)
            assert lp.shape == (len(cs),)
            assert abs(1.0 - np.exp(lp).sum()) < 1e-9
        n = len(cs)
        tab = TabularScorer(n, {prefix: rng.dirichlet(np.ones(n))})
        assert abs(1.0 - np.exp(tab.score_next(Q, cs, prefix)).sum()) < 1e-9


def test_coverage_oracle_ordering_fuzz():
    rng = np.random.default_rng(1)
    scorer = CoverageOracleScorer()
    for _ in range(500):
        cs, prefix = random_instance(rng)
        lp = scorer.score_next(Q, cs, prefix)
        cov = [covered_answers(p, Q.answer_set) for p in cs.by_index]
        seen = set().union(*(cov[i - 1] for i in prefix)) if prefix else set()
        tier = [2 if c - seen else 1 if c else 0 for c in cov]
        for i in range(len(cs)):
            for j in range(len(cs)):
                if tier[i] > tier[j]:
                    assert lp[i] > lp[j]
                elif tier[i] == tier[j]:
                    assert lp[i] == lp[j]


@settings(max_examples=200)
@given(
    st.lists(st.lists(st.floats(-10, 10), min_size=4, max_size=4), min_size=1, max_size=10),
    st.lists(st.floats(-3, 3), min_size=4, max_size=4),
    st.floats(0.1, 10),
)
def test_loglinear_feature_scaling_invariance(features, w, c):
    F = np.array(features)
    w = np.array(w)
    assert np.allclose(loglinear_log_probs(F, w), loglinear_log_probs(c * F, w / c), atol=1e-9)


def test_loglinear_finite_for_large_weights():
    cs = make_candidates(["alpha ans0", "beta", "gamma ans1"], scores=(10.0, -10.0, 0.0))
    lp = LogLinearScorer([1e3, 1e3, -1e3, 1e3]).score_next(Q, cs, (1,))
    assert np.all(np.isfinite(lp))


def test_loglinear_weights_json(tmp_path):
    scorer = LogLinearScorer({"novelty": 2.0, "prior": -0.5})
    scorer.save(tmp_path / "w.json")
    again = LogLinearScorer.load(tmp_path / "w.json")
    assert np.array_equal(again.weights, scorer.weights)
    with pytest.raises(ValueError, match="unknown"):
        LogLinearScorer({"bogus": 1.0})


def test_novelty_feature_needs_answers():
    cs = make_candidates(["ans0", "beta"])
    with_ans = LogLinearScorer({"novelty": 3.0}).score_next(Q, cs, ())
    without = LogLinearScorer({"novelty": 3.0}, use_answers=False).score_next(Q, cs, ())
    assert with_ans[0] > with_ans[1]
    assert np.allclose(without, -np.log(2))
