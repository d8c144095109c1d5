"""Multi-answer retrieval metrics and evaluation reports."""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import asdict, dataclass, field

from .core import AnswerSet, Passage, Question
from .matching import covered_answers

Coverage = Sequence[frozenset[int]]


def coverage(answer_set: AnswerSet, passages: Sequence[Passage | str]) -> list[frozenset[int]]:
    """Distinct answers (0-based positions) covered by each passage, in rank order."""
    return [covered_answers(p, answer_set) for p in passages]


def recall_at_k(answer_set: AnswerSet, passages: Sequence[Passage | str], k: int | None = None) -> bool:
    """True iff any answer is covered by one of the first ``k`` passages."""
    k = len(passages) if k is None else k
    if k < 1:
        raise ValueError("k must be >= 1")
    return any(coverage(answer_set, passages[:k]))


def mrecall_from_coverage(n: int, covered: int, k: int) -> bool:
    if n <= k:
        return covered == n
    return covered >= k


def mrecall_at_k(answer_set: AnswerSet, passages: Sequence[Passage | str], k: int | None = None) -> bool:
    """All answers covered when n <= k, otherwise at least k of them.

    ``k`` defaults to ``len(passages)``; only the first ``k`` passages count.
    """
    k = len(passages) if k is None else k
    if k < 1:
        raise ValueError("k must be >= 1")
    n = len(answer_set)
    if n < 1:
        raise ValueError("answer set is empty")
    covered = set().union(*coverage(answer_set, passages[:k]))
    return mrecall_from_coverage(n, len(covered), k)


def alpha_dcg(cov: Coverage, alpha: float = 0.9) -> float:
    """Sum over ranks i (1-based) of G_i / log2(i + 1).

    G_i adds (1 - alpha) ** m for every answer the passage covers, where m
    counts earlier passages covering that answer.
    """
    seen: dict[int, int] = {}
    total = 0.0
    for rank, answers in enumerate(cov, start=1):
        gain = 0.0
        for a in answers:
            gain += (1.0 - alpha) ** seen.get(a, 0)
            seen[a] = seen.get(a, 0) + 1
        total += gain / math.log2(rank + 1)
    return total


def greedy_ideal_order(cov: Coverage, alpha: float = 0.9) -> list[int]:
    """Reorder by repeatedly taking the passage with the largest marginal gain (earliest on ties)."""
    remaining = list(range(len(cov)))
    seen: dict[int, int] = {}
    order = []
    while remaining:
        gains = [sum((1.0 - alpha) ** seen.get(a, 0) for a in cov[j]) for j in remaining]
        best = max(range(len(remaining)), key=lambda i: (gains[i], -i))
        j = remaining.pop(best)
        order.append(j)
        for a in cov[j]:
            seen[a] = seen.get(a, 0) + 1
    return order


def ideal_alpha_dcg(cov: Coverage, alpha: float = 0.9, exact: bool = False) -> float:
    """Best achievable alpha-DCG over reorderings of the same passages.

    ``exact`` enumerates all orderings (limited to 8 passages); otherwise
    the greedy reordering is used.
    """
    if exact:
        if len(cov) > 8:
            raise ValueError("exact ideal is limited to 8 passages")
        return max((alpha_dcg([cov[j] for j in perm], alpha) for perm in itertools.permutations(range(len(cov)))), default=0.0)
    return alpha_dcg([cov[j] for j in greedy_ideal_order(cov, alpha)], alpha)


def alpha_ndcg_from_coverage(cov: Coverage, alpha: float = 0.9, exact: bool = False) -> float:
    dcg = alpha_dcg(cov, alpha)
    # greedy can fall short of the submitted order; the submitted order is then the better bound
    ideal = max(ideal_alpha_dcg(cov, alpha, exact), dcg)
    if ideal == 0.0:
        return 0.0
    return dcg / ideal


def alpha_ndcg_at_k(
    answer_set: AnswerSet,
    ranked: Sequence[Passage | str],
    alpha: float = 0.9,
    k: int | None = None,
    exact: bool = False,
) -> float:
    """alpha-NDCG@k normalized by an ideal reordering of the same k passages."""
    k = len(ranked) if k is None else k
    if k < 1:
        raise ValueError("k must be >= 1")
    return alpha_ndcg_from_coverage(coverage(answer_set, ranked[:k]), alpha, exact)


# --------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class QuestionRecord:
    qid: str
    n_answers: int
    covered: int
    recall: bool
    mrecall: bool
    alpha_ndcg: float
    depth: int | None = None


def evaluate_question(
    question: Question,
    ranked: Sequence[Passage],
    k: int,
    alpha: float = 0.9,
    depth: int | None = None,
    exact_ideal: bool = False,
) -> QuestionRecord:
    if question.answer_set is None:
        raise ValueError(f"question {question.id} has no answer set")
    cov = coverage(question.answer_set, ranked[:k])
    covered = len(set().union(*cov))
    n = len(question.answer_set)
    return QuestionRecord(
        qid=question.id,
        n_answers=n,
        covered=covered,
        recall=covered > 0,
        mrecall=mrecall_from_coverage(n, covered, k),
        alpha_ndcg=alpha_ndcg_from_coverage(cov, alpha, exact_ideal),
        depth=depth,
    )


def _mean(xs) -> float:
    xs = list(xs)
    return sum(xs) / len(xs) if xs else 0.0


def aggregate(records: Sequence[QuestionRecord]) -> dict[str, float]:
    """Percentages of recall and MRecall plus mean alpha-NDCG (x100), as reported in result tables."""
    return {
        "questions": len(records),
        "recall": 100.0 * _mean(r.recall for r in records),
        "mrecall": 100.0 * _mean(r.mrecall for r in records),
        "alpha_ndcg": 100.0 * _mean(r.alpha_ndcg for r in records),
    }


def breakdown_report(
    records: Sequence[QuestionRecord],
    metric: str = "mrecall",
    cap: int | None = None,
) -> list[dict]:
    """Metric per answer-count bucket with each bucket's share of questions.

    ``cap`` folds every n >= cap into one bucket labelled ``"{cap}+"``.
    """
    buckets: dict[int, list[QuestionRecord]] = {}
    for r in records:
        key = r.n_answers if cap is None else min(r.n_answers, cap)
        buckets.setdefault(key, []).append(r)
    rows = []
    for key in sorted(buckets):
        sub = buckets[key]
        label = f"{key}+" if cap is not None and key == cap else str(key)
        rows.append({
            "bucket": label,
            "count": len(sub),
            "percent": 100.0 * len(sub) / len(records),
            metric: aggregate(sub)[metric],
        })
    return rows


@dataclass
class EvalReport:
    records: list[QuestionRecord]
    k: int
    alpha: float = 0.9
    beta: float | None = None
    gamma: float | None = None
    algo: str | None = None
    all: dict = field(init=False)
    multi: dict = field(init=False)
    mean_depth: float | None = field(init=False)

    def __post_init__(self):
        self.records = sorted(self.records, key=lambda r: r.qid)
        self.all = aggregate(self.records)
        self.multi = aggregate([r for r in self.records if r.n_answers > 1])
        depths = [r.depth for r in self.records if r.depth is not None]
        self.mean_depth = round(_mean(depths), 1) if depths else None

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "algo": self.algo,
            "all": self.all,
            "multi_answer": self.multi,
            "mean_depth": self.mean_depth,
            "breakdown": breakdown_report(self.records) if self.records else [],
            "questions": [asdict(r) for r in self.records],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        lines = [
            f"k={self.k} alpha={self.alpha} beta={self.beta} gamma={self.gamma} algo={self.algo}",
            f"{'subset':<10}{'#q':>6}{'Recall':>10}{'MRecall':>10}{'a-NDCG':>10}",
        ]
        for name, agg in (("all", self.all), ("n>1", self.multi)):
            lines.append(
                f"{name:<10}{agg['questions']:>6}{agg['recall']:>10.1f}{agg['mrecall']:>10.1f}{agg['alpha_ndcg']:>10.1f}"
            )
        if self.mean_depth is not None:
            lines.append(f"mean tree depth d = {self.mean_depth:.1f}")
        if self.records:
            lines.append(f"{'answers':<10}{'#q':>6}{'%q':>10}{'MRecall':>10}")
            for row in breakdown_report(self.records):
                lines.append(f"{row['bucket']:<10}{row['count']:>6}{row['percent']:>10.1f}{row['mrecall']:>10.1f}")
        return "\n".join(lines) + "\n"


def evaluate(
    questions: Mapping[str, Question],
    rankings: Mapping[str, Sequence[Passage]],
    k: int,
    alpha: float = 0.9,
    depths: Mapping[str, int] | None = None,
    **meta,
) -> EvalReport:
    records = []
    for qid, ranked in rankings.items():
        depth = None if depths is None else depths.get(qid)
        records.append(evaluate_question(questions[qid], ranked, k, alpha, depth))
    return EvalReport(records, k=k, alpha=alpha, **meta)
