"""Training supervision for the reranker.

Dynamic-oracle examples pair the greedy positive set with a simulated
prefix; at step ``t`` every positive not yet in the prefix is a correct
next passage. Teacher-forcing examples instead fix one target order.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Union

import numpy as np

from .core import CandidateSet, Question, SupervisionExample
from .matching import preproc_positives
from .scoring import FEATURES, FeatureExtractor, LogLinearScorer, Scorer, log_softmax

logger = logging.getLogger(__name__)


def sample_negatives(
    candidate_set: CandidateSet,
    positives: Sequence[int],
    count: int,
    prior_scores: Sequence[float] | None = None,
    gamma: float = 1.0,
    seed: int | np.random.Generator = 0,
) -> list[int]:
    """Top-``count`` of B minus positives by ``s(p) + gamma * g``, g ~ Gumbel(0, 1).

    ``prior_scores`` is aligned with index order and defaults to the
    candidate set's first-stage prior. Ties go to the lower index. Noise
    is drawn even when ``gamma == 0`` so the random stream does not
    depend on gamma.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    pos = set(positives)
    pool = np.array([i for i in candidate_set.indexes if i not in pos], dtype=int)
    if count < 0 or count > len(pool):
        raise ValueError(f"cannot sample {count} negatives from {len(pool)} non-positive candidates")
    if count == 0:
        return []
    s = candidate_set.prior_scores() if prior_scores is None else np.asarray(prior_scores, dtype=float)
    if s.shape != (len(candidate_set),):
        raise ValueError("prior_scores must have one value per candidate")
    rng = np.random.default_rng(seed)
    perturbed = s[pool - 1] + gamma * rng.gumbel(size=len(pool))
    order = np.lexsort((pool, -perturbed))
    return [int(i) for i in pool[order[:count]]]


def build_dynamic_oracle_example(
    question: Question,
    candidate_set: CandidateSet,
    k: int,
    gamma: float = 1.0,
    seed: int = 0,
    pool_fraction: float | None = None,
) -> SupervisionExample | None:
    """Simulated prefix of length ``k``: the positives plus ``k - |O|`` negatives, shuffled.

    Returns ``None`` (and logs a warning) when no candidate covers an
    answer. With ``pool_fraction`` the example also records a subsample
    of roughly ``pool_fraction * |B|`` candidates that the loss is
    normalized over.
    """
    if question.answer_set is None:
        raise ValueError(f"question {question.id} has no answer set")
    if k > len(candidate_set):
        raise ValueError(f"k={k} exceeds |B|={len(candidate_set)}")
    positives = preproc_positives(k, question.answer_set, candidate_set)
    if not positives:
        logger.warning("question %s: no candidate covers an answer, skipped", question.id)
        return None
    rng = np.random.default_rng(seed)
    n_neg = k - len(positives)
    n_pool = n_neg
    if pool_fraction is not None:
        n_pool = max(n_neg, int(round(pool_fraction * len(candidate_set))) - len(positives))
        n_pool = min(n_pool, len(candidate_set) - len(positives))
    negatives = sample_negatives(candidate_set, positives, n_pool, gamma=gamma, seed=rng)
    prefix = [*positives, *negatives[:n_neg]]
    rng.shuffle(prefix)
    pool = None
    if pool_fraction is not None:
        pool = tuple(sorted([*positives, *negatives]))
    return SupervisionExample(
        question_id=question.id,
        positives=frozenset(positives),
        prefix=tuple(int(i) for i in prefix),
        pool=pool,
    )


@dataclass(frozen=True)
class TeacherForcingExample:
    question_id: str
    sequence: tuple[int, ...]

    def steps(self) -> list[tuple[tuple[int, ...], frozenset[int]]]:
        return [(self.sequence[: t - 1], frozenset({o})) for t, o in enumerate(self.sequence, start=1)]

    def to_record(self) -> dict:
        return {"qid": self.question_id, "sequence": list(self.sequence)}


def build_teacher_forcing_example(
    question: Question,
    candidate_set: CandidateSet,
    k: int,
    baseline_ranking: Sequence[int] | None = None,
) -> TeacherForcingExample | None:
    """Positive set ordered by a baseline ranking (best first).

    ``baseline_ranking`` lists candidate indexes best-first; by default the
    first-stage retrieval order is used.
    """
    if question.answer_set is None:
        raise ValueError(f"question {question.id} has no answer set")
    positives = preproc_positives(k, question.answer_set, candidate_set)
    if not positives:
        logger.warning("question %s: no candidate covers an answer, skipped", question.id)
        return None
    if baseline_ranking is None:
        rank = {i: candidate_set.baseline_rank(i) for i in candidate_set.indexes}
    else:
        rank = {int(i): r for r, i in enumerate(baseline_ranking)}
    missing = [p for p in positives if p not in rank]
    if missing:
        raise ValueError(f"baseline ranking does not rank positives {missing}")
    return TeacherForcingExample(question.id, tuple(sorted(positives, key=rank.__getitem__)))


Example = Union[SupervisionExample, TeacherForcingExample]


def _restrict(log_probs: np.ndarray, pool: Sequence[int] | None) -> np.ndarray:
    if pool is None:
        return log_probs
    out = np.full_like(log_probs, -np.inf)
    idx = np.asarray(pool) - 1
    out[idx] = log_softmax(log_probs[idx])
    return out


def dynamic_oracle_loss(scorer: Scorer, question: Question, candidate_set: CandidateSet, example: Example) -> float:
    """Sum over steps of -log P(o | prefix) for every remaining target o."""
    pool = getattr(example, "pool", None)
    total = 0.0
    for prefix, targets in example.steps():
        if not targets:
            continue
        lp = _restrict(scorer.score_next(question, candidate_set, prefix), pool)
        total -= float(sum(lp[o - 1] for o in targets))
    return total


teacher_forcing_loss = dynamic_oracle_loss


# --------------------------------------------------------------------------
# log-linear training


class Objective:
    """Mean supervision loss of a log-linear scorer as a function of its weights.

    Feature matrices are extracted once; ``value_and_grad`` is then pure
    numpy. Examples are reduced in the order given.
    """

    def __init__(
        self,
        instances: Sequence[tuple[Question, CandidateSet, Example]],
        use_answers: bool = True,
    ):
        extract = FeatureExtractor(use_answers=use_answers)
        self.steps: list[list[tuple[np.ndarray, np.ndarray]]] = []
        for question, candidate_set, example in instances:
            pool = getattr(example, "pool", None)
            rows = None if pool is None else np.asarray(pool) - 1
            per_example = []
            for prefix, targets in example.steps():
                if not targets:
                    continue
                F = extract(question, candidate_set, prefix)
                tgt = np.array(sorted(targets)) - 1
                if rows is not None:
                    F = F[rows]
                    tgt = np.searchsorted(rows, tgt)
                per_example.append((F, tgt))
            self.steps.append(per_example)
        if not self.steps:
            raise ValueError("no training examples")

    def __len__(self) -> int:
        return len(self.steps)

    def example_value_and_grad(self, i: int, w: np.ndarray) -> tuple[float, np.ndarray]:
        loss = 0.0
        grad = np.zeros(len(FEATURES))
        for F, tgt in self.steps[i]:
            lp = log_softmax(F @ w)
            p = np.exp(lp)
            loss -= float(lp[tgt].sum())
            grad += len(tgt) * (F.T @ p) - F[tgt].sum(axis=0)
        return loss, grad

    def value_and_grad(self, w: Sequence[float]) -> tuple[float, np.ndarray]:
        w = np.asarray(w, dtype=float)
        loss = 0.0
        grad = np.zeros(len(FEATURES))
        for i in range(len(self.steps)):
            li, gi = self.example_value_and_grad(i, w)
            loss += li
            grad += gi
        return loss / len(self.steps), grad / len(self.steps)

    def value(self, w: Sequence[float]) -> float:
        return self.value_and_grad(w)[0]

    def gradient(self, w: Sequence[float]) -> np.ndarray:
        return self.value_and_grad(w)[1]


def train_loglinear(
    instances: Sequence[tuple[Question, CandidateSet, Example | None]],
    epochs: int = 200,
    learning_rate: float = 0.3,
    seed: int = 0,
    stochastic: bool = False,
    init: Sequence[float] | None = None,
    history: list[float] | None = None,
) -> LogLinearScorer:
    """Gradient descent on the mean supervision loss.

    Full-batch by default. With ``stochastic=True`` each epoch visits the
    examples once in a seeded random order, one update per example.
    ``history`` (if given) receives the full-batch loss before each epoch
    and after the last one.
    """
    kept = [(q, c, e) for q, c, e in instances if e is not None]
    if not kept:
        raise ValueError("all training examples were skipped")
    obj = Objective(kept)
    w = np.zeros(len(FEATURES)) if init is None else np.array(init, dtype=float)
    rng = np.random.default_rng(seed)
    for _ in range(epochs):
        loss, grad = obj.value_and_grad(w)
        if history is not None:
            history.append(loss)
        if stochastic:
            for i in rng.permutation(len(obj)):
                w = w - learning_rate * obj.example_value_and_grad(int(i), w)[1]
        else:
            w = w - learning_rate * grad
    if history is not None:
        history.append(obj.value(w))
    return LogLinearScorer(w)
