"""Autoregressive scorers: log P(p | q, B, prefix) over every candidate index.

A scorer returns a full log-distribution over the |B| candidates (array
position ``i - 1`` holds index ``i``). It never masks passages already in
the prefix; the decoders do that.
"""

from __future__ import annotations

import json
from abc import ABC, abstractmethod
from collections.abc import Callable, Mapping, Sequence
from pathlib import Path

import numpy as np

from .core import AnswerSet, CandidateSet, Question
from .matching import covered_answers, normalize

# lower bound applied by decoders to log-probs of unmasked candidates
LOG_PROB_FLOOR = -50.0


def log_softmax(logits: np.ndarray) -> np.ndarray:
    logits = np.asarray(logits, dtype=float)
    m = np.max(logits, axis=-1, keepdims=True)
    shifted = logits - m
    return shifted - np.log(np.sum(np.exp(shifted), axis=-1, keepdims=True))


def check_prefix(prefix: Sequence[int], size: int) -> tuple[int, ...]:
    prefix = tuple(int(i) for i in prefix)
    for i in prefix:
        if not 1 <= i <= size:
            raise ValueError(f"prefix index {i} is not a candidate index (1..{size})")
    if len(set(prefix)) != len(prefix):
        raise ValueError(f"prefix {prefix} repeats an index")
    return prefix


class Scorer(ABC):
    """Contract for next-passage distributions."""

    def score_next(self, question: Question, candidate_set: CandidateSet, prefix: Sequence[int]) -> np.ndarray:
        prefix = check_prefix(prefix, len(candidate_set))
        return self._score(question, candidate_set, prefix)

    @abstractmethod
    def _score(self, question: Question, candidate_set: CandidateSet, prefix: tuple[int, ...]) -> np.ndarray:
        ...


def score_next(scorer: Scorer, question: Question, candidate_set: CandidateSet, prefix: Sequence[int]) -> np.ndarray:
    return scorer.score_next(question, candidate_set, prefix)


class UniformScorer(Scorer):
    def _score(self, question, candidate_set, prefix):
        n = len(candidate_set)
        return np.full(n, -np.log(n))


class TabularScorer(Scorer):
    """Explicit probability rows keyed by prefix; unknown prefixes fall back.

    ``fallback`` maps a prefix tuple to a probability vector; the default
    is the uniform distribution.
    """

    def __init__(
        self,
        size: int,
        table: Mapping[Sequence[int], Sequence[float]] | None = None,
        fallback: Callable[[tuple[int, ...]], Sequence[float]] | None = None,
    ):
        self.size = int(size)
        self.fallback = fallback
        self._rows: dict[tuple[int, ...], np.ndarray] = {}
        for prefix, probs in (table or {}).items():
            self._rows[tuple(prefix)] = self._check_row(probs)

    def _check_row(self, probs) -> np.ndarray:
        row = np.asarray(probs, dtype=float)
        if row.shape != (self.size,):
            raise ValueError(f"row has shape {row.shape}, expected ({self.size},)")
        if np.any(row < 0) or abs(row.sum() - 1.0) > 1e-9:
            raise ValueError("row is not a probability distribution")
        return row

    def _score(self, question, candidate_set, prefix):
        if len(candidate_set) != self.size:
            raise ValueError(f"table built for |B|={self.size}, got {len(candidate_set)}")
        row = self._rows.get(prefix)
        if row is None:
            if self.fallback is None:
                return np.full(self.size, -np.log(self.size))
            row = self._check_row(self.fallback(prefix))
        with np.errstate(divide="ignore"):
            return np.log(row)

    def to_json(self) -> dict:
        return {
            "size": self.size,
            "rows": [{"prefix": list(k), "probs": v.tolist()} for k, v in self._rows.items()],
        }

    @classmethod
    def from_json(cls, payload: Mapping) -> "TabularScorer":
        table = {tuple(r["prefix"]): r["probs"] for r in payload["rows"]}
        return cls(payload["size"], table)

    @classmethod
    def load(cls, path: str | Path) -> "TabularScorer":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(json.load(fh))


class _CoverageCache:
    def __init__(self):
        self._cache: dict = {}

    def get(self, answer_set: AnswerSet, candidate_set: CandidateSet) -> tuple[frozenset[int], ...]:
        key = (answer_set, candidate_set.by_index)
        hit = self._cache.get(key)
        if hit is None:
            hit = tuple(covered_answers(p, answer_set) for p in candidate_set.by_index)
            self._cache[key] = hit
        return hit


class CoverageOracleScorer(Scorer):
    """Gold-answer scorer that prefers passages adding uncovered answers.

    Logits are ``novel / tau`` for passages covering an answer the prefix
    has not covered, ``redundant / tau`` for passages covering only
    already-covered answers and 0 otherwise.
    """

    def __init__(self, tau: float = 0.5, novel: float = 2.0, redundant: float = 1.0):
        if tau <= 0:
            raise ValueError("tau must be positive")
        if not novel >= redundant >= 0:
            raise ValueError("need novel >= redundant >= 0")
        self.tau = tau
        self.novel = novel
        self.redundant = redundant
        self._coverage = _CoverageCache()

    def _score(self, question, candidate_set, prefix):
        if question.answer_set is None:
            raise ValueError(f"question {question.id} has no answer set")
        cov = self._coverage.get(question.answer_set, candidate_set)
        seen = set().union(*(cov[i - 1] for i in prefix)) if prefix else set()
        logits = np.zeros(len(candidate_set))
        for j, answers in enumerate(cov):
            if answers - seen:
                logits[j] = self.novel / self.tau
            elif answers:
                logits[j] = self.redundant / self.tau
        return log_softmax(logits)


# --------------------------------------------------------------------------
# log-linear scorer

FEATURES = ("lexical_overlap", "prior", "novelty", "prefix_overlap")


def _tokens(text: str) -> frozenset[str]:
    return frozenset(normalize(text).split())


class FeatureExtractor:
    """Builds the (|B|, 4) feature matrix for one decoding state.

    ``use_answers=False`` zeroes the novelty column, which is the only
    feature that reads gold answers.
    """

    def __init__(self, use_answers: bool = True):
        self.use_answers = use_answers
        self._static: dict = {}
        self._coverage = _CoverageCache()

    def _static_part(self, question: Question, candidate_set: CandidateSet):
        key = (question.text, candidate_set.by_index, candidate_set.scores, candidate_set.seed)
        hit = self._static.get(key)
        if hit is None:
            q = _tokens(question.text)
            toks = [_tokens(p.text) for p in candidate_set.by_index]
            overlap = np.array([len(q & t) / len(q) if q else 0.0 for t in toks])
            hit = (toks, overlap, candidate_set.prior_scores())
            self._static[key] = hit
        return hit

    def __call__(self, question: Question, candidate_set: CandidateSet, prefix: Sequence[int]) -> np.ndarray:
        toks, overlap, prior = self._static_part(question, candidate_set)
        n = len(candidate_set)
        novelty = np.zeros(n)
        if self.use_answers and question.answer_set is not None:
            cov = self._coverage.get(question.answer_set, candidate_set)
            seen = set().union(*(cov[i - 1] for i in prefix)) if prefix else set()
            for j, answers in enumerate(cov):
                if answers:
                    novelty[j] = len(answers - seen) / len(answers)
        pov = np.zeros(n)
        for i in prefix:
            other = toks[i - 1]
            for j in range(n):
                union = toks[j] | other
                if union:
                    pov[j] = max(pov[j], len(toks[j] & other) / len(union))
        return np.column_stack([overlap, prior, novelty, pov])


def loglinear_log_probs(features: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return log_softmax(np.asarray(features, dtype=float) @ np.asarray(weights, dtype=float))


class LogLinearScorer(Scorer):
    """softmax(w . phi(q, p, prefix)) over the candidate set."""

    def __init__(self, weights: Mapping[str, float] | Sequence[float] | None = None, use_answers: bool = True):
        if weights is None:
            w = np.zeros(len(FEATURES))
        elif isinstance(weights, Mapping):
            unknown = set(weights) - set(FEATURES)
            if unknown:
                raise ValueError(f"unknown features {sorted(unknown)}")
            w = np.array([float(weights.get(f, 0.0)) for f in FEATURES])
        else:
            w = np.asarray(weights, dtype=float)
            if w.shape != (len(FEATURES),):
                raise ValueError(f"expected {len(FEATURES)} weights")
        w.setflags(write=False)
        self.weights = w
        self.features = FeatureExtractor(use_answers=use_answers)

    def _score(self, question, candidate_set, prefix):
        return loglinear_log_probs(self.features(question, candidate_set, prefix), self.weights)

    def with_answers(self, use_answers: bool) -> "LogLinearScorer":
        return LogLinearScorer(self.weights, use_answers=use_answers)

    def to_json(self) -> dict[str, float]:
        return {f: float(w) for f, w in zip(FEATURES, self.weights)}

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: str | Path, use_answers: bool = True) -> "LogLinearScorer":
        with open(path, encoding="utf-8") as fh:
            return cls(json.load(fh), use_answers=use_answers)
