"""Synthetic multi-answer worlds with controllable answer duplication.

Every token comes from one of three disjoint pseudo-word pools (filler,
topic, answer), and each answer word is used by exactly one answer, so an
alias can only occur in the passages written for it.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Any, Mapping

import numpy as np

from .core import AnswerSet, Passage, Question

_CONSONANTS = "bcdfghjklmnprstvz"
_VOWELS = "aeiou"


@dataclass(frozen=True)
class SyntheticWorldSpec:
    n_questions: int = 50
    answers_per_question: tuple[int, ...] = (2, 3)
    # passages per answer by answer position; the last entry repeats
    duplication: tuple[int, ...] = (5, 1)
    aliases_per_answer: int = 2
    distractors: int = 8
    topic_words: int = 3
    filler_words: tuple[int, int] = (6, 12)
    vocab_seed: int = 0

    def __post_init__(self):
        for name in ("answers_per_question", "duplication", "filler_words"):
            object.__setattr__(self, name, tuple(int(x) for x in getattr(self, name)))
        if self.n_questions < 1:
            raise ValueError("n_questions must be >= 1")
        if not self.answers_per_question or min(self.answers_per_question) < 1:
            raise ValueError("answers_per_question needs positive entries")
        if not self.duplication or min(self.duplication) < 1:
            raise ValueError("duplication must be >= 1")
        if self.aliases_per_answer < 1 or self.distractors < 0 or self.topic_words < 1:
            raise ValueError("invalid alias, distractor or topic count")

    def passages_for(self, answer_pos: int) -> int:
        return self.duplication[min(answer_pos, len(self.duplication) - 1)]

    def to_json(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "SyntheticWorldSpec":
        return cls(**payload)


def _vocabulary(n: int, seed: int) -> list[str]:
    rng = np.random.default_rng(seed)
    words: dict[str, None] = {}
    while len(words) < n:
        syllables = rng.integers(2, 4)
        w = "".join(
            _CONSONANTS[rng.integers(len(_CONSONANTS))] + _VOWELS[rng.integers(len(_VOWELS))]
            for _ in range(syllables)
        )
        if rng.random() < 0.5:
            w += _CONSONANTS[rng.integers(len(_CONSONANTS))]
        words.setdefault(w, None)
    return list(words)


def generate_synthetic_world(spec: SyntheticWorldSpec, seed: int = 0) -> tuple[list[Passage], list[Question]]:
    """Corpus and questions for ``spec``; deterministic in (spec, seed).

    Passages written for an answer contain one of its aliases plus some
    of the question's topic words. Distractors contain topic words only.
    """
    max_answers = max(spec.answers_per_question)
    # answer aliases: a two-word full name, then one-word short names
    answer_words = spec.n_questions * max_answers * (spec.aliases_per_answer + 1)
    topic_words = spec.n_questions * spec.topic_words
    n_filler = 300
    vocab = _vocabulary(n_filler + topic_words + answer_words, spec.vocab_seed)
    vrng = np.random.default_rng([spec.vocab_seed, 1])
    vocab = [vocab[i] for i in vrng.permutation(len(vocab))]
    filler = vocab[:n_filler]
    topics = iter(vocab[n_filler : n_filler + topic_words])
    names = iter(vocab[n_filler + topic_words :])

    rng = np.random.default_rng(seed)
    lo, hi = spec.filler_words
    corpus: list[Passage] = []
    questions: list[Question] = []

    def body(words: list[str], alias: str | None) -> str:
        parts = [str(w) for w in rng.choice(filler, size=rng.integers(lo, hi + 1))]
        parts += words
        order = [parts[i] for i in rng.permutation(len(parts))]
        if alias is not None:
            order.insert(int(rng.integers(len(order) + 1)), alias)
        return " ".join(order)

    width = len(str(spec.n_questions - 1))
    for qi in range(spec.n_questions):
        qid = f"q{qi:0{width}d}"
        topic = [next(topics) for _ in range(spec.topic_words)]
        n = int(rng.choice(spec.answers_per_question))
        answers = []
        for ai in range(n):
            first, last = next(names), next(names)
            aliases = [f"{first} {last}"]
            for _ in range(spec.aliases_per_answer - 1):
                aliases.append(next(names))
            answers.append(tuple(aliases))
            for pi in range(spec.passages_for(ai)):
                k = int(rng.integers(1, len(topic) + 1))
                words = [str(w) for w in rng.choice(topic, size=k, replace=False)]
                alias = aliases[int(rng.integers(len(aliases)))]
                corpus.append(Passage(f"{qid}-a{ai}-{pi}", f"{qid} answer {ai}", body(words, alias)))
        for di in range(spec.distractors):
            k = int(rng.integers(1, len(topic) + 1))
            words = [str(w) for w in rng.choice(topic, size=k, replace=False)]
            corpus.append(Passage(f"{qid}-d{di}", f"{qid} distractor", body(words, None)))
        questions.append(Question(qid, "which " + " ".join(topic), AnswerSet(tuple(answers))))
    corpus.sort(key=lambda p: p.id)
    return corpus, questions
