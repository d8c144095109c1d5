"""Lexical first-stage retrieval producing candidate sets.

Scoring is Okapi BM25 (k1=1.2, b=0.75) over normalized whitespace tokens:

    idf(t)      = log(1 + (N - df(t) + 0.5) / (df(t) + 0.5))
    score(q, d) = sum_{t in q} idf(t) * tf(t,d) * (k1 + 1)
                  / (tf(t,d) + k1 * (1 - b + b * |d| / avgdl))

Query terms are counted with multiplicity.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .core import CandidateSet, Passage, Question
from .matching import normalize

logger = logging.getLogger(__name__)

INDEX_FORMAT = "multirank-lexical-index"
INDEX_VERSION = 1


def tokenize(text: str) -> list[str]:
    return normalize(text).split()


@dataclass(frozen=True)
class LexicalIndex:
    postings: dict[str, tuple[tuple[str, int], ...]]
    doc_len: dict[str, int]
    passages: dict[str, Passage]
    k1: float = 1.2
    b: float = 0.75

    @property
    def size(self) -> int:
        return len(self.doc_len)

    @property
    def avgdl(self) -> float:
        return sum(self.doc_len.values()) / max(self.size, 1)

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        return math.log(1.0 + (self.size - df + 0.5) / (df + 0.5))

    def scores(self, query: str) -> dict[str, float]:
        """BM25 score of every indexed passage (0.0 when no term matches)."""
        out = dict.fromkeys(self.doc_len, 0.0)
        avgdl = self.avgdl
        for term, qtf in Counter(tokenize(query)).items():
            plist = self.postings.get(term)
            if not plist:
                continue
            idf = self.idf(term)
            for pid, tf in plist:
                norm = self.k1 * (1.0 - self.b + self.b * self.doc_len[pid] / avgdl)
                out[pid] += qtf * idf * tf * (self.k1 + 1.0) / (tf + norm)
        return out

    def save(self, path: str | Path) -> None:
        payload = {
            "format": INDEX_FORMAT,
            "version": INDEX_VERSION,
            "k1": self.k1,
            "b": self.b,
            "doc_len": self.doc_len,
            "postings": {t: [list(e) for e in pl] for t, pl in self.postings.items()},
            "passages": [p.to_record() for p in self.passages.values()],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False, sort_keys=True)

    @classmethod
    def load(cls, path: str | Path) -> "LexicalIndex":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("format") != INDEX_FORMAT:
            raise ValueError(f"{path}: not a lexical index file")
        if payload.get("version") != INDEX_VERSION:
            raise ValueError(f"{path}: unsupported index version {payload.get('version')}")
        passages = [Passage.from_record(r) for r in payload["passages"]]
        return cls(
            postings={t: tuple((pid, int(tf)) for pid, tf in pl) for t, pl in payload["postings"].items()},
            doc_len={k: int(v) for k, v in payload["doc_len"].items()},
            passages={p.id: p for p in passages},
            k1=float(payload["k1"]),
            b=float(payload["b"]),
        )


def build_index(corpus: Iterable[Passage], k1: float = 1.2, b: float = 0.75) -> LexicalIndex:
    corpus = list(corpus)
    if not corpus:
        raise ValueError("cannot index an empty corpus")
    passages: dict[str, Passage] = {}
    for p in corpus:
        if p.id in passages:
            raise ValueError(f"duplicate passage id {p.id!r}")
        passages[p.id] = p

    raw: dict[str, list[tuple[str, int]]] = {}
    doc_len = {}
    for pid in sorted(passages):
        toks = tokenize(passages[pid].text)
        doc_len[pid] = len(toks)
        for term, tf in Counter(toks).items():
            raw.setdefault(term, []).append((pid, tf))
    postings = {t: tuple(raw[t]) for t in sorted(raw)}
    return LexicalIndex(postings=postings, doc_len=doc_len, passages=passages, k1=k1, b=b)


def zscore(values: np.ndarray) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return values
    sd = values.std()
    if sd == 0.0:
        return np.zeros_like(values)
    return (values - values.mean()) / sd


def retrieve(
    index: LexicalIndex,
    question: Question | str,
    size: int = 100,
    seed: int | None = 0,
) -> CandidateSet:
    """Top-``size`` passages by BM25, ties broken by passage id.

    The returned candidate set keeps passages in score order; its
    ``scores`` are the z-scored BM25 values and serve as the prior
    ``s(p)`` for negative sampling. ``seed`` drives index assignment.
    """
    if size < 1:
        raise ValueError("size must be >= 1")
    text = question if isinstance(question, str) else question.text
    qid = "" if isinstance(question, str) else question.id
    if size > index.size:
        logger.warning("corpus has %d passages, fewer than requested %d", index.size, size)
        size = index.size
    scores = index.scores(text)
    ranked = sorted(scores, key=lambda pid: (-scores[pid], pid))[:size]
    raw = np.array([scores[pid] for pid in ranked])
    return CandidateSet(
        question_id=qid,
        passages=tuple(index.passages[pid] for pid in ranked),
        scores=tuple(zscore(raw)),
        seed=seed,
    )
