"""Domain types shared by every stage, plus JSONL (de)serialization.

Candidate indexes are 1-based; index 0 is never used so that the empty
root of a decoded tree has no passage attached.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np


class DatasetError(ValueError):
    """Malformed input file or record."""


@dataclass(frozen=True)
class Passage:
    id: str
    title: str
    text: str

    def to_record(self) -> dict[str, Any]:
        return {"id": self.id, "title": self.title, "text": self.text}

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Passage":
        return cls(id=str(rec["id"]), title=str(rec.get("title", "")), text=str(rec["text"]))


@dataclass(frozen=True)
class AnswerSet:
    """Distinct answers of a question; each answer is a tuple of aliases.

    Aliases are kept exactly as they appear in the source data. Matching
    code normalizes them on use.
    """

    answers: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "answers", tuple(tuple(a) for a in self.answers))

    def __len__(self) -> int:
        return len(self.answers)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(self.answers)

    def __getitem__(self, i: int) -> tuple[str, ...]:
        return self.answers[i]

    def to_record(self) -> list[list[str]]:
        return [list(a) for a in self.answers]

    @classmethod
    def from_record(cls, rec: Sequence[Sequence[str]]) -> "AnswerSet":
        out = []
        for group in rec:
            # a bare string is a single-alias answer
            out.append((group,) if isinstance(group, str) else tuple(group))
        return cls(tuple(out))


@dataclass(frozen=True)
class Question:
    id: str
    text: str
    answer_set: AnswerSet | None = None

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {"id": self.id, "question": self.text}
        if self.answer_set is not None:
            rec["answers"] = self.answer_set.to_record()
        return rec

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Question":
        answers = rec.get("answers")
        return cls(
            id=str(rec["id"]),
            text=str(rec["question"]),
            answer_set=None if answers is None else AnswerSet.from_record(answers),
        )


def index_permutation(n: int, seed: int | None) -> tuple[int, ...]:
    """Return ``order`` such that index ``i`` holds retrieval position ``order[i-1]``.

    ``seed=None`` keeps retrieval order (index 1 = top retrieved passage).
    """
    if seed is None:
        return tuple(range(n))
    return tuple(int(x) for x in np.random.default_rng(seed).permutation(n))


@dataclass(frozen=True)
class CandidateSet:
    """The candidate pool B for one question.

    ``passages`` and ``scores`` are stored in first-stage rank order.
    Indexes 1..|B| are assigned through a seeded permutation so the
    reranker cannot exploit the retrieval rank.
    """

    question_id: str
    passages: tuple[Passage, ...]
    scores: tuple[float, ...] = ()
    seed: int | None = 0

    def __post_init__(self):
        object.__setattr__(self, "passages", tuple(self.passages))
        object.__setattr__(self, "scores", tuple(float(s) for s in self.scores))
        if self.scores and len(self.scores) != len(self.passages):
            raise ValueError("scores must align with passages")

    def __len__(self) -> int:
        return len(self.passages)

    @cached_property
    def order(self) -> tuple[int, ...]:
        return index_permutation(len(self.passages), self.seed)

    @cached_property
    def by_index(self) -> tuple[Passage, ...]:
        """Passages in index order (position 0 holds index 1)."""
        return tuple(self.passages[j] for j in self.order)

    @property
    def indexes(self) -> range:
        return range(1, len(self.passages) + 1)

    def passage(self, index: int) -> Passage:
        if not 1 <= index <= len(self.passages):
            raise IndexError(f"candidate index {index} outside 1..{len(self.passages)}")
        return self.by_index[index - 1]

    def index_of(self, passage_id: str) -> int:
        return self._id_to_index[passage_id]

    @cached_property
    def _id_to_index(self) -> dict[str, int]:
        return {p.id: i + 1 for i, p in enumerate(self.by_index)}

    def prior_scores(self) -> np.ndarray:
        """First-stage scores aligned with index order (zeros when absent)."""
        if not self.scores:
            return np.zeros(len(self.passages))
        return np.array([self.scores[j] for j in self.order], dtype=float)

    def baseline_rank(self, index: int) -> int:
        """0-based first-stage rank of the passage at ``index``."""
        return self.order[index - 1]

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "qid": self.question_id,
            "passage_ids": [p.id for p in self.passages],
            "seed": self.seed,
        }
        if self.scores:
            rec["scores"] = list(self.scores)
        return rec

    @classmethod
    def from_record(cls, rec: Mapping[str, Any], corpus: Mapping[str, Passage]) -> "CandidateSet":
        try:
            passages = tuple(corpus[pid] for pid in rec["passage_ids"])
        except KeyError as exc:
            raise DatasetError(f"candidate set {rec.get('qid')!r}: unknown passage id {exc.args[0]!r}")
        return cls(
            question_id=str(rec["qid"]),
            passages=passages,
            scores=tuple(rec.get("scores", ())),
            seed=rec.get("seed"),
        )


@dataclass(frozen=True)
class Tree:
    """A decoded tree: root-anchored index sequences plus the selection order.

    ``sequences[0]`` is the empty root. ``log_probs[i]`` is the log-prob of
    the last element of ``sequences[i]`` given the rest (0.0 for the root).
    """

    sequences: tuple[tuple[int, ...], ...] = ((),)
    selected: tuple[int, ...] = ()
    log_probs: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(tuple(s) for s in self.sequences))
        object.__setattr__(self, "selected", tuple(self.selected))
        object.__setattr__(self, "log_probs", tuple(float(x) for x in self.log_probs))

    @property
    def depth(self) -> int:
        return max(len(s) for s in self.sequences)

    def check(self) -> list[str]:
        """Return violated tree invariants (empty when valid)."""
        problems = []
        if not self.sequences or self.sequences[0] != ():
            problems.append("first sequence must be the empty root")
        if len(self.log_probs) != len(self.sequences):
            problems.append("log_probs must align with sequences")
        seen: set[tuple[int, ...]] = set()
        for i, s in enumerate(self.sequences):
            if s in seen:
                problems.append(f"sequence {s} repeated")
            if i > 0 and s[:-1] not in seen:
                problems.append(f"sequence {s} does not extend an earlier sequence")
            seen.add(s)
        distinct = {p for s in self.sequences for p in s}
        if len(set(self.selected)) != len(self.selected) or set(self.selected) != distinct:
            problems.append("selected must list each distinct index exactly once")
        return problems

    def to_record(self, question_id: str) -> dict[str, Any]:
        return {
            "qid": question_id,
            "tree": [list(s) for s in self.sequences],
            "set": list(self.selected),
            "log_probs": list(self.log_probs),
        }

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "Tree":
        seqs = tuple(tuple(int(i) for i in s) for s in rec["tree"])
        lps = rec.get("log_probs") or [0.0] * len(seqs)
        return cls(sequences=seqs, selected=tuple(int(i) for i in rec["set"]), log_probs=tuple(lps))


@dataclass(frozen=True)
class SupervisionExample:
    """A simulated prefix together with the positive set it was built from."""

    question_id: str
    positives: frozenset[int]
    prefix: tuple[int, ...]
    # restricts the softmax to a subsample of B when set
    pool: tuple[int, ...] | None = field(default=None)

    def targets_at(self, t: int) -> frozenset[int]:
        """Dynamic-oracle targets at 1-based step ``t``: positives not in the first t-1 prefix items."""
        if not 1 <= t <= len(self.prefix):
            raise IndexError(f"step {t} outside 1..{len(self.prefix)}")
        return self.positives - set(self.prefix[: t - 1])

    def steps(self) -> list[tuple[tuple[int, ...], frozenset[int]]]:
        return [(self.prefix[: t - 1], self.targets_at(t)) for t in range(1, len(self.prefix) + 1)]

    def to_record(self) -> dict[str, Any]:
        rec: dict[str, Any] = {
            "qid": self.question_id,
            "positives": sorted(self.positives),
            "prefix": list(self.prefix),
        }
        if self.pool is not None:
            rec["pool"] = list(self.pool)
        return rec

    @classmethod
    def from_record(cls, rec: Mapping[str, Any]) -> "SupervisionExample":
        pool = rec.get("pool")
        return cls(
            question_id=str(rec["qid"]),
            positives=frozenset(int(i) for i in rec["positives"]),
            prefix=tuple(int(i) for i in rec["prefix"]),
            pool=None if pool is None else tuple(int(i) for i in pool),
        )


# --------------------------------------------------------------------------
# JSONL I/O


def read_jsonl(path: str | Path) -> list[dict[str, Any]]:
    records = []
    try:
        fh = open(path, encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"{path}: cannot open ({exc.strerror})") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from exc
            if not isinstance(rec, dict):
                raise DatasetError(f"{path}:{lineno}: expected a JSON object")
            records.append(rec)
    return records


def write_jsonl(path: str | Path, records: Iterable[Mapping[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def _parse(path, kind, parser):
    out = []
    for lineno, rec in enumerate(read_jsonl(path), start=1):
        try:
            out.append(parser(rec))
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"{path}: record {lineno}: bad {kind} record ({exc!r})") from exc
    return out


def load_corpus(path: str | Path) -> list[Passage]:
    return _parse(path, "passage", Passage.from_record)


def load_questions(path: str | Path) -> list[Question]:
    return _parse(path, "question", Question.from_record)


def load_candidates(path: str | Path, corpus: Mapping[str, Passage]) -> list[CandidateSet]:
    return _parse(path, "candidate", lambda r: CandidateSet.from_record(r, corpus))


def load_predictions(path: str | Path) -> dict[str, Tree]:
    return {str(r["qid"]): Tree.from_record(r) for r in read_jsonl(path)}


def load_supervision(path: str | Path) -> list[SupervisionExample]:
    return _parse(path, "supervision", SupervisionExample.from_record)


# --------------------------------------------------------------------------
# validation


def validate_dataset(
    questions: Sequence[Question],
    corpus: Sequence[Passage] = (),
    candidates: Sequence[CandidateSet] = (),
) -> list[str]:
    """Check the data-model invariants; returns one message per violation."""
    from .matching import normalize

    report = []
    seen_q: set[str] = set()
    for q in questions:
        if not q.id:
            report.append("question with empty id")
        if q.id in seen_q:
            report.append(f"question {q.id}: duplicate question id")
        seen_q.add(q.id)
        if q.answer_set is None:
            continue
        if len(q.answer_set) == 0:
            report.append(f"question {q.id}: empty AnswerSet")
        owner: dict[str, int] = {}
        for ai, group in enumerate(q.answer_set):
            if not group:
                report.append(f"question {q.id}: answer {ai} has no aliases")
            for alias in group:
                key = normalize(alias)
                if not key:
                    report.append(f"question {q.id}: empty alias in answer {ai}")
                    continue
                if key in owner and owner[key] != ai:
                    report.append(
                        f"question {q.id}: alias {alias!r} shared by answers {owner[key]} and {ai}"
                    )
                owner.setdefault(key, ai)

    seen_p: set[str] = set()
    for p in corpus:
        if not p.id:
            report.append("passage with empty id")
        if p.id in seen_p:
            report.append(f"passage {p.id}: duplicate passage id")
        seen_p.add(p.id)
        if not p.text:
            report.append(f"passage {p.id}: empty text")

    for cs in candidates:
        ids = [p.id for p in cs.passages]
        if len(set(ids)) != len(ids):
            report.append(f"candidates {cs.question_id}: duplicate index (repeated passage id)")
        if questions and cs.question_id not in seen_q:
            report.append(f"candidates {cs.question_id}: unknown question id")
        if corpus:
            for pid in ids:
                if pid not in seen_p:
                    report.append(f"candidates {cs.question_id}: unknown passage id {pid}")
        if sorted(cs.order) != list(range(len(cs.passages))):
            report.append(f"candidates {cs.question_id}: index assignment is not a bijection")
    return report
