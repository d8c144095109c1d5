"""Answer normalization, passage-level answer containment and positive-set construction."""

from __future__ import annotations

import re
import unicodedata
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from functools import lru_cache
from typing import Any

from .core import AnswerSet, CandidateSet, Passage, Question


@lru_cache(maxsize=1 << 16)
def normalize(text: str) -> str:
    """Lowercase, turn punctuation into spaces and collapse all whitespace.

    Unicode whitespace (``\\xa0``, newlines, tabs) counts as a separator.
    Punctuation is replaced by a space rather than deleted so that
    hyphenated names keep their token boundaries.
    """
    text = unicodedata.normalize("NFKC", text).lower()
    text = "".join(" " if unicodedata.category(c).startswith("P") else c for c in text)
    return " ".join(text.split())


def grouping_key(text: str) -> str:
    """Normalized form with every space removed ("new york" == "newyork")."""
    return normalize(text).replace(" ", "")


def covers(passage: Passage | str, answer: Iterable[str]) -> bool:
    """True iff some alias occurs in the passage text on token boundaries."""
    text = passage if isinstance(passage, str) else passage.text
    haystack = f" {normalize(text)} "
    for alias in answer:
        needle = normalize(alias)
        if needle and f" {needle} " in haystack:
            return True
    return False


def covered_answers(passage: Passage | str, answer_set: AnswerSet) -> frozenset[int]:
    """Positions (0-based) of the distinct answers this passage covers."""
    return frozenset(i for i, group in enumerate(answer_set) if covers(passage, group))


def preproc_positives(
    k: int,
    answer_set: AnswerSet,
    candidate_set: CandidateSet,
    scan_order: Sequence[int] | None = None,
) -> tuple[int, ...]:
    """Greedy positive set: scan B once, keep a passage iff it adds a new answer.

    ``scan_order`` defaults to candidate index order 1..|B|. Stops once
    ``k`` passages are kept. Returns indexes in the order they were kept.
    """
    if len(candidate_set) == 0:
        raise ValueError("candidate set is empty")
    left = set(range(len(answer_set)))
    chosen: list[int] = []
    order = candidate_set.indexes if scan_order is None else scan_order
    for idx in order:
        if len(chosen) >= k:
            break
        if not left:
            break
        hit = covered_answers(candidate_set.passage(idx), answer_set) & left
        if hit:
            chosen.append(idx)
            left -= hit
    return tuple(chosen)


# --------------------------------------------------------------------------
# regex answer sets


@dataclass(frozen=True)
class Discard:
    question_id: str
    reason: str


class RegexError(ValueError):
    pass


def trec_pipeline(
    question_id: str,
    regex: str,
    texts: Iterable[str],
    max_matches: int = 100,
    max_tokens: int = 5,
    flags: int = re.IGNORECASE,
) -> AnswerSet | Discard:
    """Turn an answer regex into distinct answers by matching it over a corpus.

    Matches are collected over all texts. The question is discarded when
    nothing matches or when more than ``max_matches`` distinct strings
    match. Matches longer than ``max_tokens`` whitespace tokens are
    dropped, and the rest are grouped by their space-free normalized form.
    """
    try:
        pattern = re.compile(regex, flags)
    except re.error as exc:
        raise RegexError(f"question {question_id}: invalid answer regex {regex!r}: {exc}") from exc

    matches: dict[str, None] = {}
    for text in texts:
        for m in pattern.finditer(text):
            s = m.group(0)
            if normalize(s):
                matches.setdefault(s, None)
        if len(matches) > max_matches:
            break
    if not matches:
        return Discard(question_id, "no valid answer found")
    if len(matches) > max_matches:
        return Discard(question_id, f"more than {max_matches} valid answers")

    groups: dict[str, list[str]] = {}
    for s in matches:
        if len(normalize(s).split()) > max_tokens:
            continue
        groups.setdefault(grouping_key(s), []).append(s)
    if not groups:
        return Discard(question_id, f"no answer with at most {max_tokens} tokens")
    return AnswerSet(tuple(tuple(g) for g in groups.values()))


def preprocess_trec(
    records: Iterable[Mapping[str, Any]],
    corpus: Sequence[Passage],
    max_matches: int = 100,
    max_tokens: int = 5,
) -> tuple[list[Question], list[Discard]]:
    """Run :func:`trec_pipeline` over raw ``{"id","question","answer_regex"}`` records."""
    texts = [p.text for p in corpus]
    kept, dropped = [], []
    for rec in records:
        qid = str(rec["id"])
        out = trec_pipeline(qid, rec["answer_regex"], texts, max_matches, max_tokens)
        if isinstance(out, Discard):
            dropped.append(out)
        else:
            kept.append(Question(qid, str(rec["question"]), out))
    return kept, dropped
