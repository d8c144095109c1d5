"""Set decoding from an autoregressive scorer.

``seq_decode`` takes the top passage at every step. ``tree_decode`` grows
a tree of prefixes, at each iteration adding the (branch, passage) pair
with the best length-penalized log-prob; expanding a fresh branch moves
deeper (one more autoregressive step) while re-using an existing branch
takes the next-best passage at the same step. ``topk_decode`` reads the
top-k of the first step only, i.e. independent scoring.

Ties are broken by lowest passage index, then shortest branch, then
oldest branch.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from .core import CandidateSet, Question, Tree
from .scoring import LOG_PROB_FLOOR, Scorer


class DecodingExhausted(RuntimeError):
    pass


def length_penalty(beta: float, y: int) -> float:
    """((5 + y) / 6) ** beta."""
    if y < 1:
        raise ValueError(f"length must be >= 1, got {y}")
    return ((5.0 + y) / 6.0) ** beta


def _check_k(k: int, candidate_set: CandidateSet) -> None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > len(candidate_set):
        raise ValueError(f"k={k} exceeds |B|={len(candidate_set)}")


def seq_decode(scorer: Scorer, question: Question, candidate_set: CandidateSet, k: int) -> Tree:
    _check_k(k, candidate_set)
    chain: list[int] = []
    lps = [0.0]
    for _ in range(k):
        lp = scorer.score_next(question, candidate_set, chain).copy()
        lp[np.asarray(chain, dtype=int) - 1] = -np.inf
        best = int(np.argmax(lp))  # first maximum, i.e. lowest index
        chain.append(best + 1)
        lps.append(max(float(lp[best]), LOG_PROB_FLOOR))
    seqs = [tuple(chain[:t]) for t in range(k + 1)]
    return Tree(sequences=tuple(seqs), selected=tuple(chain), log_probs=tuple(lps))


def topk_decode(scorer: Scorer, question: Question, candidate_set: CandidateSet, k: int) -> Tree:
    """Top-k of the first-step distribution, as a star tree."""
    _check_k(k, candidate_set)
    lp = scorer.score_next(question, candidate_set, ())
    order = np.lexsort((np.arange(len(lp)), -lp))[:k]
    picked = tuple(int(j) + 1 for j in order)
    return Tree(
        sequences=((),) + tuple((p,) for p in picked),
        selected=picked,
        log_probs=(0.0,) + tuple(max(float(lp[p - 1]), LOG_PROB_FLOOR) for p in picked),
    )


class _Branch:
    """A tree node with its penalized candidate list sorted best-first."""

    __slots__ = ("seq", "order", "log_probs", "values", "ranked", "cursor")

    def __init__(self, seq, order, log_probs, beta):
        self.seq = seq
        self.order = order
        self.log_probs = np.maximum(log_probs, LOG_PROB_FLOOR)
        self.values = length_penalty(beta, len(seq) + 1) * self.log_probs
        idx = np.arange(len(self.values))
        self.ranked = np.lexsort((idx, -self.values))
        self.cursor = 0

    def best(self, blocked) -> tuple[float, int] | None:
        # masks only ever grow, so skipped entries never need revisiting
        while self.cursor < len(self.ranked):
            p = int(self.ranked[self.cursor]) + 1
            if not blocked(self, p):
                return float(self.values[p - 1]), p
            self.cursor += 1
        return None


def tree_decode(
    scorer: Scorer,
    question: Question,
    candidate_set: CandidateSet,
    k: int,
    beta: float = 0.0,
    mask_selected: bool = True,
) -> Tree:
    """Greedy tree decoding with length penalty ``((5+y)/6)**beta``.

    Each branch's distribution is requested from the scorer once, when
    the branch is created. ``mask_selected`` additionally forbids adding
    a passage that is already selected on another branch, which makes
    every iteration add a new passage.
    """
    _check_k(k, candidate_set)
    branches = [_Branch((), 0, scorer.score_next(question, candidate_set, ()), beta)]
    in_tree = {()}
    selected: list[int] = []
    chosen: set[int] = set()
    sequences = [()]
    log_probs = [0.0]

    def blocked(branch: _Branch, p: int) -> bool:
        if (mask_selected and p in chosen) or p in branch.seq:
            return True
        return branch.seq + (p,) in in_tree

    while len(chosen) < k:
        best_key = None
        best_branch = None
        for br in branches:
            hit = br.best(blocked)
            if hit is None:
                continue
            value, p = hit
            key = (-value, p, len(br.seq), br.order)
            if best_key is None or key < best_key:
                best_key, best_branch = key, br
        if best_branch is None:
            raise DecodingExhausted(f"no expandable (branch, passage) pair with {len(chosen)} of {k} selected")
        p = best_key[1]
        new_seq = best_branch.seq + (p,)
        in_tree.add(new_seq)
        sequences.append(new_seq)
        log_probs.append(float(best_branch.log_probs[p - 1]))
        if p not in chosen:
            chosen.add(p)
            selected.append(p)
        if len(chosen) < k:
            branches.append(
                _Branch(new_seq, len(branches), scorer.score_next(question, candidate_set, new_seq), beta)
            )
    return Tree(sequences=tuple(sequences), selected=tuple(selected), log_probs=tuple(log_probs))


def reference_tree_decode(
    scorer: Scorer,
    question: Question,
    candidate_set: CandidateSet,
    k: int,
    beta: float = 0.0,
    mask_selected: bool = True,
) -> Tree:
    """Same contract as :func:`tree_decode`, by exhaustive rescans.

    Every iteration re-queries the scorer for every branch and scans all
    (branch, passage) pairs; nothing is cached between iterations.
    """
    _check_k(k, candidate_set)
    sequences: list[tuple[int, ...]] = [()]
    log_probs = [0.0]
    selected: list[int] = []
    while len(set(selected)) < k:
        best = None
        for order, s in enumerate(sequences):
            lp = scorer.score_next(question, candidate_set, s)
            pen = length_penalty(beta, len(s) + 1)
            for p in range(1, len(candidate_set) + 1):
                if s + (p,) in sequences or p in s:
                    continue
                if mask_selected and p in selected:
                    continue
                raw = max(float(lp[p - 1]), LOG_PROB_FLOOR)
                key = (-(pen * raw), p, len(s), order)
                if best is None or key < best[0]:
                    best = (key, s, p, raw)
        if best is None:
            raise DecodingExhausted(f"no expandable (branch, passage) pair with {len(selected)} of {k} selected")
        _, s, p, raw = best
        sequences.append(s + (p,))
        log_probs.append(raw)
        if p not in selected:
            selected.append(p)
    return Tree(sequences=tuple(sequences), selected=tuple(selected), log_probs=tuple(log_probs))


def decode(
    algo: str,
    scorer: Scorer,
    question: Question,
    candidate_set: CandidateSet,
    k: int,
    beta: float = 0.0,
) -> Tree:
    if algo == "seq":
        return seq_decode(scorer, question, candidate_set, k)
    if algo == "tree":
        return tree_decode(scorer, question, candidate_set, k, beta)
    if algo == "topk":
        return topk_decode(scorer, question, candidate_set, k)
    if algo == "reference":
        return reference_tree_decode(scorer, question, candidate_set, k, beta)
    raise ValueError(f"unknown decoding algorithm {algo!r}")


def tree_score(
    tree: Tree,
    scorer: Scorer | None = None,
    question: Question | None = None,
    candidate_set: CandidateSet | None = None,
) -> float:
    """Sum over non-root nodes of log P(last passage | rest of the path).

    Without a scorer the log-probs stored on the tree are summed;
    otherwise they are recomputed (floored like the decoders do).
    """
    if scorer is None:
        return float(sum(tree.log_probs[1:]))
    total = 0.0
    for s in tree.sequences[1:]:
        lp = scorer.score_next(question, candidate_set, s[:-1])
        total += max(float(lp[s[-1] - 1]), LOG_PROB_FLOOR)
    return total


def tree_depth(tree: Tree) -> int:
    if not tree.selected:
        raise ValueError("empty tree has no depth")
    return tree.depth


def depth_stats(trees: Iterable[Tree]) -> float:
    """Mean tree depth over questions."""
    depths = [tree_depth(t) for t in trees]
    if not depths:
        raise ValueError("no trees")
    return float(np.mean(depths))


def greedy_step_violations(
    tree: Tree,
    scorer: Scorer,
    question: Question,
    candidate_set: CandidateSet,
    beta: float = 0.0,
    mask_selected: bool = True,
) -> list[int]:
    """Replay a decoded tree; return iterations whose choice was not the best unmasked pair."""
    bad = []
    for it in range(1, len(tree.sequences)):
        prior = tree.sequences[:it]
        chosen = set(p for s in prior for p in s)
        best = -np.inf
        for s in prior:
            lp = scorer.score_next(question, candidate_set, s)
            pen = length_penalty(beta, len(s) + 1)
            for p in range(1, len(candidate_set) + 1):
                if s + (p,) in prior or p in s or (mask_selected and p in chosen):
                    continue
                best = max(best, pen * max(float(lp[p - 1]), LOG_PROB_FLOOR))
        s_hat = tree.sequences[it]
        lp = scorer.score_next(question, candidate_set, s_hat[:-1])
        got = length_penalty(beta, len(s_hat)) * max(float(lp[s_hat[-1] - 1]), LOG_PROB_FLOOR)
        if got < best:
            bad.append(it)
    return bad

