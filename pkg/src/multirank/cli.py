"""Command-line entry point: ``multirank <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import core
from .core import CandidateSet, load_candidates, load_corpus, load_questions, load_supervision, read_jsonl, write_jsonl
from .first_stage import LexicalIndex, build_index
from .harness import (
    ALGOS,
    PipelineConfig,
    PipelineError,
    decode_all,
    evaluate_trees,
    make_supervision,
    retrieve_all,
    run_pipeline,
)
from .matching import preprocess_trec
from .scoring import CoverageOracleScorer, LogLinearScorer, UniformScorer
from .supervision import train_loglinear
from .synthetic import SyntheticWorldSpec, generate_synthetic_world
from .evaluation import breakdown_report


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x)


def _candidates(args) -> tuple[list, list, dict[str, CandidateSet]]:
    corpus = load_corpus(args.corpus)
    questions = load_questions(args.questions)
    cands = load_candidates(args.candidates, {p.id: p for p in corpus})
    return corpus, questions, {c.question_id: c for c in cands}


def cmd_index(args) -> None:
    build_index(load_corpus(args.corpus), k1=args.k1, b=args.b).save(args.out)


def cmd_retrieve(args) -> None:
    index = LexicalIndex.load(args.index)
    questions = load_questions(args.questions)
    seed = None if args.no_shuffle else args.seed
    cands = retrieve_all(index, questions, args.size, seed)
    write_jsonl(args.out, (c.to_record() for c in cands.values()))


def cmd_preprocess_trec(args) -> None:
    corpus = load_corpus(args.corpus)
    kept, dropped = preprocess_trec(read_jsonl(args.input), corpus, args.max_matches, args.max_tokens)
    write_jsonl(args.out, (q.to_record() for q in kept))
    if args.discards:
        write_jsonl(args.discards, ({"id": d.question_id, "reason": d.reason} for d in dropped))
    print(f"kept {len(kept)} questions, discarded {len(dropped)}", file=sys.stderr)


def cmd_make_supervision(args) -> None:
    _, questions, cands = _candidates(args)
    kind = "teacher" if args.teacher_forcing else "dynamic"
    triples = make_supervision(questions, cands, args.k, args.gamma, args.seed, kind, args.pool_fraction)
    write_jsonl(args.out, (ex.to_record() for _, _, ex in triples))


def cmd_train(args) -> None:
    _, questions, cands = _candidates(args)
    qmap = {q.id: q for q in questions}
    examples = load_supervision(args.supervision)
    triples = [(qmap[e.question_id], cands[e.question_id], e) for e in examples]
    history: list[float] = []
    scorer = train_loglinear(triples, args.epochs, args.lr, args.seed, stochastic=args.stochastic, history=history)
    scorer.save(args.out)
    print(f"loss {history[0]:.4f} -> {history[-1]:.4f}", file=sys.stderr)


def cmd_decode(args) -> None:
    _, questions, cands = _candidates(args)
    if args.seed is not None:
        cands = {qid: CandidateSet(c.question_id, c.passages, c.scores, args.seed) for qid, c in cands.items()}
    if args.scorer == "oracle":
        scorer = CoverageOracleScorer()
    elif args.scorer == "uniform":
        scorer = UniformScorer()
    else:
        if not args.weights:
            raise SystemExit("--weights is required with --scorer loglinear")
        scorer = LogLinearScorer.load(args.weights, use_answers=False)
    trees = decode_all(scorer, questions, cands, args.algo, args.k, args.beta)
    write_jsonl(args.out, (t.to_record(qid) for qid, t in trees.items()))


def cmd_evaluate(args) -> None:
    _, questions, cands = _candidates(args)
    trees = core.load_predictions(args.predictions)
    report = evaluate_trees(questions, cands, trees, args.k, args.alpha)
    payload = report.to_json()
    if args.bucket is not None:
        payload["breakdown"] = breakdown_report(report.records, cap=args.bucket)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    print(report.table(), end="")


def cmd_synth(args) -> None:
    spec = SyntheticWorldSpec(
        n_questions=args.questions,
        answers_per_question=_ints(args.answers),
        duplication=_ints(args.duplication),
        aliases_per_answer=args.aliases,
        distractors=args.distractors,
        vocab_seed=args.vocab_seed,
    )
    corpus, questions = generate_synthetic_world(spec, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_jsonl(out / "corpus.jsonl", (p.to_record() for p in corpus))
    write_jsonl(out / "questions.jsonl", (q.to_record() for q in questions))


def cmd_run(args) -> None:
    report = run_pipeline(PipelineConfig.load(args.config))
    print(report.table(), end="")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multirank", description="Multi-answer passage reranking toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def data_args(p, candidates=True):
        p.add_argument("--corpus", required=True, help="corpus JSONL {id,title,text}")
        p.add_argument("--questions", required=True, help="questions JSONL {id,question,answers}")
        if candidates:
            p.add_argument("--candidates", required=True, help="candidates JSONL {qid,passage_ids,seed}")

    p = sub.add_parser("index", help="build a lexical index")
    p.add_argument("--corpus", required=True, help="corpus JSONL")
    p.add_argument("--out", required=True, help="index file to write")
    p.add_argument("--k1", type=float, default=1.2, help="BM25 term-frequency saturation")
    p.add_argument("--b", type=float, default=0.75, help="BM25 length normalization")
    p.set_defaults(func=cmd_index)

    p = sub.add_parser("retrieve", help="retrieve candidate sets")
    p.add_argument("--index", required=True, help="index file from `index`")
    p.add_argument("--questions", required=True, help="questions JSONL")
    p.add_argument("--size", type=int, default=100, help="candidates per question |B|")
    p.add_argument("--seed", type=int, default=0, help="base seed for index assignment")
    p.add_argument("--no-shuffle", action="store_true", help="assign indexes in retrieval order")
    p.add_argument("--out", required=True, help="candidates JSONL to write")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("preprocess-trec", help="turn regex answers into answer sets")
    p.add_argument("--input", required=True, help="JSONL {id,question,answer_regex}")
    p.add_argument("--corpus", required=True, help="corpus JSONL to match against")
    p.add_argument("--out", required=True, help="questions JSONL to write")
    p.add_argument("--discards", help="JSONL log of discarded questions")
    p.add_argument("--max-matches", type=int, default=100, help="discard above this many matches")
    p.add_argument("--max-tokens", type=int, default=5, help="longest answer kept, in tokens")
    p.set_defaults(func=cmd_preprocess_trec)

    p = sub.add_parser("make-supervision", help="build training examples")
    data_args(p)
    p.add_argument("--k", type=int, default=5, help="prefix length")
    p.add_argument("--gamma", type=float, default=1.0, help="Gumbel noise scale for negatives")
    p.add_argument("--seed", type=int, default=0, help="base seed")
    p.add_argument("--pool-fraction", type=float, default=None, help="normalize the loss over this fraction of B")
    p.add_argument("--teacher-forcing", action="store_true", help="emit fixed target sequences instead")
    p.add_argument("--out", required=True, help="supervision JSONL to write")
    p.set_defaults(func=cmd_make_supervision)

    p = sub.add_parser("train", help="train the log-linear scorer")
    data_args(p)
    p.add_argument("--supervision", required=True, help="supervision JSONL")
    p.add_argument("--epochs", type=int, default=200, help="gradient steps")
    p.add_argument("--lr", type=float, default=0.3, help="learning rate")
    p.add_argument("--seed", type=int, default=0, help="seed for --stochastic ordering")
    p.add_argument("--stochastic", action="store_true", help="per-example updates")
    p.add_argument("--out", required=True, help="weights JSON to write")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("decode", help="decode passage sets")
    data_args(p)
    p.add_argument("--scorer", choices=("oracle", "loglinear", "uniform"), default="oracle", help="next-passage scorer")
    p.add_argument("--weights", help="log-linear weights JSON")
    p.add_argument("--algo", choices=ALGOS, default="tree", help="decoding algorithm")
    p.add_argument("--k", type=int, default=5, help="passages to select")
    p.add_argument("--beta", type=float, default=0.0, help="length penalty exponent")
    p.add_argument("--seed", type=int, default=None, help="re-assign candidate indexes with this seed")
    p.add_argument("--out", required=True, help="predictions JSONL to write")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("evaluate", help="score predictions")
    data_args(p)
    p.add_argument("--predictions", required=True, help="predictions JSONL")
    p.add_argument("--k", type=int, default=5, help="cutoff")
    p.add_argument("--alpha", type=float, default=0.9, help="alpha-NDCG redundancy penalty")
    p.add_argument("--bucket", type=int, default=None, help="fold answer counts >= this into one bucket")
    p.add_argument("--out", help="JSON report to write")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic world")
    p.add_argument("--questions", type=int, default=50, help="number of questions")
    p.add_argument("--answers", default="2,3", help="answer counts to draw from, comma separated")
    p.add_argument("--duplication", default="5,1", help="passages per answer position, comma separated")
    p.add_argument("--aliases", type=int, default=2, help="aliases per answer")
    p.add_argument("--distractors", type=int, default=8, help="distractor passages per question")
    p.add_argument("--vocab-seed", type=int, default=0, help="pseudo-word vocabulary seed")
    p.add_argument("--seed", type=int, default=0, help="world seed")
    p.add_argument("--out-dir", required=True, help="directory for corpus.jsonl and questions.jsonl")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("run", help="run the whole pipeline from a JSON config")
    p.add_argument("--config", required=True, help="pipeline config JSON")
    p.set_defaults(func=cmd_run)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (PipelineError, core.DatasetError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
