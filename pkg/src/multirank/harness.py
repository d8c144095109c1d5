"""End-to-end pipeline: index, retrieve, (train), decode, evaluate.

Every stage writes its output under ``output_dir`` so it can be rerun on
its own from the CLI. All randomness comes from the seeds in the config.
"""

from __future__ import annotations

import json
import logging
import zlib
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .core import (
    CandidateSet,
    Passage,
    Question,
    Tree,
    load_corpus,
    load_questions,
    validate_dataset,
    write_jsonl,
)
from .decoding import decode, tree_depth
from .evaluation import EvalReport, evaluate
from .first_stage import LexicalIndex, build_index, retrieve
from .scoring import CoverageOracleScorer, Scorer, UniformScorer
from .supervision import build_dynamic_oracle_example, build_teacher_forcing_example, train_loglinear
from .synthetic import SyntheticWorldSpec, generate_synthetic_world

logger = logging.getLogger(__name__)

SCORERS = ("oracle", "loglinear", "uniform")
ALGOS = ("seq", "tree", "topk")


class ConfigError(ValueError):
    pass


class PipelineError(RuntimeError):
    def __init__(self, stage: str, exc: BaseException):
        super().__init__(f"stage {stage!r} failed: {exc}")
        self.stage = stage


@dataclass(frozen=True)
class PipelineConfig:
    output_dir: str
    corpus: str | None = None
    questions: str | None = None
    train_questions: str | None = None
    synth: SyntheticWorldSpec | None = None
    k: int = 5
    candidates: int = 100
    beta: float = 0.0
    gamma: float = 1.0
    alpha: float = 0.9
    scorer: str = "oracle"
    algo: str = "tree"
    supervision: str = "dynamic"
    epochs: int = 200
    learning_rate: float = 0.3
    index_seed: int = 0
    supervision_seed: int = 0
    train_seed: int = 0
    synth_seed: int = 0

    def __post_init__(self):
        if isinstance(self.synth, Mapping):
            object.__setattr__(self, "synth", SyntheticWorldSpec.from_json(self.synth))
        self.validate()

    def validate(self) -> None:
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.k > self.candidates:
            raise ConfigError(f"k={self.k} exceeds candidate pool size {self.candidates}")
        if self.scorer not in SCORERS:
            raise ConfigError(f"scorer must be one of {SCORERS}")
        if self.algo not in ALGOS:
            raise ConfigError(f"algo must be one of {ALGOS}")
        if self.supervision not in ("dynamic", "teacher"):
            raise ConfigError("supervision must be 'dynamic' or 'teacher'")
        if self.synth is None and (self.corpus is None or self.questions is None):
            raise ConfigError("need either a synth spec or both corpus and questions paths")
        if self.gamma < 0:
            raise ConfigError("gamma must be >= 0")

    def to_json(self) -> dict[str, Any]:
        out = asdict(self)
        if self.synth is not None:
            out["synth"] = self.synth.to_json()
        return out

    @classmethod
    def from_json(cls, payload: Mapping[str, Any]) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(payload) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        return cls(**payload)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        cfg = cls.from_json(payload)
        # relative paths are resolved against the config file's directory
        base = Path(path).parent
        updates = {}
        for name in ("output_dir", "corpus", "questions", "train_questions"):
            value = getattr(cfg, name)
            if value is not None and not Path(value).is_absolute():
                updates[name] = str(base / value)
        return cls(**{**payload, **updates})


def question_seed(base: int, qid: str) -> int:
    """Per-question seed derived from a base seed and the question id."""
    return int(np.random.SeedSequence([base, zlib.crc32(qid.encode("utf-8"))]).generate_state(1)[0])


def retrieve_all(
    index: LexicalIndex, questions: Sequence[Question], size: int, seed: int | None
) -> dict[str, CandidateSet]:
    out = {}
    for q in sorted(questions, key=lambda q: q.id):
        out[q.id] = retrieve(index, q, size=size, seed=None if seed is None else question_seed(seed, q.id))
    return out


def make_supervision(
    questions: Sequence[Question],
    candidates: Mapping[str, CandidateSet],
    k: int,
    gamma: float,
    seed: int,
    kind: str = "dynamic",
    pool_fraction: float | None = None,
) -> list:
    """Training triples ``(question, candidate_set, example)``; skipped questions are dropped."""
    out = []
    for q in sorted(questions, key=lambda q: q.id):
        cs = candidates[q.id]
        if kind == "dynamic":
            ex = build_dynamic_oracle_example(q, cs, k, gamma, question_seed(seed, q.id), pool_fraction)
        else:
            ex = build_teacher_forcing_example(q, cs, k)
        if ex is not None:
            out.append((q, cs, ex))
    return out


def decode_all(
    scorer: Scorer,
    questions: Sequence[Question],
    candidates: Mapping[str, CandidateSet],
    algo: str,
    k: int,
    beta: float,
) -> dict[str, Tree]:
    return {q.id: decode(algo, scorer, q, candidates[q.id], k, beta) for q in sorted(questions, key=lambda q: q.id)}


def evaluate_trees(
    questions: Sequence[Question],
    candidates: Mapping[str, CandidateSet],
    trees: Mapping[str, Tree],
    k: int,
    alpha: float = 0.9,
    **meta,
) -> EvalReport:
    """Evaluate selections in insertion order (the order passages joined the set)."""
    qmap = {q.id: q for q in questions}
    rankings = {qid: [candidates[qid].passage(i) for i in t.selected] for qid, t in trees.items()}
    depths = {qid: tree_depth(t) for qid, t in trees.items() if t.selected}
    return evaluate(qmap, rankings, k, alpha, depths, **meta)


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:  # noqa: BLE001 - re-raised with the stage name
        raise PipelineError(name, exc) from exc


def _load_data(config: PipelineConfig, out: Path) -> tuple[list[Passage], list[Question], list[Question]]:
    if config.synth is not None:
        corpus, questions = generate_synthetic_world(config.synth, config.synth_seed)
        # a second world with the next seed serves as training data
        train_corpus, train_q = generate_synthetic_world(config.synth, config.synth_seed + 1)
        train_q = [Question(f"train-{q.id}", q.text, q.answer_set) for q in train_q]
        train_corpus = [Passage(f"train-{p.id}", p.title, p.text) for p in train_corpus]
        corpus = corpus + train_corpus
        write_jsonl(out / "corpus.jsonl", (p.to_record() for p in corpus))
        write_jsonl(out / "questions.jsonl", (q.to_record() for q in questions))
        write_jsonl(out / "train_questions.jsonl", (q.to_record() for q in train_q))
        return corpus, questions, train_q
    corpus = load_corpus(config.corpus)
    questions = load_questions(config.questions)
    train_q = load_questions(config.train_questions) if config.train_questions else questions
    return corpus, questions, train_q


def run_pipeline(config: PipelineConfig) -> EvalReport:
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w", encoding="utf-8") as fh:
        json.dump(config.to_json(), fh, indent=2, sort_keys=True)
        fh.write("\n")

    corpus, questions, train_q = _stage("load", _load_data, config, out)
    problems = validate_dataset(questions, corpus)
    if problems:
        raise PipelineError("validate", ValueError("; ".join(problems[:10])))

    index = _stage("index", build_index, corpus)
    index.save(out / "index.json")

    candidates = _stage("retrieve", retrieve_all, index, questions, config.candidates, config.index_seed)
    write_jsonl(out / "candidates.jsonl", (c.to_record() for c in candidates.values()))

    if config.scorer == "loglinear":
        train_cands = _stage("retrieve", retrieve_all, index, train_q, config.candidates, config.index_seed)
        triples = _stage(
            "make-supervision", make_supervision, train_q, train_cands, config.k, config.gamma,
            config.supervision_seed, config.supervision,
        )
        write_jsonl(out / "supervision.jsonl", (ex.to_record() for _, _, ex in triples))
        history: list[float] = []
        trained = _stage(
            "train", train_loglinear, triples, config.epochs, config.learning_rate, config.train_seed,
            history=history,
        )
        trained.save(out / "weights.json")
        # decoding never reads gold answers
        scorer: Scorer = trained.with_answers(False)
    elif config.scorer == "oracle":
        scorer = CoverageOracleScorer()
    else:
        scorer = UniformScorer()

    trees = _stage("decode", decode_all, scorer, questions, candidates, config.algo, config.k, config.beta)
    write_jsonl(out / "predictions.jsonl", (t.to_record(qid) for qid, t in trees.items()))

    report = _stage(
        "evaluate", evaluate_trees, questions, candidates, trees, config.k, config.alpha,
        beta=config.beta, gamma=config.gamma, algo=config.algo,
    )
    (out / "report.json").write_text(report.dumps(), encoding="utf-8")
    (out / "report.txt").write_text(report.table(), encoding="utf-8")
    return report
