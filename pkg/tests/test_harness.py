import json

import pytest

from multirank.cli import build_parser, main
from multirank.core import load_corpus, load_predictions, load_questions, validate_dataset, write_jsonl
from multirank.harness import ConfigError, PipelineConfig, PipelineError, run_pipeline
from multirank.matching import covers
from multirank.synthetic import SyntheticWorldSpec, generate_synthetic_world


def coverage_counts(corpus, question):
    return [sum(covers(p, a) for p in corpus) for a in question.answer_set]


def test_single_answer_single_passage():
    spec = SyntheticWorldSpec(n_questions=1, answers_per_question=(1,), duplication=(1,), distractors=0)
    corpus, qs = generate_synthetic_world(spec, 0)
    assert len(corpus) == 1 and coverage_counts(corpus, qs[0]) == [1]


def test_duplication_controls_coverage():
    spec = SyntheticWorldSpec(n_questions=5, answers_per_question=(2,), duplication=(5, 1))
    corpus, qs = generate_synthetic_world(spec, 3)
    for q in qs:
        assert coverage_counts(corpus, q) == [5, 1]


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_world_invariants(seed):
    spec = SyntheticWorldSpec(n_questions=20)
    corpus, qs = generate_synthetic_world(spec, seed)
    assert validate_dataset(qs, corpus) == []
    for q in qs:
        for ai, answer in enumerate(q.answer_set):
            hits = [p.id for p in corpus if covers(p, answer)]
            assert hits and all(h.startswith(f"{q.id}-a{ai}-") for h in hits)
        distractors = [p for p in corpus if p.id.startswith(f"{q.id}-d")]
        assert not any(covers(p, a) for p in distractors for a in q.answer_set)


def test_seed_changes_world():
    spec = SyntheticWorldSpec(n_questions=5)
    assert generate_synthetic_world(spec, 0) != generate_synthetic_world(spec, 1)
    assert generate_synthetic_world(spec, 4) == generate_synthetic_world(spec, 4)


def test_config_rejects_k_above_pool(tmp_path):
    with pytest.raises(ConfigError):
        PipelineConfig(output_dir=str(tmp_path), synth=SyntheticWorldSpec(n_questions=2), k=10, candidates=5)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown"):
        PipelineConfig.from_json({"output_dir": "x", "bogus": 1})


def test_pipeline_fixture(tmp_path, corpus, fixture_questions):
    write_jsonl(tmp_path / "corpus.jsonl", (p.to_record() for p in corpus))
    write_jsonl(tmp_path / "questions.jsonl", (q.to_record() for q in fixture_questions))
    cfg = PipelineConfig(
        output_dir=str(tmp_path / "out"),
        corpus=str(tmp_path / "corpus.jsonl"),
        questions=str(tmp_path / "questions.jsonl"),
        k=2,
        candidates=4,
        algo="seq",
    )
    report = run_pipeline(cfg)
    assert len(report.records) == 3
    for name in ("index.json", "candidates.jsonl", "predictions.jsonl", "report.json", "report.txt"):
        assert (tmp_path / "out" / name).exists()


def test_pipeline_stage_error_names_stage(tmp_path, corpus, fixture_questions):
    write_jsonl(tmp_path / "corpus.jsonl", (p.to_record() for p in corpus))
    (tmp_path / "questions.jsonl").write_text("{not json\n")
    cfg = PipelineConfig(
        output_dir=str(tmp_path / "out"),
        corpus=str(tmp_path / "corpus.jsonl"),
        questions=str(tmp_path / "questions.jsonl"),
        k=2,
        candidates=4,
    )
    with pytest.raises(PipelineError, match="load"):
        run_pipeline(cfg)


def test_pipeline_loglinear_synthetic(tmp_path):
    cfg = PipelineConfig(
        output_dir=str(tmp_path),
        synth=SyntheticWorldSpec(n_questions=10),
        k=5,
        candidates=20,
        scorer="loglinear",
        epochs=20,
        learning_rate=0.3,
    )
    report = run_pipeline(cfg)
    assert len(report.records) == 10
    weights = json.loads((tmp_path / "weights.json").read_text())
    assert set(weights) == {"lexical_overlap", "prior", "novelty", "prefix_overlap"}


def test_help_documents_subcommands(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--help"])
    out = capsys.readouterr().out
    for cmd in ("index", "retrieve", "preprocess-trec", "make-supervision", "train", "decode", "evaluate", "synth", "run"):
        assert cmd in out


def test_cli_stages_end_to_end(tmp_path, capsys):
    d = tmp_path
    assert main(["synth", "--questions", "6", "--seed", "2", "--out-dir", str(d)]) == 0
    assert main(["index", "--corpus", str(d / "corpus.jsonl"), "--out", str(d / "index.json")]) == 0
    assert main([
        "retrieve", "--index", str(d / "index.json"), "--questions", str(d / "questions.jsonl"),
        "--size", "15", "--out", str(d / "cands.jsonl"),
    ]) == 0
    data = ["--corpus", str(d / "corpus.jsonl"), "--questions", str(d / "questions.jsonl"), "--candidates", str(d / "cands.jsonl")]
    assert main(["make-supervision", *data, "--k", "3", "--gamma", "0.5", "--out", str(d / "sup.jsonl")]) == 0
    assert main(["train", *data, "--supervision", str(d / "sup.jsonl"), "--epochs", "10", "--lr", "0.2", "--out", str(d / "w.json")]) == 0
    for algo in ("seq", "tree", "topk"):
        out = d / f"pred-{algo}.jsonl"
        assert main(["decode", *data, "--algo", algo, "--k", "3", "--beta", "1.0", "--out", str(out)]) == 0
        assert len(load_predictions(out)) == 6
    assert main(["decode", *data, "--scorer", "loglinear", "--weights", str(d / "w.json"), "--k", "3", "--out", str(d / "pl.jsonl")]) == 0
    assert main(["evaluate", *data, "--predictions", str(d / "pred-tree.jsonl"), "--k", "3", "--bucket", "3", "--out", str(d / "rep.json")]) == 0
    rep = json.loads((d / "rep.json").read_text())
    assert len(rep["questions"]) == 6 and rep["breakdown"][-1]["bucket"].endswith(("+", "2"))
    assert "MRecall" in capsys.readouterr().out


def test_cli_preprocess_trec(tmp_path):
    write_jsonl(tmp_path / "corpus.jsonl", [
        {"id": "1", "title": "", "text": "Flights to New York and Long Island"},
        {"id": "2", "title": "", "text": "NewYork and Roosevelt Field"},
    ])
    write_jsonl(tmp_path / "trec.jsonl", [
        {"id": "t1", "question": "where", "answer_regex": r"Long Island|New\s?York|Roosevelt Field"},
        {"id": "t2", "question": "who", "answer_regex": "Nobody Here"},
    ])
    rc = main([
        "preprocess-trec", "--input", str(tmp_path / "trec.jsonl"), "--corpus", str(tmp_path / "corpus.jsonl"),
        "--out", str(tmp_path / "q.jsonl"), "--discards", str(tmp_path / "d.jsonl"),
    ])
    assert rc == 0
    (q,) = load_questions(tmp_path / "q.jsonl")
    assert len(q.answer_set) == 3
    assert "t2" in (tmp_path / "d.jsonl").read_text()


def test_cli_reports_errors(tmp_path, capsys):
    assert main(["index", "--corpus", str(tmp_path / "missing.jsonl"), "--out", str(tmp_path / "i.json")]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_run_config(tmp_path):
    cfg = {"output_dir": "out", "synth": {"n_questions": 4}, "k": 3, "candidates": 12}
    (tmp_path / "cfg.json").write_text(json.dumps(cfg))
    assert main(["run", "--config", str(tmp_path / "cfg.json")]) == 0
    assert (tmp_path / "out" / "report.json").exists()
    assert len(load_corpus(tmp_path / "out" / "corpus.jsonl")) > 0
