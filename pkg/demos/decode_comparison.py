"""
Tree decoding versus independent top-k
======================================

A synthetic world where the first answer of every question is written up
in five near-identical passages and the others in one each. A scorer that
ranks passages independently fills its top-5 with the duplicates; the
tree decoder conditions on what it already picked and moves on.
"""

from multirank import CoverageOracleScorer, build_index, retrieve
from multirank.decoding import decode, depth_stats
from multirank.harness import evaluate_trees, question_seed
from multirank.synthetic import SyntheticWorldSpec, generate_synthetic_world

# a small world: 40 questions, 2 or 3 answers each
spec = SyntheticWorldSpec(n_questions=40, duplication=(5, 1))
corpus, questions = generate_synthetic_world(spec, seed=3)
print(f"{len(corpus)} passages, {len(questions)} questions")

# first stage: BM25 over the whole corpus, 30 candidates per question
index = build_index(corpus)
candidates = {q.id: retrieve(index, q, size=30, seed=question_seed(0, q.id)) for q in questions}

# the coverage oracle reads gold answers, so it isolates the decoder
scorer = CoverageOracleScorer()
for algo in ("topk", "seq", "tree"):
    trees = {q.id: decode(algo, scorer, q, candidates[q.id], k=5) for q in questions}
    report = evaluate_trees(questions, candidates, trees, k=5, algo=algo)
    print(report.table().splitlines()[2], f"<- {algo}, mean depth {depth_stats(trees.values()):.1f}")
