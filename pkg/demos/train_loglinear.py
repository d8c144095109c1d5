"""
Training the log-linear scorer
==============================

Dynamic-oracle supervision: for a random prefix, every positive passage
not yet in the prefix counts as a correct next choice. The scorer has
four features and is fit by plain gradient descent.
"""

import numpy as np

from multirank import build_index, retrieve, train_loglinear
from multirank.harness import evaluate_trees, make_supervision, question_seed
from multirank.decoding import decode
from multirank.scoring import FEATURES
from multirank.synthetic import SyntheticWorldSpec, generate_synthetic_world

spec = SyntheticWorldSpec(n_questions=30, duplication=(1,))
train_corpus, train_q = generate_synthetic_world(spec, seed=1)
index = build_index(train_corpus)
cands = {q.id: retrieve(index, q, size=30, seed=question_seed(0, q.id)) for q in train_q}

triples = make_supervision(train_q, cands, k=5, gamma=1.0, seed=0)
history = []
scorer = train_loglinear(triples, epochs=200, learning_rate=0.3, history=history)
print(f"loss {history[0]:.3f} -> {history[-1]:.3f} ({1 - history[-1] / history[0]:.0%} lower)")
print("loss is monotone:", bool(np.all(np.diff(history) <= 1e-12)))
for name, w in zip(FEATURES, scorer.weights):
    print(f"  {name:<16}{w:+.3f}")

# decode a held-out world without access to gold answers
test_corpus, test_q = generate_synthetic_world(spec, seed=2)
index = build_index(test_corpus)
cands = {q.id: retrieve(index, q, size=30, seed=question_seed(0, q.id)) for q in test_q}
blind = scorer.with_answers(False)
trees = {q.id: decode("tree", blind, q, cands[q.id], k=5) for q in test_q}
print(evaluate_trees(test_q, cands, trees, k=5, algo="tree").table())
