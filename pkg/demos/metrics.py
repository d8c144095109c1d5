"""
MRecall and alpha-NDCG by hand
==============================

Two rankings of the same four passages. Both cover both answers, so
MRecall@4 agrees; alpha-NDCG prefers the one that does not repeat an
answer before covering the other.
"""

from multirank import mrecall_at_k, recall_at_k
from multirank.core import AnswerSet
from multirank.evaluation import alpha_dcg, alpha_ndcg_at_k, coverage

answers = AnswerSet((("paris",), ("lyon",)))
redundant = ["paris is big", "paris again", "more paris", "lyon too"]
diverse = ["paris is big", "lyon too", "paris again", "more paris"]

for name, ranking in (("redundant", redundant), ("diverse", diverse)):
    cov = coverage(answers, ranking)
    print(
        f"{name:<10} coverage={[sorted(c) for c in cov]}",
        f"recall@1={recall_at_k(answers, ranking, 1)}",
        f"mrecall@2={mrecall_at_k(answers, ranking, 2)}",
        f"mrecall@4={mrecall_at_k(answers, ranking, 4)}",
        f"dcg={alpha_dcg(cov):.3f}",
        f"a-ndcg={alpha_ndcg_at_k(answers, ranking):.3f}",
    )
