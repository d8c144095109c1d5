"""Joint reranking of passages for questions with several distinct answers."""

from .core import AnswerSet, CandidateSet, Passage, Question, SupervisionExample, Tree, validate_dataset
from .decoding import (
    depth_stats,
    length_penalty,
    reference_tree_decode,
    seq_decode,
    topk_decode,
    tree_decode,
    tree_depth,
    tree_score,
)
from .evaluation import alpha_ndcg_at_k, breakdown_report, mrecall_at_k, recall_at_k
from .first_stage import build_index, retrieve
from .matching import covers, normalize, preproc_positives, trec_pipeline
from .scoring import CoverageOracleScorer, LogLinearScorer, TabularScorer, UniformScorer, score_next
from .supervision import (
    build_dynamic_oracle_example,
    build_teacher_forcing_example,
    dynamic_oracle_loss,
    sample_negatives,
    train_loglinear,
)

__version__ = "0.1.0"

__all__ = [
    "AnswerSet",
    "CandidateSet",
    "Passage",
    "Question",
    "SupervisionExample",
    "Tree",
    "validate_dataset",
    "depth_stats",
    "length_penalty",
    "reference_tree_decode",
    "seq_decode",
    "topk_decode",
    "tree_decode",
    "tree_depth",
    "tree_score",
    "alpha_ndcg_at_k",
    "breakdown_report",
    "mrecall_at_k",
    "recall_at_k",
    "build_index",
    "retrieve",
    "covers",
    "normalize",
    "preproc_positives",
    "trec_pipeline",
    "CoverageOracleScorer",
    "LogLinearScorer",
    "TabularScorer",
    "UniformScorer",
    "score_next",
    "build_dynamic_oracle_example",
    "build_teacher_forcing_example",
    "dynamic_oracle_loss",
    "sample_negatives",
    "train_loglinear",
]
