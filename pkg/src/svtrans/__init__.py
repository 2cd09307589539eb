"""Paraphrase-supervised refinement of averaged word-vector sentence embeddings.

A single d x d transition matrix is trained on caption paraphrase pairs so
that refined sentence vectors of paraphrases become similar and those of
unrelated sentences become dissimilar; evaluation follows the standard
semantic-textual-similarity protocol (cosine scores vs gold judgments,
Pearson and Spearman correlation).
"""

from ._core import backend_name
from .corpus import (CaptionGroup, ParaphraseBatch, SubTrainingSet, batches,
                     build_sub_training_sets, enumerate_pairs,
                     load_caption_corpus, subsample_images, write_sets_tsv)
from .embeddings import (CachingEmbedder, SentenceVector, WordVectorTable,
                         embed_sentence, load_word_vectors, tokenize)
from .errors import (AllTokensUnknown, ConfigError, ConstantSeries,
                     DegenerateVector, EmptyCorpusError, EvaluationError,
                     ParseError, SvtransError)
from .evaluation import (ComparisonRow, EvalReport, StsDataset, StsPair,
                         compare, comparison_text, comparison_tsv, cosine,
                         evaluate, load_sts_dataset, pearson, ranks, report_tsv,
                         spearman)
from .trainer import (InnerEpochLog, LossBreakdown, SimilarityMatrix,
                      TrainerConfig, TransitionMatrix,
                      build_similarity_matrix, coherence_conditions_report,
                      compute_loss, load_matrix, loss_gradient, matrix_to_tsv,
                      refine_vector, rmsprop_step, save_matrix, train,
                      transform_batch, write_training_log, xavier_init)

__version__ = "0.1.0"

__all__ = [
    "AllTokensUnknown", "CachingEmbedder", "CaptionGroup", "ComparisonRow",
    "ConfigError", "ConstantSeries", "DegenerateVector", "EmptyCorpusError",
    "EvalReport", "EvaluationError", "InnerEpochLog", "LossBreakdown",
    "ParaphraseBatch", "ParseError", "SentenceVector", "SimilarityMatrix",
    "StsDataset", "StsPair", "SubTrainingSet", "SvtransError", "TrainerConfig",
    "TransitionMatrix", "WordVectorTable", "backend_name", "batches",
    "build_similarity_matrix", "build_sub_training_sets",
    "coherence_conditions_report", "compare", "comparison_text",
    "comparison_tsv", "compute_loss", "cosine", "embed_sentence",
    "enumerate_pairs", "evaluate", "load_caption_corpus", "load_matrix",
    "load_sts_dataset", "load_word_vectors", "loss_gradient", "matrix_to_tsv",
    "pearson", "ranks", "refine_vector", "report_tsv", "rmsprop_step",
    "save_matrix", "spearman", "subsample_images", "tokenize", "train",
    "transform_batch", "write_sets_tsv", "write_training_log", "xavier_init",
]
