"""Contrastive n-gram style metrics for caption evaluation.

Builds per-style n-gram indexes from labeled caption corpora and scores
captions with a reference-free style metric, a reference-based style
metric, and plain n-gram baselines, plus the evaluation protocols that use
them.
"""

__version__ = "0.1.0"

from .cng import (
    FORMAT_VERSION,
    CngIndex,
    DocFreqTable,
    build_index,
    cng_score,
    doc_frequency,
    ecdf,
    load_index,
    save_index,
)
from .corpus import CaptionRecord, dataset_stats, load_dataset
from .errors import (
    DatasetError,
    IndexFormatError,
    IndexVersionError,
    StylemetricError,
    UsageError,
)
from .metrics import (
    TfidfIndex,
    bleu,
    build_tfidf,
    cider,
    corpus_bleu,
    cosine_similarity,
    only_style,
    only_style_batch,
    style_cider,
    style_vector,
)
from .protocols import (
    cng_inspect,
    eval_ground_truth,
    eval_model_outputs,
    only_style_all,
    rank_correlation,
    retrieval_rank,
)
from .text import ORDERS, TOKENIZER_RULE, extract_ngrams, tokenize

__all__ = [
    "FORMAT_VERSION",
    "ORDERS",
    "TOKENIZER_RULE",
    "CaptionRecord",
    "CngIndex",
    "DatasetError",
    "DocFreqTable",
    "IndexFormatError",
    "IndexVersionError",
    "StylemetricError",
    "TfidfIndex",
    "UsageError",
    "bleu",
    "build_index",
    "build_tfidf",
    "cider",
    "cng_inspect",
    "cng_score",
    "corpus_bleu",
    "cosine_similarity",
    "dataset_stats",
    "doc_frequency",
    "ecdf",
    "eval_ground_truth",
    "eval_model_outputs",
    "extract_ngrams",
    "load_dataset",
    "load_index",
    "only_style",
    "only_style_all",
    "only_style_batch",
    "rank_correlation",
    "retrieval_rank",
    "save_index",
    "style_cider",
    "style_vector",
    "tokenize",
    "__version__",
]
