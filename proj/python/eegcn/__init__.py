"""Aspect-level sentiment classification with syntax-weighted graph convolution."""

from ._eegcn import (
    DataError,
    DependencyGraph,
    Example,
    NonFiniteLossError,
    SdiTable,
    VersionError,
    accuracy,
    binary_adjacency,
    compute_sdi_table,
    default_config,
    evaluate,
    label_counts,
    load_examples,
    macro_f1,
    parse_conllu,
    parse_conllu_text,
    positional_encoding,
    predict_proba,
    sdi_adjacency,
    train,
)

CLASSES = ("negative", "neutral", "positive")

__all__ = [
    "CLASSES",
    "DataError",
    "DependencyGraph",
    "Example",
    "NonFiniteLossError",
    "SdiTable",
    "VersionError",
    "accuracy",
    "binary_adjacency",
    "compute_sdi_table",
    "default_config",
    "evaluate",
    "label_counts",
    "load_examples",
    "macro_f1",
    "parse_conllu",
    "parse_conllu_text",
    "positional_encoding",
    "predict_proba",
    "sdi_adjacency",
    "train",
]
