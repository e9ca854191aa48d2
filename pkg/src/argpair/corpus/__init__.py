"""Thread ingestion, instance extraction, vocabulary and dataset statistics."""
from .extract import extract_instances, reply_body, reply_pairs
from .instances import (
    MAX_ARG_TOKENS, MAX_CONTEXT_ARGS, MAX_TOKENS, MIN_TOKENS, NEGATIVES, Argument, DataError,
    EncodedInstance, Instance, encode_instance, instance_texts, read_dataset, read_threads,
    validate_instance, write_dataset,
)
from .stats import CorpusStats, MeanStd, corpus_stats
from .synthetic import generate_synthetic
from .text import normalize, split_quote_blocks, split_sentences, tokenize
from .vocab import BOS, EOS, PAD, RESERVED, UNK, Vocabulary, build_vocabulary

__all__ = [
    "Argument", "BOS", "CorpusStats", "DataError", "EOS", "EncodedInstance", "Instance",
    "MAX_ARG_TOKENS", "MAX_CONTEXT_ARGS", "MAX_TOKENS", "MIN_TOKENS", "MeanStd", "NEGATIVES", "PAD",
    "RESERVED", "UNK", "Vocabulary", "build_vocabulary", "corpus_stats", "encode_instance",
    "extract_instances", "generate_synthetic", "instance_texts", "normalize", "read_dataset",
    "read_threads", "reply_body", "reply_pairs", "split_quote_blocks", "split_sentences",
    "tokenize", "validate_instance", "write_dataset",
]
