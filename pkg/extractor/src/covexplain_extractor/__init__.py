"""Transformer feature extraction companion for the covexplain toolkit."""

from .extract import (CVXE_MAGIC, CVXE_VERSION, ExtractorConfig,
                      ExtractorError, extract_embeddings, read_corpus_field,
                      sanitize_text, write_cvxe)

__all__ = [
    "CVXE_MAGIC", "CVXE_VERSION", "ExtractorConfig", "ExtractorError",
    "extract_embeddings", "read_corpus_field", "sanitize_text", "write_cvxe",
]
