"""Diversity-aware batch active learning for dependency parsing."""

from .config import RunConfig, config_from_mapping, load_config
from .treebank import (
    Corpus,
    PoolState,
    Sentence,
    Token,
    duplicate_corpus,
    read_conllu,
    seed_pool,
    write_conllu,
)

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "PoolState",
    "RunConfig",
    "Sentence",
    "Token",
    "config_from_mapping",
    "duplicate_corpus",
    "load_config",
    "read_conllu",
    "seed_pool",
    "write_conllu",
    "__version__",
]
