"""Minimal encoder-decoder trainer for typed character-level seq2seq data.

Consumes the dataset toolchain's vocabulary and encoded binary formats
through its own readers; shares no code with the producer.
"""
from .errors import ToyDataError, ToyError
from .io import (
    SPECIAL_TOKENS,
    TYPE_COUNT,
    TYPE_PAD,
    TYPE_PRODUCT,
    TYPE_REACTANT,
    TYPE_REACTION,
    TYPE_SPECIAL,
    EncodedDataset,
    Example,
    Vocabulary,
    check_ids_in_vocab,
    read_encoded,
)
from .model import Seq2Seq, ToyModelConfig
from .predict import predict
from .train import load_checkpoint, train

__version__ = "0.1.0"

__all__ = [
    "EncodedDataset",
    "Example",
    "Seq2Seq",
    "SPECIAL_TOKENS",
    "TYPE_COUNT",
    "TYPE_PAD",
    "TYPE_PRODUCT",
    "TYPE_REACTANT",
    "TYPE_REACTION",
    "TYPE_SPECIAL",
    "ToyDataError",
    "ToyError",
    "ToyModelConfig",
    "Vocabulary",
    "check_ids_in_vocab",
    "load_checkpoint",
    "predict",
    "read_encoded",
    "train",
    "__version__",
]
