"""A small encoder-decoder transformer over typed character streams.

Input embeddings are the sum of three learned tables: token, type, and
absolute position.  The type table has exactly five rows — the full type-id
inventory of the encoded file format — so typed and untyped tokens of the
same character are distinguishable to the encoder.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn

from .errors import ToyDataError
from .io import TYPE_COUNT


@dataclass(frozen=True)
class ToyModelConfig:
    """Architecture hyperparameters; everything needed to rebuild the net."""

    vocab_size: int
    layers: int = 2
    hidden: int = 64
    heads: int = 4
    feed_forward: int = 256
    type_count: int = TYPE_COUNT
    max_len: int = 256
    dropout: float = 0.0
    position: str = "learned-absolute"

    def __post_init__(self) -> None:
        if self.vocab_size < 1:
            raise ToyDataError("vocab_size must be positive")
        if self.type_count != TYPE_COUNT:
            raise ToyDataError(
                f"type table must have exactly {TYPE_COUNT} rows to match the "
                f"encoded format, not {self.type_count}"
            )
        if self.hidden % self.heads:
            raise ToyDataError("hidden size must be divisible by head count")
        if self.layers < 1 or self.max_len < 2:
            raise ToyDataError("layers must be >= 1 and max_len >= 2")
        if self.position != "learned-absolute":
            raise ToyDataError(f"unknown position scheme {self.position!r}")

    def to_obj(self) -> dict:
        return asdict(self)

    @classmethod
    def from_obj(cls, obj: dict) -> "ToyModelConfig":
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ToyDataError(f"malformed model config: {exc}") from exc


class Seq2Seq(nn.Module):
    """Token+type+position embeddings feeding a transformer encoder-decoder."""

    def __init__(self, cfg: ToyModelConfig):
        super().__init__()
        self.cfg = cfg
        self.token_embedding = nn.Embedding(cfg.vocab_size, cfg.hidden)
        self.type_embedding = nn.Embedding(cfg.type_count, cfg.hidden)
        self.position_embedding = nn.Embedding(cfg.max_len, cfg.hidden)
        encoder_layer = nn.TransformerEncoderLayer(
            d_model=cfg.hidden,
            nhead=cfg.heads,
            dim_feedforward=cfg.feed_forward,
            dropout=cfg.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(
            encoder_layer, cfg.layers, enable_nested_tensor=False
        )
        decoder_layer = nn.TransformerDecoderLayer(
            d_model=cfg.hidden,
            nhead=cfg.heads,
            dim_feedforward=cfg.feed_forward,
            dropout=cfg.dropout,
            batch_first=True,
        )
        self.decoder = nn.TransformerDecoder(decoder_layer, cfg.layers)
        self.output = nn.Linear(cfg.hidden, cfg.vocab_size)

    def embed(self, ids: torch.Tensor, types: torch.Tensor) -> torch.Tensor:
        """Sum of token, type, and position embeddings for (B, L) inputs."""
        if ids.size(1) > self.cfg.max_len:
            raise ToyDataError(
                f"sequence length {ids.size(1)} exceeds max_len {self.cfg.max_len}"
            )
        positions = torch.arange(ids.size(1), device=ids.device)
        return (
            self.token_embedding(ids)
            + self.type_embedding(types)
            + self.position_embedding(positions)
        )

    def encode(self, src_ids, src_types, src_pad_mask):
        return self.encoder(
            self.embed(src_ids, src_types), src_key_padding_mask=src_pad_mask
        )

    def decode(self, tgt_ids, tgt_types, memory, src_pad_mask, tgt_pad_mask=None):
        length = tgt_ids.size(1)
        causal = nn.Transformer.generate_square_subsequent_mask(
            length, device=tgt_ids.device
        )
        hidden = self.decoder(
            self.embed(tgt_ids, tgt_types),
            memory,
            tgt_mask=causal,
            tgt_key_padding_mask=tgt_pad_mask,
            memory_key_padding_mask=src_pad_mask,
        )
        return self.output(hidden)

    def forward(self, src_ids, src_types, src_pad_mask, tgt_ids, tgt_types,
                tgt_pad_mask=None):
        memory = self.encode(src_ids, src_types, src_pad_mask)
        return self.decode(
            tgt_ids, tgt_types, memory, src_pad_mask, tgt_pad_mask
        )
