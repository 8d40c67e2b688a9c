"""Readers for the dataset toolchain's on-disk interchange formats.

This module is the component boundary: it parses the documented external
formats — vocabulary files and encoded tensor files — and shares no code
with the tool that produces them.

Vocabulary file: UTF-8 text, one token per line.  The special tokens
``<pad> <bos> <eos> <sep> <unk>`` come first (ids 0-4), followed by
single-character tokens.

Encoded dataset ``PREFIX``: six binary files plus metadata.

- ``PREFIX.{src,tgt}.ids`` / ``.types``: little-endian int32, the flat
  concatenation of every example's token ids / type ids.
- ``PREFIX.{src,tgt}.idx``: little-endian int64, M+1 offsets in token
  units; example ``i`` spans ``[idx[i], idx[i+1])``.
- ``PREFIX.meta.json``: at least ``examples`` (M), ``records`` and
  ``record_of`` (mapping each example to its source record index).

Type ids form a fixed five-entry inventory shared with the producer:
0 pad, 1 reactant, 2 reaction, 3 product, 4 special.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

from .errors import ToyDataError

PAD_TOKEN = "<pad>"
BOS_TOKEN = "<bos>"
EOS_TOKEN = "<eos>"
SEP_TOKEN = "<sep>"
UNK_TOKEN = "<unk>"
SPECIAL_TOKENS = (PAD_TOKEN, BOS_TOKEN, EOS_TOKEN, SEP_TOKEN, UNK_TOKEN)

TYPE_COUNT = 5
TYPE_PAD = 0
TYPE_REACTANT = 1
TYPE_REACTION = 2
TYPE_PRODUCT = 3
TYPE_SPECIAL = 4


@dataclass(frozen=True)
class Vocabulary:
    """An id <-> token table loaded from a vocabulary file."""

    tokens: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(set(self.tokens)) != len(self.tokens):
            raise ToyDataError("vocabulary contains duplicate tokens")
        if tuple(self.tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise ToyDataError(
                f"vocabulary must start with {SPECIAL_TOKENS}, "
                f"got {self.tokens[:len(SPECIAL_TOKENS)]}"
            )

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def pad_id(self) -> int:
        return self.tokens.index(PAD_TOKEN)

    @property
    def bos_id(self) -> int:
        return self.tokens.index(BOS_TOKEN)

    @property
    def eos_id(self) -> int:
        return self.tokens.index(EOS_TOKEN)

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise ToyDataError(f"token id {token_id} outside vocabulary")
        return self.tokens[token_id]

    def render(self, token_ids) -> str:
        """Concatenate character tokens, dropping every special."""
        special = set(SPECIAL_TOKENS)
        return "".join(
            tok for tok in (self.token(t) for t in token_ids) if tok not in special
        )

    @classmethod
    def load(cls, path: str) -> "Vocabulary":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ToyDataError(f"cannot read vocabulary {path}: {exc}") from exc
        return cls(tokens=tuple(text.splitlines()))


@dataclass(frozen=True)
class Example:
    """One sequence: aligned token ids and type ids."""

    ids: tuple[int, ...]
    types: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.ids) != len(self.types):
            raise ToyDataError(
                f"ids/types length mismatch: {len(self.ids)} != {len(self.types)}"
            )


@dataclass(frozen=True)
class EncodedDataset:
    """All examples of one encoded prefix plus its metadata."""

    src: tuple[Example, ...]
    tgt: tuple[Example, ...]
    meta: dict

    def __len__(self) -> int:
        return len(self.src)

    @property
    def record_count(self) -> int:
        return int(self.meta["records"])

    @property
    def record_of(self) -> tuple[int, ...]:
        return tuple(int(r) for r in self.meta["record_of"])

    def first_example_per_record(self) -> tuple[int, ...]:
        """Index of the first example of each record, in record order."""
        first: dict[int, int] = {}
        for i, rec in enumerate(self.record_of):
            first.setdefault(rec, i)
        if sorted(first) != list(range(self.record_count)):
            raise ToyDataError("record_of does not cover records 0..N-1")
        return tuple(first[r] for r in sorted(first))


def _read_array(path: Path, fmt_char: str, width: int) -> tuple[int, ...]:
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise ToyDataError(f"cannot read {path}: {exc}") from exc
    if len(blob) % width:
        raise ToyDataError(f"{path} length {len(blob)} not a multiple of {width}")
    count = len(blob) // width
    return struct.unpack(f"<{count}{fmt_char}", blob)


def _read_side(prefix: str, side: str) -> tuple[Example, ...]:
    ids = _read_array(Path(f"{prefix}.{side}.ids"), "i", 4)
    types = _read_array(Path(f"{prefix}.{side}.types"), "i", 4)
    offsets = _read_array(Path(f"{prefix}.{side}.idx"), "q", 8)
    if len(ids) != len(types):
        raise ToyDataError(
            f"{prefix}.{side}: ids ({len(ids)}) and types ({len(types)}) disagree"
        )
    if not offsets or offsets[0] != 0 or offsets[-1] != len(ids):
        raise ToyDataError(f"{prefix}.{side}: offsets do not span the token stream")
    if any(a > b for a, b in zip(offsets, offsets[1:])):
        raise ToyDataError(f"{prefix}.{side}: offsets are not monotone")
    examples = []
    for start, end in zip(offsets, offsets[1:]):
        examples.append(Example(ids=ids[start:end], types=types[start:end]))
    for ex in examples:
        if any(not 0 <= t < TYPE_COUNT for t in ex.types):
            raise ToyDataError(f"{prefix}.{side}: type id outside 0..{TYPE_COUNT - 1}")
    return tuple(examples)


def read_encoded(prefix: str) -> EncodedDataset:
    """Load an encoded dataset, validating the cross-file invariants."""
    src = _read_side(prefix, "src")
    tgt = _read_side(prefix, "tgt")
    meta_path = Path(f"{prefix}.meta.json")
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ToyDataError(f"cannot read {meta_path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ToyDataError(f"{meta_path} is not JSON: {exc}") from exc
    if len(src) != len(tgt):
        raise ToyDataError(
            f"{prefix}: src has {len(src)} examples, tgt has {len(tgt)}"
        )
    if int(meta.get("examples", -1)) != len(src):
        raise ToyDataError(
            f"{prefix}: meta says {meta.get('examples')} examples, files hold {len(src)}"
        )
    record_of = meta.get("record_of")
    if not isinstance(record_of, list) or len(record_of) != len(src):
        raise ToyDataError(f"{prefix}: record_of must list one record per example")
    return EncodedDataset(src=src, tgt=tgt, meta=meta)


def check_ids_in_vocab(dataset: EncodedDataset, vocab: Vocabulary) -> None:
    """Every token id in both streams must be a valid vocabulary id."""
    size = len(vocab)
    for side_name, side in (("src", dataset.src), ("tgt", dataset.tgt)):
        for ex in side:
            if any(not 0 <= t < size for t in ex.ids):
                raise ToyDataError(
                    f"{side_name} stream holds token ids outside the "
                    f"{size}-entry vocabulary"
                )
