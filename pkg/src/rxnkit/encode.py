"""Character-level tokenization and tensor-ready sequence encoding.

The vocabulary is five special tokens followed by every distinct character
observed in a record corpus (reactants, templates, products), character
tokens sorted by code point, id = line position in the serialized file.

Input layout is ``r1 SEP r2 SEP ... [SEP template]``: reactant characters
carry the REACTANT type, template characters REACTION, separators SPECIAL.
Target layout is ``BOS product EOS`` with PRODUCT-typed characters.  In
template-based mode ("tb") the template string is appended to the input; in
template-free mode ("tf") it must be absent.

Binary encoding, byte-exact: for each side (``.src`` / ``.tgt``) three
files --

* ``PREFIX.<side>.ids``   little-endian int32, all sequences concatenated;
* ``PREFIX.<side>.types`` little-endian int32, same shape as ``.ids``;
* ``PREFIX.<side>.idx``   little-endian int64, ``M + 1`` offsets into the
  token arrays (offset[i] .. offset[i+1] delimits example ``i``).

``PREFIX.meta.json`` records the mode, the record and example counts, and
``record_of`` -- the source record index per example, because one example is
emitted per (record, product) pair: a record with several retained products
yields several training pairs sharing the same input, which is how a model
sees that one input admits multiple outcomes.
"""
from __future__ import annotations

import json
import logging
import struct
from dataclasses import dataclass
from pathlib import Path

from .dataset import read_records
from .errors import DataError

logger = logging.getLogger(__name__)

PAD, BOS, EOS, SEP, UNK = range(5)
SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<sep>", "<unk>")

TYPE_PAD, TYPE_REACTANT, TYPE_REACTION, TYPE_PRODUCT, TYPE_SPECIAL = range(5)

MODE_TEMPLATE_BASED = "tb"
MODE_TEMPLATE_FREE = "tf"
_MODE_ALIASES = {
    "tb": "tb", "template-based": "tb",
    "tf": "tf", "template-free": "tf",
}


def _canon_mode(mode: str) -> str:
    try:
        return _MODE_ALIASES[mode]
    except KeyError:
        raise DataError(
            f"unknown encoding mode {mode!r} (expected tb or tf)"
        ) from None


class Vocab:
    """Immutable token inventory; specials occupy ids 0-4 in fixed order."""

    def __init__(self, tokens: tuple[str, ...]):
        if tuple(tokens[: len(SPECIAL_TOKENS)]) != SPECIAL_TOKENS:
            raise DataError(
                f"vocabulary must start with {SPECIAL_TOKENS}, got "
                f"{tokens[:len(SPECIAL_TOKENS)]}"
            )
        chars = tokens[len(SPECIAL_TOKENS):]
        if any(len(c) != 1 for c in chars):
            raise DataError("character tokens must be single characters")
        if list(chars) != sorted(set(chars)):
            raise DataError("character tokens must be unique and sorted by code point")
        self.tokens = tuple(tokens)
        self._index = {t: i for i, t in enumerate(self.tokens)}

    @classmethod
    def from_chars(cls, chars) -> "Vocab":
        return cls(SPECIAL_TOKENS + tuple(sorted(set(chars))))

    def __len__(self) -> int:
        return len(self.tokens)

    def __eq__(self, other) -> bool:
        return isinstance(other, Vocab) and self.tokens == other.tokens

    def __hash__(self) -> int:
        return hash(self.tokens)

    def id_of(self, char: str) -> int:
        return self._index.get(char, UNK)

    def token(self, token_id: int) -> str:
        if not 0 <= token_id < len(self.tokens):
            raise DataError(f"token id {token_id} out of range for vocab "
                            f"of size {len(self.tokens)}")
        return self.tokens[token_id]

    def save(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for token in self.tokens:
                fh.write(token + "\n")

    @classmethod
    def load(cls, path: str) -> "Vocab":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                lines = fh.read().split("\n")
        except OSError as exc:
            raise DataError(f"cannot read vocab file {path}: {exc}") from exc
        if lines and lines[-1] == "":
            lines.pop()
        return cls(tuple(lines))


def build_vocab(record_paths) -> Vocab:
    """Specials plus every character in any reactant, template, or product."""
    if isinstance(record_paths, (str, Path)):
        record_paths = [record_paths]
    chars: set[str] = set()
    for path in record_paths:
        for rec in read_records(str(path)):
            for text in (*rec.reactants, rec.template, *rec.products):
                chars.update(text)
    return Vocab.from_chars(chars)


@dataclass(frozen=True)
class TokenSequence:
    """Aligned token and type ids; ``unknown`` counts UNK substitutions."""

    ids: tuple[int, ...]
    type_ids: tuple[int, ...]
    unknown: int = 0

    def __post_init__(self):
        if len(self.ids) != len(self.type_ids):
            raise DataError(
                f"ids/type_ids length mismatch: {len(self.ids)} vs "
                f"{len(self.type_ids)}"
            )

    def __len__(self) -> int:
        return len(self.ids)


def _append_chars(text: str, type_id: int, vocab: Vocab,
                  ids: list[int], types: list[int]) -> int:
    unknown = 0
    for char in text:
        token_id = vocab.id_of(char)
        if token_id == UNK:
            unknown += 1
        ids.append(token_id)
        types.append(type_id)
    return unknown


def encode_input(
    reactants,
    template: str | None,
    vocab: Vocab,
    mode: str,
) -> TokenSequence:
    """``r1 SEP r2 SEP ... [SEP template]`` with per-segment type ids."""
    mode = _canon_mode(mode)
    reactants = list(reactants)
    if not reactants:
        raise DataError("encode_input needs at least one reactant")
    if mode == MODE_TEMPLATE_BASED and template is None:
        raise DataError("template-based encoding needs a template")
    if mode == MODE_TEMPLATE_FREE and template is not None:
        raise DataError("template-free encoding forbids a template")
    ids: list[int] = []
    types: list[int] = []
    unknown = 0
    for k, reactant in enumerate(reactants):
        if k:
            ids.append(SEP)
            types.append(TYPE_SPECIAL)
        unknown += _append_chars(reactant, TYPE_REACTANT, vocab, ids, types)
    if template is not None:
        ids.append(SEP)
        types.append(TYPE_SPECIAL)
        unknown += _append_chars(template, TYPE_REACTION, vocab, ids, types)
    if unknown:
        logger.warning("%d characters not in vocabulary replaced by UNK", unknown)
    return TokenSequence(tuple(ids), tuple(types), unknown)


def encode_target(product: str, vocab: Vocab) -> TokenSequence:
    """``BOS product EOS`` with PRODUCT-typed characters."""
    if not product:
        raise DataError("encode_target needs a non-empty product")
    ids: list[int] = [BOS]
    types: list[int] = [TYPE_SPECIAL]
    unknown = _append_chars(product, TYPE_PRODUCT, vocab, ids, types)
    ids.append(EOS)
    types.append(TYPE_SPECIAL)
    if unknown:
        logger.warning("%d characters not in vocabulary replaced by UNK", unknown)
    return TokenSequence(tuple(ids), tuple(types), unknown)


def decode(sequence: TokenSequence, vocab: Vocab, sep: str = "") -> str:
    """Characters concatenated, specials stripped, SEP rendered as ``sep``."""
    parts: list[str] = []
    for token_id in sequence.ids:
        token = vocab.token(token_id)
        if token_id == SEP:
            parts.append(sep)
        elif token_id in (PAD, BOS, EOS, UNK):
            continue
        else:
            parts.append(token)
    return "".join(parts)


# ---------------------------------------------------------------------------
# Binary serialization


def _write_side(sequences, prefix: str) -> None:
    flat_ids: list[int] = []
    flat_types: list[int] = []
    offsets: list[int] = [0]
    for seq in sequences:
        flat_ids.extend(seq.ids)
        flat_types.extend(seq.type_ids)
        offsets.append(len(flat_ids))
    Path(prefix + ".ids").write_bytes(
        struct.pack(f"<{len(flat_ids)}i", *flat_ids))
    Path(prefix + ".types").write_bytes(
        struct.pack(f"<{len(flat_types)}i", *flat_types))
    Path(prefix + ".idx").write_bytes(
        struct.pack(f"<{len(offsets)}q", *offsets))


def _read_side(prefix: str) -> list[TokenSequence]:
    try:
        raw_ids = Path(prefix + ".ids").read_bytes()
        raw_types = Path(prefix + ".types").read_bytes()
        raw_idx = Path(prefix + ".idx").read_bytes()
    except OSError as exc:
        raise DataError(f"cannot read encoded files at {prefix}: {exc}") from exc
    if len(raw_ids) % 4 or len(raw_types) % 4 or len(raw_idx) % 8:
        raise DataError(f"encoded files at {prefix} are truncated")
    ids = struct.unpack(f"<{len(raw_ids) // 4}i", raw_ids)
    types = struct.unpack(f"<{len(raw_types) // 4}i", raw_types)
    offsets = struct.unpack(f"<{len(raw_idx) // 8}q", raw_idx)
    if len(ids) != len(types):
        raise DataError(f"{prefix}.ids and {prefix}.types disagree in length")
    if not offsets or offsets[0] != 0 or offsets[-1] != len(ids) \
            or any(a > b for a, b in zip(offsets, offsets[1:])):
        raise DataError(f"{prefix}.idx offsets are inconsistent")
    return [
        TokenSequence(ids[a:b], types[a:b])
        for a, b in zip(offsets, offsets[1:])
    ]


def encode_records(records, vocab: Vocab, mode: str, out_prefix: str) -> dict:
    """Encode a record list to the binary pair files; returns the metadata.

    One example per (record, product) pair; examples of the same record
    share their input sequence and are adjacent, in record order.
    """
    mode = _canon_mode(mode)
    src_seqs: list[TokenSequence] = []
    tgt_seqs: list[TokenSequence] = []
    record_of: list[int] = []
    template_ids: list[int] = []
    n_records = 0
    for rec_index, rec in enumerate(records):
        n_records = rec_index + 1
        template = rec.template if mode == MODE_TEMPLATE_BASED else None
        src = encode_input(rec.reactants, template, vocab, mode)
        for product in rec.products:
            src_seqs.append(src)
            tgt_seqs.append(encode_target(product, vocab))
            record_of.append(rec_index)
            template_ids.append(rec.template_id)
    _write_side(src_seqs, out_prefix + ".src")
    _write_side(tgt_seqs, out_prefix + ".tgt")
    meta = {
        "mode": mode,
        "records": n_records,
        "examples": len(src_seqs),
        "record_of": record_of,
        "template_ids": template_ids,
        "unknown": sum(s.unknown for s in src_seqs)
        + sum(t.unknown for t in tgt_seqs),
        "vocab_size": len(vocab),
    }
    with open(out_prefix + ".meta.json", "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return meta


def load_encoded(prefix: str) -> tuple[list[TokenSequence], list[TokenSequence], dict]:
    """Read back what :func:`encode_records` wrote."""
    src = _read_side(prefix + ".src")
    tgt = _read_side(prefix + ".tgt")
    try:
        with open(prefix + ".meta.json", "r", encoding="utf-8") as fh:
            meta = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read {prefix}.meta.json: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"{prefix}.meta.json is not JSON: {exc}") from exc
    if len(src) != len(tgt) or len(src) != meta.get("examples"):
        raise DataError(f"encoded sides at {prefix} disagree in example count")
    return src, tgt, meta
