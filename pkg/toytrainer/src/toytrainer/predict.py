"""Greedy decoding: one prediction line per source record.

Records with several training examples share one source sequence, so the
first example of each record is decoded; output lines are in record order
and the file is line-aligned with the record file the dataset came from.
"""
from __future__ import annotations

from pathlib import Path

import torch

from .errors import ToyDataError
from .io import TYPE_PAD, TYPE_PRODUCT, TYPE_SPECIAL, Vocabulary, check_ids_in_vocab, read_encoded
from .train import load_checkpoint, pad_batch


def _greedy_rows(model, vocab, dataset, indices, batch_size: int) -> list[str]:
    cfg = model.cfg
    lines: list[str] = []
    for start in range(0, len(indices), batch_size):
        chunk = indices[start : start + batch_size]
        src_ids, src_types, src_pad = pad_batch(dataset.src, chunk, vocab.pad_id)
        with torch.no_grad():
            memory = model.encode(src_ids, src_types, src_pad)
            rows = len(chunk)
            ys_ids = torch.full((rows, 1), vocab.bos_id, dtype=torch.long)
            ys_types = torch.full((rows, 1), TYPE_SPECIAL, dtype=torch.long)
            finished = torch.zeros(rows, dtype=torch.bool)
            for _step in range(cfg.max_len - 1):
                logits = model.decode(ys_ids, ys_types, memory, src_pad)[:, -1]
                chosen = logits.argmax(dim=-1)
                chosen[finished] = vocab.pad_id
                step_types = torch.where(
                    finished,
                    torch.tensor(TYPE_PAD),
                    torch.where(
                        chosen.eq(vocab.eos_id),
                        torch.tensor(TYPE_SPECIAL),
                        torch.tensor(TYPE_PRODUCT),
                    ),
                )
                ys_ids = torch.cat([ys_ids, chosen.unsqueeze(1)], dim=1)
                ys_types = torch.cat([ys_types, step_types.unsqueeze(1)], dim=1)
                finished |= chosen.eq(vocab.eos_id)
                if bool(finished.all()):
                    break
        for row in range(len(chunk)):
            token_ids = []
            for token_id in ys_ids[row, 1:].tolist():
                if token_id == vocab.eos_id:
                    break
                token_ids.append(token_id)
            lines.append(vocab.render(token_ids))
    return lines


def predict(
    checkpoint_path: str,
    data_prefix: str,
    vocab_path: str,
    out_path: str,
    batch_size: int = 64,
) -> dict:
    """Decode every record of the dataset and write one line per record."""
    if batch_size < 1:
        raise ToyDataError("batch_size must be >= 1")
    model, cfg = load_checkpoint(checkpoint_path)
    vocab = Vocabulary.load(vocab_path)
    if cfg.vocab_size != len(vocab):
        raise ToyDataError(
            f"incompatible checkpoint: trained with vocab size {cfg.vocab_size}, "
            f"given {len(vocab)}"
        )
    dataset = read_encoded(data_prefix)
    check_ids_in_vocab(dataset, vocab)
    indices = list(dataset.first_example_per_record())
    lines = _greedy_rows(model, vocab, dataset, indices, batch_size)
    Path(out_path).write_text(
        "".join(line + "\n" for line in lines), encoding="utf-8"
    )
    return {
        "out": str(out_path),
        "records": len(lines),
        "examples": len(dataset),
    }
