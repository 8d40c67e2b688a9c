"""Teacher-forced training on an encoded dataset.

Fixed seed means a fixed loss curve: model init, batch shuffling, and all
math run on CPU-deterministic torch ops with dropout off by default.
"""
from __future__ import annotations

import json
import pickle
import time
import zipfile
from pathlib import Path

import torch
from torch import nn

from .errors import ToyDataError
from .io import TYPE_PAD, EncodedDataset, Vocabulary, check_ids_in_vocab, read_encoded
from .model import Seq2Seq, ToyModelConfig


def pad_batch(examples, indices, pad_id: int, device=None):
    """Stack the selected examples into (ids, types, pad_mask) tensors."""
    width = max(len(examples[i].ids) for i in indices)
    ids = torch.full((len(indices), width), pad_id, dtype=torch.long, device=device)
    types = torch.full(
        (len(indices), width), TYPE_PAD, dtype=torch.long, device=device
    )
    for row, i in enumerate(indices):
        ex = examples[i]
        ids[row, : len(ex.ids)] = torch.tensor(ex.ids, dtype=torch.long)
        types[row, : len(ex.types)] = torch.tensor(ex.types, dtype=torch.long)
    return ids, types, ids.eq(pad_id)


def _required_max_len(dataset: EncodedDataset) -> int:
    longest = 0
    for side in (dataset.src, dataset.tgt):
        for ex in side:
            longest = max(longest, len(ex.ids))
    return longest


def train(
    data_prefix: str,
    vocab_path: str,
    out_dir: str,
    epochs: int = 200,
    batch_size: int = 32,
    lr: float = 1e-3,
    seed: int = 0,
    layers: int = 2,
    hidden: int = 64,
    heads: int = 4,
    feed_forward: int = 256,
) -> dict:
    """Train, then write checkpoint.pt, loss_curve.json, config.json."""
    if epochs < 1 or batch_size < 1:
        raise ToyDataError("epochs and batch_size must be >= 1")
    vocab = Vocabulary.load(vocab_path)
    dataset = read_encoded(data_prefix)
    check_ids_in_vocab(dataset, vocab)
    if not len(dataset):
        raise ToyDataError("cannot train on an empty dataset")

    needed = _required_max_len(dataset) + 1
    cfg = ToyModelConfig(
        vocab_size=len(vocab),
        layers=layers,
        hidden=hidden,
        heads=heads,
        feed_forward=feed_forward,
        max_len=max(needed, 16),
    )

    torch.manual_seed(seed)
    model = Seq2Seq(cfg)
    optimizer = torch.optim.Adam(model.parameters(), lr=lr)
    criterion = nn.CrossEntropyLoss(ignore_index=vocab.pad_id)
    shuffler = torch.Generator().manual_seed(seed)

    n = len(dataset)
    losses: list[float] = []
    started = time.monotonic()
    model.train()
    for _epoch in range(epochs):
        order = torch.randperm(n, generator=shuffler).tolist()
        epoch_loss = 0.0
        for start in range(0, n, batch_size):
            chunk = order[start : start + batch_size]
            src_ids, src_types, src_pad = pad_batch(dataset.src, chunk, vocab.pad_id)
            tgt_ids, tgt_types, _ = pad_batch(dataset.tgt, chunk, vocab.pad_id)
            logits = model(
                src_ids,
                src_types,
                src_pad,
                tgt_ids[:, :-1],
                tgt_types[:, :-1],
            )
            loss = criterion(
                logits.reshape(-1, cfg.vocab_size), tgt_ids[:, 1:].reshape(-1)
            )
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            epoch_loss += loss.item() * len(chunk)
        losses.append(epoch_loss / n)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    checkpoint_path = out / "checkpoint.pt"
    torch.save(
        {"model_state": model.state_dict(), "config": cfg.to_obj()},
        checkpoint_path,
    )
    curve_path = out / "loss_curve.json"
    curve_path.write_text(json.dumps(losses) + "\n", encoding="utf-8")
    config_path = out / "config.json"
    run_config = {
        "model": cfg.to_obj(),
        "epochs": epochs,
        "batch_size": batch_size,
        "lr": lr,
        "seed": seed,
        "data_prefix": str(data_prefix),
        "vocab": str(vocab_path),
    }
    config_path.write_text(
        json.dumps(run_config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {
        "checkpoint": str(checkpoint_path),
        "loss_curve": str(curve_path),
        "config": str(config_path),
        "examples": n,
        "records": dataset.record_count,
        "epochs": epochs,
        "first_loss": losses[0],
        "final_loss": losses[-1],
        "seconds": round(time.monotonic() - started, 1),
    }


def load_checkpoint(path: str) -> tuple[Seq2Seq, ToyModelConfig]:
    try:
        payload = torch.load(path, map_location="cpu", weights_only=True)
    except (OSError, RuntimeError, ValueError, pickle.UnpicklingError,
            zipfile.BadZipFile, EOFError) as exc:
        raise ToyDataError(f"cannot load checkpoint {path}: {exc}") from exc
    if not isinstance(payload, dict) or "config" not in payload:
        raise ToyDataError(f"checkpoint {path} has no config")
    cfg = ToyModelConfig.from_obj(payload["config"])
    model = Seq2Seq(cfg)
    try:
        model.load_state_dict(payload["model_state"])
    except (KeyError, RuntimeError) as exc:
        raise ToyDataError(f"checkpoint {path} does not fit its config: {exc}") from exc
    model.eval()
    return model, cfg
