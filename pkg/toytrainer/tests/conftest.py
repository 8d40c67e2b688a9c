"""Shared fixtures: a 100-record corpus built via the dataset toolchain CLI.

The toolchain is exercised strictly through its command line and file
formats — the component boundary under test.
"""
import json
import subprocess
import sys
import time
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


def run_toolchain(args):
    """Invoke the dataset toolchain CLI; returns (exit code, stdout, stderr)."""
    proc = subprocess.run(
        [sys.executable, "-m", "rxnkit.cli", *args],
        capture_output=True,
        text=True,
        timeout=600,
    )
    return proc.returncode, proc.stdout, proc.stderr


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    config = {
        "sources": [{"name": "molecules", "path": str(DATA / "molecules.smi")}],
        "out_dir": str(root / "records"),
        "counts": {"train": 100, "valid": 10, "test": 10},
        "seed": 23,
        "product_cap": 1,
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config), encoding="utf-8")
    code, out, err = run_toolchain(["gen-dataset", "--config", str(config_path)])
    assert code == 0, err
    paths = json.loads(out)["paths"]

    vocab_path = root / "corpus.vocab"
    code, out, err = run_toolchain(
        [
            "build-vocab",
            "--records",
            paths["train"],
            paths["valid"],
            paths["test"],
            "--out",
            str(vocab_path),
        ]
    )
    assert code == 0, err

    prefix = root / "train.tb"
    code, out, err = run_toolchain(
        [
            "tokenize",
            "--records",
            paths["train"],
            "--vocab",
            str(vocab_path),
            "--mode",
            "tb",
            "--out",
            str(prefix),
        ]
    )
    assert code == 0, err
    summary = json.loads(out)
    assert summary["records"] == 100

    return {
        "root": root,
        "train_records": paths["train"],
        "vocab": vocab_path,
        "prefix": prefix,
    }


@pytest.fixture(scope="session")
def memorization(corpus, tmp_path_factory):
    """One full training + greedy-decode run on the 100-record corpus."""
    from toytrainer.predict import predict
    from toytrainer.train import train

    out = tmp_path_factory.mktemp("memorization")
    started = time.monotonic()
    summary = train(
        str(corpus["prefix"]),
        str(corpus["vocab"]),
        str(out),
        epochs=400,
        batch_size=32,
        lr=1e-3,
        seed=0,
    )
    pred_path = out / "predictions.txt"
    prediction = predict(
        summary["checkpoint"],
        str(corpus["prefix"]),
        str(corpus["vocab"]),
        str(pred_path),
    )
    elapsed = time.monotonic() - started
    curve = json.loads(Path(summary["loss_curve"]).read_text(encoding="utf-8"))
    return {
        "summary": summary,
        "prediction": prediction,
        "pred_path": pred_path,
        "curve": curve,
        "elapsed": elapsed,
    }
