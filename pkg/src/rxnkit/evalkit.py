"""Exact-match evaluation of product predictions against record files.

A prediction is correct iff its canonical form equals the canonical form of
any reference product of its record (multi-reference membership; the
single-reference case is just a one-element reference set).  Unparseable
predictions count as wrong -- generators can emit invalid strings and the
metric must penalize that -- while an unparseable reference is a data error:
it means the reference corpus itself is broken, not the prediction.

Reports carry the aggregate and a per-template breakdown; accuracies are
exact ratios of integer counts, so the report is invariant under any
re-serialization of the predictions that preserves the underlying molecules.
"""
from __future__ import annotations

from dataclasses import dataclass

from .dataset import read_records
from .errors import DataError, RxnkitError
from .molgraph import parse_smiles, write_canonical


@dataclass(frozen=True)
class EvalReport:
    """Aggregate and per-template exact-match counts."""

    total: int
    correct: int
    per_template: dict

    @property
    def accuracy(self) -> float:
        if self.total == 0:
            raise DataError("cannot report accuracy over zero predictions")
        return self.correct / self.total

    def to_obj(self) -> dict:
        return {
            "total": self.total,
            "correct": self.correct,
            "accuracy": self.accuracy,
            "per_template": {
                f"{tid:02d}": {
                    "total": total,
                    "correct": correct,
                    "accuracy": correct / total,
                }
                for tid, (total, correct) in sorted(self.per_template.items())
            },
        }


def _canonical_reference(text: str) -> str:
    try:
        return write_canonical(parse_smiles(text))
    except RxnkitError as exc:
        raise DataError(f"unparseable reference product {text!r}: {exc}") from exc


def exact_match(prediction: str, references) -> bool:
    """True iff the prediction canonicalizes into the reference set."""
    canon_refs = {_canonical_reference(r) for r in references}
    if not canon_refs:
        raise DataError("exact_match needs a non-empty reference set")
    try:
        canon_pred = write_canonical(parse_smiles(prediction))
    except RxnkitError:
        return False
    return canon_pred in canon_refs


def evaluate(pred_path: str, ref_path: str) -> EvalReport:
    """Score a predictions file (one SMILES per line) against a record file.

    Line ``i`` of the predictions is scored against the product set of
    record ``i``; the files must align exactly.
    """
    try:
        with open(pred_path, "r", encoding="utf-8") as fh:
            predictions = fh.read().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read predictions {pred_path}: {exc}") from exc
    records = read_records(ref_path)
    if not records:
        raise DataError(f"reference file {ref_path} is empty")
    if not predictions:
        raise DataError(f"predictions file {pred_path} is empty")
    if len(predictions) != len(records):
        raise DataError(
            f"line count mismatch: {len(predictions)} predictions vs "
            f"{len(records)} records"
        )
    total = correct = 0
    per_template: dict[int, list[int]] = {}
    for prediction, record in zip(predictions, records):
        ok = exact_match(prediction.strip(), record.products)
        slot = per_template.setdefault(record.template_id, [0, 0])
        slot[0] += 1
        total += 1
        if ok:
            slot[1] += 1
            correct += 1
    return EvalReport(
        total=total,
        correct=correct,
        per_template={tid: (t, c) for tid, (t, c) in per_template.items()},
    )
