"""Evaluation tests: canonical membership semantics, file alignment, the
per-template breakdown, and representation invariance of the report."""
import random

import pytest

from rxnkit.dataset import DatasetRecord, write_records
from rxnkit.errors import DataError
from rxnkit.evalkit import EvalReport, evaluate, exact_match
from rxnkit.molgraph import parse_smiles, randomized_smiles
from rxnkit.rxn import BUILTIN_TEMPLATES


# ---------------------------------------------------------------------------
# exact_match


def test_match_is_canonical_not_textual():
    assert exact_match("OCC", {"CCO"}) is True


def test_match_accepts_any_reference_member():
    assert exact_match("C=CO", {"CC=O", "C=CO"}) is True
    assert exact_match("CC=O", {"CC=O", "C=CO"}) is True
    assert exact_match("CCO", {"CC=O", "C=CO"}) is False


def test_unparseable_prediction_is_wrong_not_an_error():
    assert exact_match("not-a-smiles", {"CCO"}) is False
    assert exact_match("", {"CCO"}) is False


def test_unparseable_reference_is_a_data_error():
    with pytest.raises(DataError):
        exact_match("CCO", {"not-a-smiles"})


def test_empty_reference_set_is_a_data_error():
    with pytest.raises(DataError):
        exact_match("CCO", set())


def test_match_is_representation_invariant(pool):
    rng = random.Random(9)
    for smi in rng.sample(pool, 40):
        mol = parse_smiles(smi)
        variant = randomized_smiles(mol, seed=rng.randrange(10**6))
        assert exact_match(variant, {smi}) is True
        assert exact_match(smi, {randomized_smiles(mol, seed=1)}) is True


def test_match_is_monotone_in_references(pool):
    rng = random.Random(10)
    refs = {"CCO"}
    assert exact_match("OCC", refs)
    for extra in rng.sample(pool, 10):
        refs = refs | {extra}
        assert exact_match("OCC", refs) is True


# ---------------------------------------------------------------------------
# evaluate


def _write_refs(tmp_path, rows):
    records = [
        DatasetRecord(
            reactants=("C",),
            template_id=tid,
            template=BUILTIN_TEMPLATES[tid - 1],
            products=tuple(products),
            split="test",
        )
        for tid, products in rows
    ]
    path = tmp_path / "refs.jsonl"
    write_records(records, str(path))
    return str(path), records


def test_evaluate_counts_and_ratio(tmp_path):
    rows = [(2, ["CCO"])] * 9 + [(2, ["CCN"])]
    ref_path, _ = _write_refs(tmp_path, rows)
    pred_path = tmp_path / "preds.txt"
    pred_path.write_text("OCC\n" * 10)  # last record's reference is CCN
    report = evaluate(str(pred_path), ref_path)
    assert (report.total, report.correct) == (10, 9)
    assert report.accuracy == 0.9


def test_evaluate_identity_sample_is_perfect(tmp_path, apply_fixtures):
    rows = [
        (entry["template_id"], entry["products"])
        for entry in apply_fixtures
        if entry["products"]
    ][:40]
    ref_path, records = _write_refs(tmp_path, rows)
    pred_path = tmp_path / "preds.txt"
    pred_path.write_text("".join(rec.products[0] + "\n" for rec in records))
    report = evaluate(str(pred_path), ref_path)
    assert report.accuracy == 1.0


def test_evaluate_per_template_breakdown(tmp_path):
    rows = [(2, ["CCO"]), (2, ["CCO"]), (5, ["C1CC1"]), (5, ["C1CC1"])]
    ref_path, _ = _write_refs(tmp_path, rows)
    pred_path = tmp_path / "preds.txt"
    pred_path.write_text("CCO\nCCC\nC1CC1\nC1CC1\n")
    report = evaluate(str(pred_path), ref_path)
    assert report.per_template == {2: (2, 1), 5: (2, 2)}
    obj = report.to_obj()
    assert obj["per_template"]["02"] == {"total": 2, "correct": 1, "accuracy": 0.5}
    assert obj["per_template"]["05"] == {"total": 2, "correct": 2, "accuracy": 1.0}
    assert sum(v["total"] for v in obj["per_template"].values()) == report.total


def test_evaluate_rejects_line_count_mismatch(tmp_path):
    ref_path, _ = _write_refs(tmp_path, [(2, ["CCO"])] * 3)
    pred_path = tmp_path / "preds.txt"
    pred_path.write_text("CCO\nCCO\n")
    with pytest.raises(DataError):
        evaluate(str(pred_path), ref_path)


def test_evaluate_rejects_empty_inputs(tmp_path):
    ref_path, _ = _write_refs(tmp_path, [(2, ["CCO"])])
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    with pytest.raises(DataError):
        evaluate(str(empty), ref_path)
    empty_refs = tmp_path / "refs_empty.jsonl"
    empty_refs.write_text("")
    preds = tmp_path / "preds.txt"
    preds.write_text("CCO\n")
    with pytest.raises(DataError):
        evaluate(str(preds), str(empty_refs))


def test_report_invariant_under_prediction_reserialization(tmp_path, apply_fixtures):
    rows = [
        (entry["template_id"], entry["products"])
        for entry in apply_fixtures
        if entry["products"]
    ][:30]
    ref_path, records = _write_refs(tmp_path, rows)
    rng = random.Random(4)
    canonical = tmp_path / "canonical.txt"
    randomized = tmp_path / "randomized.txt"
    canonical.write_text("".join(rec.products[0] + "\n" for rec in records))
    randomized.write_text("".join(
        randomized_smiles(parse_smiles(rec.products[0]),
                          seed=rng.randrange(10**6)) + "\n"
        for rec in records
    ))
    base = evaluate(str(canonical), ref_path)
    varied = evaluate(str(randomized), ref_path)
    assert base.to_obj() == varied.to_obj()


def test_accuracy_undefined_for_empty_report():
    report = EvalReport(total=0, correct=0, per_template={})
    with pytest.raises(DataError):
        _ = report.accuracy
