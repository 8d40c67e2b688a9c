"""End-to-end acceptance gate for the toolchain.

One test per gate; each prints a single ``ACCEPTANCE <name>: PASS/FAIL``
line (visible under ``-s``) and then asserts, so a plain pytest run fails
loudly while a ``-s`` run doubles as a human-readable report.  The gates
re-verify the frozen fixtures and properties end to end at full scale:
template application against the frozen oracle outputs, inverse round
trips, variant-class monotonicity, canonicalization invariance on the 10K
pool, byte-level determinism of dataset generation across reruns and
worker counts, tokenizer round trips over a full generated corpus, and
representation-invariant evaluation.
"""
import random
import time
from fractions import Fraction
from pathlib import Path

import pytest

from rxnkit.augment import enumerate_variants
from rxnkit.dataset import (
    DatasetRecord,
    GenerationConfig,
    MoleculeSource,
    augment_corpus,
    generate,
    read_records,
    write_records,
)
from rxnkit.encode import Vocab, build_vocab, decode, encode_input, encode_target
from rxnkit.evalkit import evaluate
from rxnkit.molgraph import (
    parse_smiles,
    permuted,
    randomized_smiles,
    write_canonical,
)
from rxnkit.rxn import BUILTIN_TEMPLATES, apply, apply_smiles, parse_reaction

POOL_PATH = Path(__file__).parent / "data" / "pool_10k.smi"


def _gate(label: str, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {label}: {'PASS' if ok else 'FAIL'} ({detail})", flush=True)
    assert ok, f"ACCEPTANCE {label}: FAIL ({detail})"


# ---------------------------------------------------------------------------
# 1. Frozen application fixtures: every stored (reactants, template) pair
#    still reproduces its stored product set exactly.


def test_template_fixture_equivalence(apply_fixtures, registry):
    start = time.monotonic()
    mismatches = 0
    covered = set()
    for entry in apply_fixtures:
        covered.add(entry["template_id"])
        rxn = registry.get(entry["template_id"])
        mols = [parse_smiles(s) for s in entry["reactants"]]
        if apply_smiles(rxn, mols, entry["mode"]) != entry["products"]:
            mismatches += 1
    elapsed = time.monotonic() - start
    ok = (
        len(apply_fixtures) >= 200
        and covered == set(range(1, 21))
        and mismatches == 0
        and elapsed < 30
    )
    _gate(
        "template-fixture-equivalence",
        ok,
        f"{len(apply_fixtures)} pairs, {len(covered)}/20 templates, "
        f"{mismatches} mismatches, {elapsed:.1f}s < 30s",
    )


# ---------------------------------------------------------------------------
# 2. Registry sanity: all built-in templates parse and the inverse pairing
#    is total and involutive.


def test_registry_sanity(registry):
    problems = 0
    for text in BUILTIN_TEMPLATES:
        parse_reaction(text)
    for tid in registry.ids():
        other = registry.inverse_of(tid)
        if registry.inverse_of(other) != tid or abs(other - tid) != 10:
            problems += 1
        expected = "constructive" if tid <= 10 else "destructive"
        if registry.direction(tid) != expected:
            problems += 1
    ok = len(registry) == 20 and problems == 0
    _gate(
        "registry-sanity",
        ok,
        f"{len(BUILTIN_TEMPLATES)} templates parse, {problems} pairing problems",
    )


# ---------------------------------------------------------------------------
# 3. Inverse round trips: applying the paired inverse to each product
#    recovers the original reactant; the bond-cut/bond-form pair rebuilds
#    the original from kept + discarded fragments.


def test_inverse_round_trips(registry, pool):
    rng = random.Random(17)
    small = [s for s in pool if sum(c.isupper() for c in s) <= 10]
    checks = failures = 0
    for tid in range(2, 11):
        forward = registry.get(tid)
        inverse = registry.get(registry.inverse_of(tid))
        done = 0
        for smi in rng.sample(small, min(1200, len(small))):
            mol = parse_smiles(smi)
            want = write_canonical(mol)
            for app in apply(forward, [mol])[:2]:
                for product in app.products:
                    if want not in apply_smiles(inverse, [product]):
                        failures += 1
                    checks += 1
                    done += 1
            if done >= 60:
                break
    reconstructions = 0
    cutter = registry.get(11)
    former = registry.get(registry.inverse_of(11))
    for smi in rng.sample(small, 300):
        mol = parse_smiles(smi)
        want = write_canonical(mol)
        for app in apply(cutter, [mol]):
            if not app.discarded:
                continue
            kept = parse_smiles(app.smiles)
            severed = parse_smiles(app.discarded_smiles)
            if want not in apply_smiles(former, [kept, severed], mode="inter"):
                failures += 1
            reconstructions += 1
        if reconstructions >= 60:
            break
    ok = checks >= 500 and reconstructions >= 50 and failures == 0
    _gate(
        "inverse-round-trips",
        ok,
        f"{checks} product round trips, {reconstructions} two-fragment "
        f"reconstructions, {failures} failures",
    )


# ---------------------------------------------------------------------------
# 4. Variant-class semantics on 100 sampled molecules per class:
#    permutations preserve product sets, specialization/combination narrow
#    them, generalization widens them.


_CLASS_RELATION = {
    "permute_within": "equal",
    "permute_between": "equal",
    "specialize": "subset",
    "combine": "subset",
    "generalize": "superset",
}

_CLASS_SOURCES = {
    "permute_within": (2, 5, 11),
    "permute_between": (1,),
    "specialize": (1, 5, 6),
    "combine": (2, 5, 11),
    "generalize": (2, 3, 12),
}


def test_variant_class_semantics(registry, pool):
    rng = random.Random(29)
    failures = checks = 0
    summary = []
    for kind, tids in _CLASS_SOURCES.items():
        relation = _CLASS_RELATION[kind]
        mols = [parse_smiles(s) for s in rng.sample(pool, 100)]
        variant_count = 0
        for tid in tids:
            base = registry.get(tid)
            variants = enumerate_variants(
                base, allowed_kinds=frozenset({kind}), max_count=2, seed=31,
                base_id=tid,
            )
            if not variants:
                continue
            base_products = [set(apply_smiles(base, [m])) for m in mols]
            for variant in variants:
                variant_count += 1
                for mol, expected in zip(mols, base_products):
                    got = set(apply_smiles(variant.result, [mol]))
                    if relation == "equal":
                        good = got == expected
                    elif relation == "subset":
                        good = got <= expected
                    else:
                        good = got >= expected
                    checks += 1
                    if not good:
                        failures += 1
        if variant_count == 0:
            failures += 1
        summary.append(f"{kind}:{variant_count}")
    ok = failures == 0
    _gate(
        "variant-class-semantics",
        ok,
        f"{checks} molecule/variant checks, {failures} failures, "
        f"variants per class {' '.join(summary)}",
    )


# ---------------------------------------------------------------------------
# 5. Canonicalization properties over the whole 10K pool: fixed point,
#    relabeling invariance, and randomized round trips.


def test_canonicalization_properties(pool):
    start = time.monotonic()
    rng = random.Random(5)
    failures = 0
    for smi in pool:
        mol = parse_smiles(smi)
        canon = write_canonical(mol)
        if write_canonical(parse_smiles(canon)) != canon:
            failures += 1
        order = list(range(len(mol.atoms)))
        rng.shuffle(order)
        if write_canonical(permuted(mol, order)) != canon:
            failures += 1
        for k in range(4):
            variant = randomized_smiles(mol, seed=k)
            if write_canonical(parse_smiles(variant)) != canon:
                failures += 1
    elapsed = time.monotonic() - start
    ok = failures == 0 and elapsed < 60
    _gate(
        "canonicalization-properties",
        ok,
        f"{len(pool)} molecules x 6 properties, {failures} failures, "
        f"{elapsed:.1f}s < 60s",
    )


# ---------------------------------------------------------------------------
# 6 + 7 share one full-scale generated corpus.


@pytest.fixture(scope="module")
def full_generation(tmp_path_factory):
    root = tmp_path_factory.mktemp("acceptance")

    def config(out_name: str, workers: int) -> GenerationConfig:
        return GenerationConfig(
            sources=(MoleculeSource(name="pool", path=str(POOL_PATH)),),
            out_dir=str(root / out_name),
            counts={"train": 2000, "valid": 200, "test": 200},
            seed=101,
            workers=workers,
        )

    start = time.monotonic()
    first = generate(config("run-a", 1))
    second = generate(config("run-b", 1))
    third = generate(config("run-c", 4))
    from rxnkit.rxn import builtin_registry

    aug_path, aug_stats = augment_corpus(
        first.paths["train"],
        builtin_registry(),
        seed=55,
        out_path=str(root / "train.aug.jsonl"),
    )
    elapsed = time.monotonic() - start
    return {
        "first": first,
        "second": second,
        "third": third,
        "aug_path": aug_path,
        "aug_stats": aug_stats,
        "elapsed": elapsed,
    }


def test_dataset_pipeline_determinism(full_generation):
    first = full_generation["first"]
    problems = []

    for label, other in (
        ("rerun", full_generation["second"]),
        ("workers=4", full_generation["third"]),
    ):
        for key in ("train", "valid", "test", "statistics"):
            a = Path(first.paths[key]).read_bytes()
            b = Path(other.paths[key]).read_bytes()
            if a != b:
                problems.append(f"{label}:{key} differs")

    written = first.statistics["written"]
    if written != {"train": 2000, "valid": 200, "test": 200}:
        problems.append(f"written {written}")

    groups = {}
    for split in ("train", "valid", "test"):
        groups[split] = {rec.group_key for rec in read_records(first.paths[split])}
    leaks = (
        len(groups["train"] & groups["valid"])
        + len(groups["train"] & groups["test"])
        + len(groups["valid"] & groups["test"])
    )
    if leaks:
        problems.append(f"{leaks} leaked group keys")

    stats = full_generation["aug_stats"]
    augmented = read_records(full_generation["aug_path"])
    originals = read_records(first.paths["train"])
    if stats["records_out"] != 2 * stats["records_in"]:
        problems.append(f"aug sizes {stats}")
    if len(augmented) != 2 * len(originals):
        problems.append("aug file size mismatch")
    if augmented[0::2] != originals:
        problems.append("aug originals not preserved in order")

    elapsed = full_generation["elapsed"]
    if elapsed >= 600:
        problems.append(f"{elapsed:.0f}s >= 600s")

    _gate(
        "dataset-pipeline-determinism",
        not problems,
        "; ".join(problems)
        or f"3 runs byte-identical, 0 leaked groups, "
        f"aug {stats['records_in']}->{stats['records_out']}, {elapsed:.0f}s < 600s",
    )


def test_tokenizer_round_trip(full_generation):
    first = full_generation["first"]
    paths = [first.paths[s] for s in ("train", "valid", "test")]
    vocab = build_vocab(paths)
    rebuilt = build_vocab(list(reversed(paths)))
    failures = 0 if vocab == rebuilt else 1

    records = []
    for path in paths:
        records.extend(read_records(path))
    strings = checks = 0
    for rec in records:
        for text in (*rec.reactants, rec.template, *rec.products):
            strings += 1
            if decode(encode_target(text, vocab), vocab) != text:
                failures += 1
        for mode in ("tb", "tf"):
            template_arg = rec.template if mode == "tb" else None
            seq = encode_input(list(rec.reactants), template_arg, vocab, mode)
            checks += 1
            if len(seq.ids) != len(seq.type_ids) or seq.unknown:
                failures += 1
            parts = list(rec.reactants) + ([rec.template] if mode == "tb" else [])
            if decode(seq, vocab, sep="\x00") != "\x00".join(parts):
                failures += 1
    ok = failures == 0 and len(records) == 2400
    _gate(
        "tokenizer-round-trip",
        ok,
        f"{strings} strings round-tripped, {checks} input encodings aligned, "
        f"{failures} failures over {len(records)} records",
    )


# ---------------------------------------------------------------------------
# 8. Evaluation: representation invariance and multi-reference membership
#    on constructed cases; accuracy is an exact ratio of counts.


def test_evaluation_invariance(registry, pool, tmp_path):
    rng = random.Random(77)
    rxn = registry.get(2)
    records = []
    for smi in pool:
        products = apply_smiles(rxn, [parse_smiles(smi)])
        if products:
            records.append(
                DatasetRecord(
                    reactants=(smi,),
                    template_id=2,
                    template=BUILTIN_TEMPLATES[1],
                    products=tuple(products),
                    split="test",
                )
            )
        if len(records) >= 40:
            break
    refs_path = tmp_path / "refs.jsonl"
    write_records(records, str(refs_path))

    wrong_pool = ("C", "CC", "CCC", "CCCC")
    correct_flags = [i % 4 != 3 for i in range(len(records))]

    def render(seed_base: int) -> str:
        lines = []
        for i, (rec, flag) in enumerate(zip(records, correct_flags)):
            if flag:
                target = rec.products[-1]
                mol = parse_smiles(target)
                lines.append(randomized_smiles(mol, seed=seed_base + i))
            else:
                lines.append(next(w for w in wrong_pool if w not in rec.products))
        return "".join(line + "\n" for line in lines)

    pred_a = tmp_path / "pred_a.txt"
    pred_b = tmp_path / "pred_b.txt"
    pred_a.write_text(render(1000), encoding="utf-8")
    pred_b.write_text(render(2000), encoding="utf-8")
    report_a = evaluate(str(pred_a), str(refs_path))
    report_b = evaluate(str(pred_b), str(refs_path))

    failures = 0
    if report_a.to_obj() != report_b.to_obj():
        failures += 1
    if report_a.correct != sum(correct_flags):
        failures += 1
    exact = Fraction(report_a.correct, report_a.total)
    if abs(report_a.accuracy - exact) >= 1e-12:
        failures += 1

    multi = [r for r in records if len(r.products) > 1]
    if not multi:
        failures += 1

    bad_path = tmp_path / "bad.txt"
    bad_path.write_text("???\n" * len(records), encoding="utf-8")
    report_bad = evaluate(str(bad_path), str(refs_path))
    if report_bad.correct != 0 or report_bad.total != len(records):
        failures += 1

    ok = failures == 0
    _gate(
        "evaluation-invariance",
        ok,
        f"{len(records)} records ({len(multi)} multi-product), two "
        f"representations agree at accuracy {float(exact):.4f}, "
        f"{failures} failures",
    )
