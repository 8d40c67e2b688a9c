"""Builds the frozen test fixtures.

Outputs (under tests/data/):
  pool_10k.smi        10000 canonical molecules grown from hand seeds by
                      repeatedly applying builtin templates
  apply_fixtures.json (reactants, template, mode) cases with expected
                      products, every one cross-checked against the
                      brute-force oracle before freezing

The script aborts on any oracle disagreement; nothing gets frozen unless
both routes produce isomorphic product sets.
"""
from __future__ import annotations

import json
import random
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

import bridge  # noqa: E402
import oracle  # noqa: E402

from rxnkit.elements import SYMBOLS  # noqa: E402
from rxnkit.errors import RxnkitError  # noqa: E402
from rxnkit.molgraph import parse_smiles, write_canonical  # noqa: E402
from rxnkit.rxn import BUILTIN_TEMPLATES, apply, builtin_registry  # noqa: E402

DATA = ROOT / "tests" / "data"
POOL_TARGET = 10_000
MAX_HEAVY = 16
RING_TEMPLATE_MAX_HEAVY = 11  # chain templates walk long paths; keep them cheap

SEEDS = [
    # alkanes and simple skeletons
    "C", "CC", "CCC", "CCCC", "CC(C)C", "CCCCC", "CC(C)(C)C", "CCCCCC",
    # alcohols and ethers
    "O", "CO", "CCO", "CCCO", "CC(C)O", "OCCO", "COC", "CCOC", "CCOCC",
    "COCCO", "OCC(O)CO",
    # amines
    "N", "CN", "CCN", "CNC", "CN(C)C", "NCCN", "CCNCC", "NCCO",
    # carbonyls, acids, esters, amides
    "C=O", "CC=O", "CCC=O", "CC(=O)C", "CCC(=O)C", "CC(=O)O", "CCC(=O)O",
    "COC(=O)C", "CC(=O)N", "CNC(=O)C", "O=CO", "O=CN", "OCC(=O)C",
    "NCC(=O)O", "CC(N)C(=O)O",
    # nitriles and alkynes
    "C#N", "CC#N", "CCC#N", "OCC#N", "C#C", "CC#C", "CC#CC", "NCC#N",
    # alkenes and dienes
    "C=C", "CC=C", "CC=CC", "C=CC=C", "CC(=C)C", "OC=C", "OCC=C",
    "C=CC=O", "CC=CC=O", "C=CC#N",
    # fluorine
    "CF", "FC(F)F", "CCF", "FCCO", "Fc1ccccc1",
    # sulfur
    "S", "CS", "CCS", "CSC", "CSSC", "S=C", "CS(=O)C", "CS(=O)(=O)C",
    # saturated rings
    "C1CC1", "C1CCC1", "C1CCCC1", "C1CCCCC1", "C1CO1", "C1CCO1", "C1CCOC1",
    "C1CCNC1", "C1CCSC1", "C1CCNCC1", "C1CCOCC1", "OC1CCCCC1", "N1CCNCC1",
    "C1CC2CCC1C2", "CC12CC1C2",
    # unsaturated rings
    "C1=CC1", "C1=CCC1", "C1=CCCC1", "C1=CC=CC1", "C1=CCCCC1", "C1=CCOC1",
    "C1=CCNC1",
    # aromatics
    "c1ccccc1", "Cc1ccccc1", "CCc1ccccc1", "Oc1ccccc1", "COc1ccccc1",
    "Nc1ccccc1", "CNc1ccccc1", "c1ccncc1", "Cc1ccncc1", "c1ccoc1",
    "Cc1ccoc1", "c1cc[nH]c1", "Cc1cc[nH]c1", "c1ccsc1", "c1cnc[nH]1",
    "Cn1cccc1", "c1ccc2ccccc2c1", "Oc1ccc(O)cc1", "Cc1ccc(C)cc1",
    "Nc1ccc(O)cc1", "Cc1ccccc1C", "Cc1ccc(O)cc1",
    # mixed aromatic side chains
    "OCc1ccccc1", "O=Cc1ccccc1", "CC(=O)c1ccccc1", "N#Cc1ccccc1",
    "CC(=O)Oc1ccccc1", "c1ccc(cc1)c1ccccc1", "OCc1ccco1", "CCc1ccccc1N",
]

POOL_ELEMENTS = {"C", "N", "O", "F", "S"}


def pool_eligible(mol) -> bool:
    if len(mol) > MAX_HEAVY:
        return False
    for atom in mol.atoms:
        if SYMBOLS[atom.element] not in POOL_ELEMENTS:
            return False
        if atom.charge != 0 or atom.isotope is not None:
            return False
    return True


def build_pool() -> list[str]:
    rng = random.Random(20250817)
    reg = builtin_registry()
    pool: list[str] = []
    seen: set[str] = set()

    def add(mol) -> None:
        if not pool_eligible(mol):
            return
        smi = write_canonical(mol)
        if smi not in seen:
            seen.add(smi)
            pool.append(smi)

    for smi in SEEDS:
        add(parse_smiles(smi))

    parsed_cache: dict[str, object] = {}

    def parsed(smi: str):
        if smi not in parsed_cache:
            parsed_cache[smi] = parse_smiles(smi)
        return parsed_cache[smi]

    attempts = 0
    idx = 0
    while len(pool) < POOL_TARGET and attempts < 400_000:
        attempts += 1
        smi = pool[idx % len(pool)]
        idx += 1
        tid = rng.randint(1, 20)
        mol = parsed(smi)
        if tid >= 5 and len(mol) > RING_TEMPLATE_MAX_HEAVY:
            continue
        try:
            if tid == 1 and rng.random() < 0.5:
                other = parsed(pool[rng.randrange(len(pool))])
                if len(mol) + len(other) > MAX_HEAVY:
                    continue
                apps = apply(reg.get(1), [mol, other], mode="inter")
            else:
                apps = apply(reg.get(tid), [mol])
        except RxnkitError:
            continue
        if not apps:
            continue
        for app in rng.sample(apps, min(2, len(apps))):
            for product in app.products:
                add(product)
            if len(pool) >= POOL_TARGET:
                break
    if len(pool) < POOL_TARGET:
        raise SystemExit(f"pool exhausted at {len(pool)} molecules")
    return pool[:POOL_TARGET]


def oracle_check(reactants: list[str], tid: int, mode: str, apps) -> bool:
    orxn = oracle.parse_reaction(BUILTIN_TEMPLATES[tid - 1])
    omols = [oracle.parse(s) for s in reactants]
    oouts = oracle.apply(orxn, omols, mode=mode)
    return bridge.outcomes_agree(apps, oouts)


def build_fixtures(pool: list[str]) -> list[dict]:
    rng = random.Random(96217)
    reg = builtin_registry()
    fixtures: list[dict] = []

    order = list(range(len(pool)))
    rng.shuffle(order)

    for tid in range(1, 21):
        max_heavy = RING_TEMPLATE_MAX_HEAVY if tid >= 5 else 14
        hits: list[dict] = []
        misses: list[dict] = []
        for pos in order:
            if len(hits) >= 10 and len(misses) >= 2:
                break
            smi = pool[pos]
            mol = parse_smiles(smi)
            if len(mol) > max_heavy:
                continue
            apps = apply(reg.get(tid), [mol])
            entry = {
                "reactants": [smi],
                "template_id": tid,
                "mode": "intra",
                "products": [a.smiles for a in apps],
            }
            if apps and len(hits) < 10:
                if not oracle_check([smi], tid, "intra", apps):
                    print(f"ORACLE DISAGREEMENT: {smi} x template {tid}")
                    sys.exit(1)
                hits.append(entry)
            elif not apps and len(misses) < 2:
                if not oracle_check([smi], tid, "intra", apps):
                    print(f"ORACLE DISAGREEMENT (empty): {smi} x template {tid}")
                    sys.exit(1)
                misses.append(entry)
        if len(hits) < 10:
            print(f"warning: template {tid} found only {len(hits)} hit fixtures")
        fixtures.extend(hits)
        fixtures.extend(misses)

    # two-molecule cases for the bond-forming template
    added = 0
    for pos in order:
        if added >= 8:
            break
        a = pool[pos]
        b = pool[order[(pos + 7) % len(order)]]
        ma, mb = parse_smiles(a), parse_smiles(b)
        if len(ma) + len(mb) > 14:
            continue
        apps = apply(reg.get(1), [ma, mb], mode="inter")
        if not apps:
            continue
        if not oracle_check([a, b], 1, "inter", apps):
            print(f"ORACLE DISAGREEMENT: {a} + {b} x template 1 inter")
            sys.exit(1)
        fixtures.append({
            "reactants": [a, b],
            "template_id": 1,
            "mode": "inter",
            "products": [x.smiles for x in apps],
        })
        added += 1

    return fixtures


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)

    print("growing molecule pool ...")
    pool = build_pool()
    (DATA / "pool_10k.smi").write_text("\n".join(pool) + "\n")
    print(f"  {len(pool)} molecules")

    print("verifying parser agreement on a pool sample ...")
    rng = random.Random(5150)
    for smi in rng.sample(pool, 400):
        omol = oracle.parse(smi)
        rmol = parse_smiles(smi)
        if not oracle.same_molecule(bridge.to_oracle(rmol), omol):
            print(f"PARSER DISAGREEMENT on {smi}")
            sys.exit(1)

    print("building apply fixtures ...")
    fixtures = build_fixtures(pool)
    with open(DATA / "apply_fixtures.json", "w") as fh:
        json.dump(fixtures, fh, indent=1)
    n_hits = sum(1 for f in fixtures if f["products"])
    print(f"  {len(fixtures)} fixtures ({n_hits} with products), all oracle-checked")


if __name__ == "__main__":
    main()
