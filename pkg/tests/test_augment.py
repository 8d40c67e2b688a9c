"""Tests for the template augmentation engine.

Frozen variant strings were produced by running the editing rules and
hand-checking each one against the grammar before freezing; the semantic
properties (permutation invariance, narrowing/widening monotonicity) are
executed live through the rewriting engine on sampled molecules.
"""
import random

import pytest

from rxnkit.augment import (
    DEFAULT_PROBE_SMILES,
    AugmentationOp,
    Site,
    chain,
    combine,
    enumerate_variants,
    format_variant_line,
    generalize,
    parse_variant_line,
    passes_probe_gate,
    permute,
    specialize,
)
from rxnkit.errors import AugmentError
from rxnkit.molgraph import parse_smiles
from rxnkit.rxn import apply_smiles, parse_reaction, write_reaction


# ---------------------------------------------------------------------------
# Sites and operation records


def test_site_addressing_validation():
    with pytest.raises(AugmentError, match="side"):
        Site("mid")
    with pytest.raises(AugmentError, match="atom index"):
        Site("lhs", -1)
    with pytest.raises(AugmentError, match="needs an atom index"):
        Site("lhs", term=0)
    assert str(Site("lhs", 0, 1)) == "lhs.0.1"
    assert str(Site("rhs", 2)) == "rhs.2"
    assert str(Site("rhs")) == "rhs"


def test_op_payload_validation():
    with pytest.raises(AugmentError, match="unknown augmentation kind"):
        AugmentationOp("explode", Site("lhs", 0), "C")
    with pytest.raises(AugmentError, match="not a permutation"):
        AugmentationOp("permute_within", Site("lhs", 0), (0, 2))
    with pytest.raises(AugmentError, match="strictly increasing"):
        AugmentationOp("combine", Site("lhs", 0), (2, 1))
    with pytest.raises(AugmentError, match="replacement primitive"):
        AugmentationOp("specialize", Site("lhs", 0, 0), (0,))


# ---------------------------------------------------------------------------
# Specialization


def test_specialize_uppercase_mirrors_across_the_map(registry):
    v = specialize(registry.get(1), Site("lhs", 0, 0), "aliphatic", base_id=1)
    assert v.provenance_text == "[C,#7,#8;h:1].[O,N,F,C:2]>>[C,#7,#8:1][O,N,F,C:2]"
    assert [op.signature for op in v.ops] == ["specialize(lhs.0.0->C)"]
    assert v.base_id == 1


def test_specialize_lowercase_form(registry):
    v = specialize(registry.get(1), Site("lhs", 0, 0), "aromatic")
    assert v.provenance_text == "[c,#7,#8;h:1].[O,N,F,C:2]>>[c,#7,#8:1][O,N,F,C:2]"
    assert v.ops[0].payload == "c"


def test_specialize_rejects_symbol_and_wildcard_sites(registry):
    with pytest.raises(AugmentError, match="needs a '#n' primitive"):
        specialize(registry.get(1), Site("lhs", 1, 0), "aliphatic")
    with pytest.raises(AugmentError, match="needs a '#n' primitive"):
        specialize(registry.get(5), Site("lhs", 1, 0), "aliphatic")


def test_specialize_rejects_elements_without_aromatic_form():
    rxn = parse_reaction("[#9,#6;h:1].[C:2]>>[#9,#6:1][C:2]")
    with pytest.raises(AugmentError, match="no aromatic form"):
        specialize(rxn, Site("lhs", 0, 0), "aromatic")


def test_specialize_mirror_conflict_rejected(registry):
    # Template 7 writes its first atom as an uppercase symbol on the right,
    # so restricting the left-side carbon to the aromatic form would
    # contradict the output expression instead of narrowing it.
    with pytest.raises(AugmentError, match="pins C to its aliphatic form"):
        specialize(registry.get(7), Site("lhs", 0, 0), "aromatic")


def test_specialize_mirror_vacuous_when_already_specific(registry):
    base = write_reaction(registry.get(7))
    v = specialize(registry.get(7), Site("lhs", 0, 0), "aliphatic")
    expected_lhs = "[C,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[#6,#7,#8;h:3]"
    assert v.provenance_text == expected_lhs + ">>" + base.split(">>")[1]


# ---------------------------------------------------------------------------
# Generalization


def test_generalize_symbol_to_number_mirrored(registry):
    v = generalize(registry.get(1), Site("lhs", 1, 0), base_id=1)
    assert v.provenance_text == "[#6,#7,#8;h:1].[#8,N,F,C:2]>>[#6,#7,#8:1][#8,N,F,C:2]"
    assert [op.signature for op in v.ops] == ["generalize(lhs.1.0->#8)"]


def test_generalize_rejects_number_sites(registry):
    with pytest.raises(AugmentError, match="element-symbol primitive"):
        generalize(registry.get(1), Site("lhs", 0, 0))


def test_generalize_inverts_specialize_byte_exactly(registry):
    # Stronger than product-set equality: the round trip restores the very
    # serialization, because both edits mirror across the same map pair.
    base = registry.get(1)
    specialized = specialize(base, Site("lhs", 0, 0), "aliphatic")
    restored = generalize(specialized.result, Site("lhs", 0, 0))
    assert restored.provenance_text == write_reaction(base)


# ---------------------------------------------------------------------------
# Permutation


def test_permute_within_moves_only_that_list(registry):
    v = permute(registry.get(2), Site("lhs", 0), (2, 1, 0), base_id=2)
    assert v.provenance_text == "[C,N,O;h:1][O,N,C;h:2]>>[O,N,C:1]=[O,N,C:2]"
    assert [op.signature for op in v.ops] == ["permute_within(lhs.0:2,1,0)"]


def test_permuted_components_and_terms_reach_documented_form():
    rxn = parse_reaction("[#6,#7,#8;h:2].[O,N,F,C:1]>>[#6,#7,#8:2][O,N,F,C:1]")
    v = chain(
        rxn,
        [
            ("permute_between", Site("lhs"), (1, 0)),
            ("permute_within", Site("lhs", 1), (1, 2, 0)),
        ],
    )
    assert v.provenance_text == "[O,N,F,C:1].[#7,#8,#6;h:2]>>[#6,#7,#8:2][O,N,F,C:1]"
    signature = "+".join(op.signature for op in v.ops)
    assert signature == "permute_between(lhs:1,0)+permute_within(lhs.1:1,2,0)"


def test_permute_identity_rejected(registry):
    with pytest.raises(AugmentError, match="identical"):
        permute(registry.get(2), Site("lhs", 0), (0, 1, 2))
    with pytest.raises(AugmentError, match="identical"):
        permute(registry.get(1), Site("lhs"), (0, 1))


def test_permute_rejects_invalid_orders(registry):
    with pytest.raises(AugmentError, match="not a permutation"):
        permute(registry.get(2), Site("lhs", 0), (0, 1))
    with pytest.raises(AugmentError, match="not a permutation"):
        permute(registry.get(2), Site("lhs", 0), (0, 1, 1))


# ---------------------------------------------------------------------------
# Combination


def test_combine_keeps_subset_mirrored(registry):
    v = combine(registry.get(1), Site("lhs", 0), (2,), base_id=1)
    assert v.provenance_text == "[#8;h:1].[O,N,F,C:2]>>[#8:1][O,N,F,C:2]"
    v = combine(registry.get(1), Site("lhs", 0), (0, 1), base_id=1)
    assert v.provenance_text == "[#6,#7;h:1].[O,N,F,C:2]>>[#6,#7:1][O,N,F,C:2]"
    assert [op.signature for op in v.ops] == ["combine(lhs.0:0,1)"]


def test_combine_rejects_empty_full_and_out_of_range(registry):
    with pytest.raises(AugmentError, match="non-empty"):
        combine(registry.get(1), Site("lhs", 0), ())
    with pytest.raises(AugmentError, match="identical"):
        combine(registry.get(1), Site("lhs", 0), (0, 1, 2))
    with pytest.raises(AugmentError, match="outside the OR list"):
        combine(registry.get(1), Site("lhs", 0), (0, 5))


def test_combine_mirrors_by_element_not_position(registry):
    # Template 7 spells the pair as #-numbers on the left and symbols on the
    # right, in different orders; retaining nitrogen must keep N, not the
    # term at the same list position.
    v = combine(registry.get(7), Site("lhs", 0), (1,))
    assert v.provenance_text == (
        "[#7;h:1]~[*:2]~[*:4]~[*:5]~[#6,#7,#8;h:3]"
        ">>[N:1]1[*:2]~[*:4]~[*:5]~[#6,#7,#8:3]1"
    )


def test_combine_on_leaving_group_is_one_sided(registry):
    # Map 2 of template 11 has no counterpart on the right (the atom is
    # severed), so the edit stays on the left.
    v = combine(registry.get(11), Site("lhs", 1), (2,))
    assert v.provenance_text == "[#6,#7,#8:1][F:2]>>[#6,#7,#8;h:1]"


def test_combine_mirror_missing_element_rejected():
    rxn = parse_reaction("[C,N;h:1][C;h:2]>>[N:1]=[C:2]")
    with pytest.raises(AugmentError, match="lacks terms"):
        combine(rxn, Site("lhs", 0), (0,))


# ---------------------------------------------------------------------------
# Chaining


def test_chain_rejects_round_trips_and_empty(registry):
    with pytest.raises(AugmentError, match="identical"):
        chain(
            registry.get(2),
            [
                ("permute_within", Site("lhs", 0), (1, 2, 0)),
                ("permute_within", Site("lhs", 0), (2, 0, 1)),
            ],
        )
    with pytest.raises(AugmentError, match="at least one step"):
        chain(registry.get(2), [])


# ---------------------------------------------------------------------------
# Enumeration


def test_enumerate_deterministic_distinct_and_valid(registry):
    a = enumerate_variants(registry.get(1), max_count=10, seed=42, base_id=1)
    b = enumerate_variants(registry.get(1), max_count=10, seed=42, base_id=1)
    assert [v.provenance_text for v in a] == [v.provenance_text for v in b]
    assert len(a) == 10
    assert len({v.provenance_text for v in a}) == 10
    base = write_reaction(registry.get(1))
    for v in a:
        reparsed = parse_reaction(v.provenance_text)
        assert write_reaction(reparsed) == v.provenance_text
        assert v.provenance_text != base
        assert v.base_id == 1 and len(v.ops) >= 1


def test_enumerate_respects_allowed_kinds_and_exhausts(registry):
    vs = enumerate_variants(
        registry.get(4), allowed_kinds=frozenset({"combine"}),
        max_count=10, seed=3, base_id=4,
    )
    assert sorted(v.provenance_text for v in vs) == [
        "[C;h:1]=[C;h:2]>>[C:1]#[C:2]",
        "[C;h:1]=[N;h:2]>>[C:1]#[N:2]",
    ]
    assert all(op.kind == "combine" for v in vs for op in v.ops)


def test_enumerate_returns_empty_without_candidates():
    rxn = parse_reaction("[C;h:1][C;h:2]>>[C:1]=[C:2]")
    assert enumerate_variants(rxn, allowed_kinds=frozenset({"combine"})) == []
    assert enumerate_variants(rxn, allowed_kinds=frozenset({"permute_between"})) == []


def test_enumerate_validates_arguments(registry):
    with pytest.raises(AugmentError, match="max_count"):
        enumerate_variants(registry.get(1), max_count=0)
    with pytest.raises(AugmentError, match="unknown augmentation kinds"):
        enumerate_variants(registry.get(1), allowed_kinds=frozenset({"mutate"}))


def test_enumerate_finds_variants_for_every_builtin(registry):
    for tid in registry.ids():
        vs = enumerate_variants(registry.get(tid), max_count=2, seed=1, base_id=tid)
        assert vs, f"template {tid} produced no variants"


def test_probe_gate_accepts_every_builtin(registry):
    probes = [parse_smiles(s) for s in DEFAULT_PROBE_SMILES]
    for tid in registry.ids():
        assert passes_probe_gate(registry.get(tid), probes), tid


# ---------------------------------------------------------------------------
# Line format


def test_variant_line_roundtrip(registry):
    v = combine(registry.get(1), Site("lhs", 0), (2,), base_id=1)
    line = format_variant_line(v)
    assert line == "1\tcombine(lhs.0:2)\t[#8;h:1].[O,N,F,C:2]>>[#8:1][O,N,F,C:2]"
    base_id, signature, rxn = parse_variant_line(line + "\n")
    assert base_id == 1
    assert signature == "combine(lhs.0:2)"
    assert write_reaction(rxn) == v.provenance_text


def test_variant_line_malformed():
    with pytest.raises(AugmentError, match="3 tab-separated fields"):
        parse_variant_line("1\tonly-two-fields")
    with pytest.raises(AugmentError, match="not an integer"):
        parse_variant_line("one\tsig\t[C;h:1][C;h:2]>>[C:1]=[C:2]")


# ---------------------------------------------------------------------------
# Semantic properties, executed through the rewriting engine


def _relation_for(kinds: set[str]) -> str:
    if kinds <= {"permute_within", "permute_between"}:
        return "equal"
    if kinds <= {"specialize", "combine"}:
        return "subset"
    if kinds <= {"generalize"}:
        return "superset"
    raise AssertionError(f"mixed-kind variant in single-op enumeration: {kinds}")


@pytest.mark.parametrize("tid,n_mols", [(2, 100), (5, 25), (11, 100), (12, 100)])
def test_variant_products_relate_monotonically(registry, pool, tid, n_mols):
    rng = random.Random(900 + tid)
    mols = [parse_smiles(s) for s in rng.sample(pool, n_mols)]
    base = registry.get(tid)
    base_products = [set(apply_smiles(base, [m])) for m in mols]
    variants = enumerate_variants(base, max_count=8, seed=7, base_id=tid)
    assert variants
    for v in variants:
        relation = _relation_for({op.kind for op in v.ops})
        for m, expected in zip(mols, base_products):
            got = set(apply_smiles(v.result, [m]))
            if relation == "equal":
                assert got == expected, (v.provenance_text, m)
            elif relation == "subset":
                assert got <= expected, (v.provenance_text, m)
            else:
                assert got >= expected, (v.provenance_text, m)
