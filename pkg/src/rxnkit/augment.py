"""Template augmentation: rewriting reaction SMARTS into equivalent or
narrower/wider variants.

Four operation families edit the atom expressions of a template while the
bond skeleton stays fixed:

* ``specialize`` — an atomic-number primitive ``#n`` becomes the uppercase
  (non-aromatic) or lowercase (aromatic) element symbol, restricting what the
  site matches.
* ``generalize`` — the inverse: an element-symbol primitive becomes ``#n``,
  widening the site to both aromatic and non-aromatic atoms.
* ``permute`` — reorders the primitives inside one OR list
  (``permute_within``) or the dot-separated components of one side
  (``permute_between``); matching semantics are unchanged, only the
  serialization moves.
* ``combine`` — keeps a non-empty proper subset of an OR list, narrowing the
  site to fewer elements.

Mirroring rule: template atom maps tie each left-side atom to its right-side
counterpart.  ``specialize``, ``generalize``, and ``combine`` change what an
atom is allowed to be, so the map-linked expression on the opposite side is
edited in the same way (matched up by element, not by list position).  When
the edit would *widen* the opposite side it is applied freely; when it would
*narrow* it, the opposite expression must already carry a compatible
primitive, otherwise the operation fails — this is what keeps the variant
semantics monotone (specialized/combined variants only ever produce a subset
of the base template's products, generalized variants a superset).  An atom
whose map has no counterpart on the other side (a leaving group) is edited
alone.  ``permute`` never mirrors: order carries no matching semantics.

Every operation reserializes and reparses the edited template, so a returned
variant is structurally valid by construction, and a variant whose
serialization equals the base is rejected as degenerate.

``enumerate_variants`` draws seeded random single-operation variants and
keeps those that pass a semantic gate: the variant must rewrite at least one
molecule of a probe set (by default :data:`DEFAULT_PROBE_SMILES`).
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .elements import AROMATIC_SYMBOLS, SP2_CAPABLE, SYMBOLS
from .errors import AugmentError
from .molgraph import Molecule, parse_smiles
from .rxn import SmartsReaction, apply, parse_reaction, write_reaction
from .smarts import AtomExpr, AtomPrim, PatternGraph, write_pattern

OP_KINDS: tuple[str, ...] = (
    "specialize",
    "generalize",
    "permute_within",
    "permute_between",
    "combine",
)

# Fifty small molecules spanning chains, double/triple bonds, carbo- and
# heterocycles, aromatics, and detached fragment pairs; a variant counts as
# chemically meaningful when it rewrites at least one of them.  Every builtin
# template rewrites several.
DEFAULT_PROBE_SMILES: tuple[str, ...] = (
    "C", "CC", "CCC", "CCCC", "CCCCC", "CCCCCC", "CCCCCCC", "CCCCCCCC",
    "CO", "CCO", "CCCO", "OCCO", "OCCCO",
    "CN", "CCN", "NCCN", "NCCCN", "CNC", "COC",
    "CS", "CCS", "CSC", "CF",
    "C=C", "CC=C", "C=CC=C",
    "C=O", "CC=O", "CCC=O",
    "C=N", "CC=N",
    "C#C", "CC#C", "C#N", "CC#N",
    "C1CC1", "C1CCC1", "C1CCCC1", "C1CCCCC1", "C1CCCCCC1", "C1CCCCCCC1",
    "C1CO1", "C1CCOC1", "C1CCNC1", "C1CCSC1",
    "c1ccccc1", "c1ccncc1",
    "C.O", "C.N", "C.F",
)


@dataclass(frozen=True)
class Site:
    """Addresses part of a reaction template.

    ``side`` selects the pattern; ``atom`` an atom expression within it (by
    the side's atom index); ``term`` a primitive within that expression's OR
    list.  Whole-side operations (component permutation) leave ``atom``
    unset, whole-list operations (OR permutation, combination) leave
    ``term`` unset.  Indices address the template as currently serialized.
    """

    side: str
    atom: int | None = None
    term: int | None = None

    def __post_init__(self) -> None:
        if self.side not in ("lhs", "rhs"):
            raise AugmentError(f"site side must be 'lhs' or 'rhs', not {self.side!r}")
        if self.atom is not None and self.atom < 0:
            raise AugmentError(f"site atom index must be >= 0, not {self.atom}")
        if self.term is not None:
            if self.atom is None:
                raise AugmentError("a site with a term index needs an atom index")
            if self.term < 0:
                raise AugmentError(f"site term index must be >= 0, not {self.term}")

    def __str__(self) -> str:
        out = self.side
        if self.atom is not None:
            out += f".{self.atom}"
        if self.term is not None:
            out += f".{self.term}"
        return out


@dataclass(frozen=True)
class AugmentationOp:
    """One applied edit.

    ``payload`` depends on ``kind``: the replacement primitive's text for
    ``specialize``/``generalize`` (e.g. ``"c"``, ``"#8"``), the new order for
    the permutations, the retained OR-list indices for ``combine``.
    """

    kind: str
    site: Site
    payload: str | tuple[int, ...]

    def __post_init__(self) -> None:
        if self.kind not in OP_KINDS:
            raise AugmentError(f"unknown augmentation kind {self.kind!r}")
        if self.kind in ("specialize", "generalize"):
            if not isinstance(self.payload, str):
                raise AugmentError(f"{self.kind} payload must be the replacement primitive text")
        else:
            if not (isinstance(self.payload, tuple)
                    and self.payload
                    and all(isinstance(i, int) for i in self.payload)):
                raise AugmentError(f"{self.kind} payload must be a non-empty tuple of indices")
            if self.kind.startswith("permute"):
                if sorted(self.payload) != list(range(len(self.payload))):
                    raise AugmentError(
                        f"{self.kind} payload {self.payload} is not a permutation"
                    )
            else:  # combine
                if list(self.payload) != sorted(set(self.payload)) or self.payload[0] < 0:
                    raise AugmentError(
                        f"combine payload {self.payload} must be strictly increasing and >= 0"
                    )

    @property
    def signature(self) -> str:
        if isinstance(self.payload, str):
            return f"{self.kind}({self.site}->{self.payload})"
        return f"{self.kind}({self.site}:{','.join(map(str, self.payload))})"


@dataclass(frozen=True)
class AugmentedTemplate:
    """A variant template plus how it was derived.

    ``provenance_text`` is the canonical serialization of ``result``; it is
    guaranteed to reparse and to differ from the base template's
    serialization.
    """

    base_id: int
    ops: tuple[AugmentationOp, ...]
    result: SmartsReaction
    provenance_text: str


# ---------------------------------------------------------------------------
# Shared editing machinery


def _pattern(rxn: SmartsReaction, side: str) -> PatternGraph:
    return rxn.lhs if side == "lhs" else rxn.rhs


def _atom_expr(rxn: SmartsReaction, site: Site) -> AtomExpr:
    if site.atom is None:
        raise AugmentError(f"this operation needs an atom site, got {site}")
    pattern = _pattern(rxn, site.side)
    if site.atom >= len(pattern.atoms):
        raise AugmentError(
            f"no atom {site.atom} on the {site.side} (it has {len(pattern.atoms)})"
        )
    return pattern.atoms[site.atom]


def _or_prim(expr: AtomExpr, site: Site) -> AtomPrim:
    if site.term is None:
        raise AugmentError(f"this operation needs a term site, got {site}")
    if site.term >= len(expr.or_terms):
        raise AugmentError(
            f"no OR term {site.term} in {expr.text()} (it has {len(expr.or_terms)})"
        )
    return expr.or_terms[site.term]


def _with_or_terms(expr: AtomExpr, or_terms: tuple[AtomPrim, ...]) -> AtomExpr:
    return AtomExpr(or_terms, expr.and_terms, expr.map)


def _mirror_index(rxn: SmartsReaction, site: Site) -> tuple[str, int] | None:
    """The map-linked atom on the opposite side, or None for LHS-only maps."""
    expr = _pattern(rxn, site.side).atoms[site.atom]
    if expr.map is None:
        return None
    other = "rhs" if site.side == "lhs" else "lhs"
    idx = _pattern(rxn, other).maps.get(expr.map)
    if idx is None:
        return None
    return other, idx


def _edited(rxn: SmartsReaction, edits: dict[tuple[str, int], AtomExpr],
            component_order: dict[str, tuple[int, ...]] | None = None,
            ) -> SmartsReaction:
    """Rebuild the reaction with replaced atom expressions and/or reordered
    components, then reparse so all structural validation reruns."""
    sides: dict[str, PatternGraph] = {}
    for side_name in ("lhs", "rhs"):
        pattern = _pattern(rxn, side_name)
        repl = {a: e for (s, a), e in edits.items() if s == side_name}
        components = pattern.components
        if component_order and side_name in component_order:
            components = tuple(components[i] for i in component_order[side_name])
        if repl or components is not pattern.components:
            atoms = tuple(repl.get(i, e) for i, e in enumerate(pattern.atoms))
            pattern = PatternGraph(atoms, pattern.bonds, components)
        sides[side_name] = pattern
    text = write_pattern(sides["lhs"]) + ">>" + write_pattern(sides["rhs"])
    return parse_reaction(text)


def _finalize(base_id: int, ops: tuple[AugmentationOp, ...],
              base: SmartsReaction, result: SmartsReaction) -> AugmentedTemplate:
    text = write_reaction(result)
    if text == write_reaction(base):
        raise AugmentError(f"variant is identical to its base template: {text}")
    return AugmentedTemplate(base_id, ops, result, text)


def _element_key(prim: AtomPrim) -> tuple:
    """Primitives that name the same element correspond across the mirror,
    regardless of #n/uppercase/lowercase form."""
    if prim.kind in ("number", "aliphatic", "aromatic"):
        return ("element", prim.value)
    return (prim.kind, prim.value)


def _mirror_narrow(expr: AtomExpr, value: int, new_prim: AtomPrim) -> AtomExpr:
    """Apply a narrowing replacement (#n -> symbol) at the mirrored site.

    The OR term naming the same element is replaced when it is still in ``#n``
    form, kept when it already equals the target, and refused when it is
    pinned to the opposite form (replacing it would not narrow the template).
    """
    for i, p in enumerate(expr.or_terms):
        if _element_key(p) != ("element", value):
            continue
        if p == new_prim:
            return expr
        if p.kind == "number":
            terms = expr.or_terms[:i] + (new_prim,) + expr.or_terms[i + 1:]
            return _with_or_terms(expr, terms)
        raise AugmentError(
            f"mirrored expression {expr.text()} pins {SYMBOLS[value]} to its "
            f"{p.kind} form; cannot restrict it to {new_prim.text!r}"
        )
    raise AugmentError(
        f"mirrored expression {expr.text()} has no {SYMBOLS[value]} term to specialize"
    )


def _mirror_widen(expr: AtomExpr, value: int, new_prim: AtomPrim) -> AtomExpr:
    """Apply a widening replacement (symbol -> #n) at the mirrored site."""
    for i, p in enumerate(expr.or_terms):
        if _element_key(p) != ("element", value):
            continue
        if p.kind == "number":
            return expr
        terms = expr.or_terms[:i] + (new_prim,) + expr.or_terms[i + 1:]
        return _with_or_terms(expr, terms)
    raise AugmentError(
        f"mirrored expression {expr.text()} has no {SYMBOLS[value]} term to generalize"
    )


# ---------------------------------------------------------------------------
# The four operation families


def specialize(rxn: SmartsReaction, site: Site, form: str,
               base_id: int = 0) -> AugmentedTemplate:
    """Replace the ``#n`` primitive at ``site`` with its element symbol.

    ``form`` is ``"aliphatic"`` (uppercase symbol) or ``"aromatic"``
    (lowercase).  The map-linked expression on the opposite side is narrowed
    the same way when the map survives there.
    """
    if form not in ("aliphatic", "aromatic"):
        raise AugmentError(f"specialize form must be 'aliphatic' or 'aromatic', not {form!r}")
    expr = _atom_expr(rxn, site)
    prim = _or_prim(expr, site)
    if prim.kind != "number":
        raise AugmentError(
            f"specialize needs a '#n' primitive at {site}, found {prim.text!r}"
        )
    if form == "aromatic" and SYMBOLS[prim.value].lower() not in AROMATIC_SYMBOLS:
        raise AugmentError(f"{SYMBOLS[prim.value]} has no aromatic form")
    new_prim = AtomPrim(form, prim.value)
    terms = expr.or_terms[:site.term] + (new_prim,) + expr.or_terms[site.term + 1:]
    edits = {(site.side, site.atom): _with_or_terms(expr, terms)}
    mirror = _mirror_index(rxn, site)
    if mirror is not None:
        m_side, m_atom = mirror
        m_expr = _pattern(rxn, m_side).atoms[m_atom]
        edits[(m_side, m_atom)] = _mirror_narrow(m_expr, prim.value, new_prim)
    op = AugmentationOp("specialize", site, new_prim.text)
    return _finalize(base_id, (op,), rxn, _edited(rxn, edits))


def generalize(rxn: SmartsReaction, site: Site, base_id: int = 0) -> AugmentedTemplate:
    """Replace the element-symbol primitive at ``site`` with ``#n``, widening
    it to aromatic and non-aromatic atoms alike; mirrored on the map-linked
    expression of the opposite side when the map survives there."""
    expr = _atom_expr(rxn, site)
    prim = _or_prim(expr, site)
    if prim.kind not in ("aliphatic", "aromatic"):
        raise AugmentError(
            f"generalize needs an element-symbol primitive at {site}, found {prim.text!r}"
        )
    new_prim = AtomPrim("number", prim.value)
    terms = expr.or_terms[:site.term] + (new_prim,) + expr.or_terms[site.term + 1:]
    edits = {(site.side, site.atom): _with_or_terms(expr, terms)}
    mirror = _mirror_index(rxn, site)
    if mirror is not None:
        m_side, m_atom = mirror
        m_expr = _pattern(rxn, m_side).atoms[m_atom]
        edits[(m_side, m_atom)] = _mirror_widen(m_expr, prim.value, new_prim)
    op = AugmentationOp("generalize", site, new_prim.text)
    return _finalize(base_id, (op,), rxn, _edited(rxn, edits))


def permute(rxn: SmartsReaction, site: Site, order: tuple[int, ...] | list[int],
            base_id: int = 0) -> AugmentedTemplate:
    """Reorder OR terms (site with an atom index) or dot components (side-only
    site) of one side.  No mirroring; the identity order is rejected because
    the variant would serialize identically to the base."""
    order = tuple(order)
    if site.atom is not None:
        expr = _atom_expr(rxn, site)
        if site.term is not None:
            raise AugmentError(f"permute addresses a whole OR list, got {site}")
        if sorted(order) != list(range(len(expr.or_terms))):
            raise AugmentError(
                f"{order} is not a permutation of the {len(expr.or_terms)} OR terms at {site}"
            )
        terms = tuple(expr.or_terms[i] for i in order)
        op = AugmentationOp("permute_within", site, order)
        result = _edited(rxn, {(site.side, site.atom): _with_or_terms(expr, terms)})
    else:
        components = _pattern(rxn, site.side).components
        if sorted(order) != list(range(len(components))):
            raise AugmentError(
                f"{order} is not a permutation of the {len(components)} "
                f"components of the {site.side}"
            )
        op = AugmentationOp("permute_between", site, order)
        result = _edited(rxn, {}, component_order={site.side: order})
    return _finalize(base_id, (op,), rxn, result)


def combine(rxn: SmartsReaction, site: Site, subset: tuple[int, ...] | list[int],
            base_id: int = 0) -> AugmentedTemplate:
    """Keep only the OR terms at the given indices of ``site``'s list.

    The retained subset must be non-empty and drawn from the list; keeping
    everything is rejected as degenerate.  The map-linked expression on the
    opposite side keeps exactly the terms naming the retained elements, which
    must all be present there.
    """
    expr = _atom_expr(rxn, site)
    if site.term is not None:
        raise AugmentError(f"combine addresses a whole OR list, got {site}")
    subset = tuple(sorted(set(subset)))
    if not subset:
        raise AugmentError("combine needs a non-empty retained subset")
    if subset[0] < 0 or subset[-1] >= len(expr.or_terms):
        raise AugmentError(
            f"retained indices {subset} fall outside the OR list of {expr.text()}"
        )
    retained = tuple(expr.or_terms[i] for i in subset)
    edits = {(site.side, site.atom): _with_or_terms(expr, retained)}
    mirror = _mirror_index(rxn, site)
    if mirror is not None:
        m_side, m_atom = mirror
        m_expr = _pattern(rxn, m_side).atoms[m_atom]
        keys = {_element_key(p) for p in retained}
        have = {_element_key(p) for p in m_expr.or_terms}
        missing = keys - have
        if missing:
            raise AugmentError(
                f"mirrored expression {m_expr.text()} lacks terms for the "
                f"retained elements of {expr.text()}"
            )
        kept = tuple(p for p in m_expr.or_terms if _element_key(p) in keys)
        edits[(m_side, m_atom)] = _with_or_terms(m_expr, kept)
    op = AugmentationOp("combine", site, subset)
    return _finalize(base_id, (op,), rxn, _edited(rxn, edits))


_DISPATCH = {
    "specialize": specialize,
    "generalize": generalize,
    "permute_within": permute,
    "permute_between": permute,
    "combine": combine,
}


def chain(rxn: SmartsReaction, steps: list[tuple[str, Site, object]],
          base_id: int = 0) -> AugmentedTemplate:
    """Apply several operations in sequence.

    Each step is ``(kind, site, payload)`` with the payload the corresponding
    single-operation function takes (form, order, or subset).  Sites address
    the template *as produced by the previous step*, since every step
    reserializes.  The final variant must differ from the original base.
    """
    current = rxn
    ops: list[AugmentationOp] = []
    for kind, site, payload in steps:
        if kind not in _DISPATCH:
            raise AugmentError(f"unknown augmentation kind {kind!r}")
        step = _DISPATCH[kind](current, site, payload, base_id=base_id)
        ops.extend(step.ops)
        current = step.result
    if not ops:
        raise AugmentError("chain needs at least one step")
    return _finalize(base_id, tuple(ops), rxn, current)


# ---------------------------------------------------------------------------
# Seeded enumeration with the semantic gate


def _probe_molecules(probe_smiles: tuple[str, ...]) -> list[Molecule]:
    return [parse_smiles(s) for s in probe_smiles]


def passes_probe_gate(rxn: SmartsReaction, probes: list[Molecule]) -> bool:
    """True when the template rewrites at least one probe molecule."""
    return any(apply(rxn, [m], "intra") for m in probes)


def _candidate_ops(rxn: SmartsReaction,
                   allowed: frozenset[str]) -> list[tuple[str, Site, object]]:
    """Every applicable (kind, site, hint) triple, in deterministic order.

    For the sampled kinds (permute/combine) the hint is the list length the
    sampler draws from; for specialize it is the form, for generalize None.
    """
    cands: list[tuple[str, Site, object]] = []
    for side in ("lhs", "rhs"):
        pattern = _pattern(rxn, side)
        for a_idx, expr in enumerate(pattern.atoms):
            for t_idx, prim in enumerate(expr.or_terms):
                site = Site(side, a_idx, t_idx)
                if "specialize" in allowed and prim.kind == "number":
                    cands.append(("specialize", site, "aliphatic"))
                    if prim.value in SP2_CAPABLE:
                        cands.append(("specialize", site, "aromatic"))
                if "generalize" in allowed and prim.kind in ("aliphatic", "aromatic"):
                    cands.append(("generalize", site, None))
            if len(expr.or_terms) >= 2:
                if "permute_within" in allowed:
                    cands.append(("permute_within", Site(side, a_idx), len(expr.or_terms)))
                if "combine" in allowed:
                    cands.append(("combine", Site(side, a_idx), len(expr.or_terms)))
        if "permute_between" in allowed and len(pattern.components) >= 2:
            cands.append(("permute_between", Site(side), len(pattern.components)))
    return cands


def _draw_variant(rxn: SmartsReaction, kind: str, site: Site, hint: object,
                  rng: random.Random, base_id: int) -> AugmentedTemplate:
    if kind == "specialize":
        return specialize(rxn, site, hint, base_id=base_id)
    if kind == "generalize":
        return generalize(rxn, site, base_id=base_id)
    if kind in ("permute_within", "permute_between"):
        order = list(range(hint))
        while order == sorted(order):
            rng.shuffle(order)
        return permute(rxn, site, tuple(order), base_id=base_id)
    size = rng.randrange(1, hint)
    subset = tuple(sorted(rng.sample(range(hint), size)))
    return combine(rxn, site, subset, base_id=base_id)


def enumerate_variants(
    rxn: SmartsReaction,
    allowed_kinds: frozenset[str] | None = None,
    max_count: int = 10,
    seed: int = 0,
    base_id: int = 0,
    probe_smiles: tuple[str, ...] | None = DEFAULT_PROBE_SMILES,
) -> list[AugmentedTemplate]:
    """A seeded, deterministic sample of distinct valid variants.

    Variants are deduplicated by exact serialization (whitespace stripped; OR
    order is not normalized away, because order is what the permutations
    change) and kept only when they rewrite at least one probe molecule.
    ``probe_smiles=None`` skips that gate for callers that apply their own
    acceptance test to each variant.  Fewer than ``max_count`` variants are
    returned when the template offers less diversity than requested.
    """
    if max_count < 1:
        raise AugmentError(f"max_count must be >= 1, not {max_count}")
    allowed = frozenset(allowed_kinds) if allowed_kinds is not None else frozenset(OP_KINDS)
    unknown = allowed - frozenset(OP_KINDS)
    if unknown:
        raise AugmentError(f"unknown augmentation kinds: {sorted(unknown)}")
    cands = _candidate_ops(rxn, allowed)
    if not cands:
        return []
    rng = random.Random(seed)
    probes = _probe_molecules(probe_smiles) if probe_smiles is not None else None
    seen = {write_reaction(rxn).replace(" ", "")}
    out: list[AugmentedTemplate] = []
    for _ in range(max(40 * max_count, 400)):
        if len(out) >= max_count:
            break
        kind, site, hint = cands[rng.randrange(len(cands))]
        try:
            variant = _draw_variant(rxn, kind, site, hint, rng, base_id)
        except AugmentError:
            continue
        key = variant.provenance_text.replace(" ", "")
        if key in seen:
            continue
        seen.add(key)
        if probes is None or passes_probe_gate(variant.result, probes):
            out.append(variant)
    return out


# ---------------------------------------------------------------------------
# Line format shared with the command-line tools


def format_variant_line(variant: AugmentedTemplate) -> str:
    """``base_id<TAB>ops_signature<TAB>reaction-SMARTS``."""
    signature = "+".join(op.signature for op in variant.ops)
    return f"{variant.base_id}\t{signature}\t{variant.provenance_text}"


def parse_variant_line(line: str) -> tuple[int, str, SmartsReaction]:
    """Inverse of :func:`format_variant_line` (the ops signature is returned
    verbatim, not reconstructed into operations)."""
    parts = line.rstrip("\n").split("\t")
    if len(parts) != 3:
        raise AugmentError(
            f"variant line needs 3 tab-separated fields, got {len(parts)}: {line!r}"
        )
    base_text, signature, smarts = parts
    try:
        base_id = int(base_text)
    except ValueError:
        raise AugmentError(f"variant line base id {base_text!r} is not an integer") from None
    return base_id, signature, parse_reaction(smarts)
