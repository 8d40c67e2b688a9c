"""Reaction templates: parsing, the builtin registry, and application.

A template is ``LHS>>RHS`` where both sides are bracket-atom SMARTS patterns
and atom maps tie LHS atoms to RHS atoms.  ``apply`` enumerates embeddings of
the LHS (folding two embeddings together only when every rewrite-relevant
feature coincides, see ``_embedding_role``) and rewrites a kekulized copy of
the reactants per embedding:

1.  copy the matched reactant graphs into one working graph, once per
    combination of alternating single/double assignments of their aromatic
    systems (a created or deleted edge inside an aromatic ring lands on a
    single bond in some assignment and on a double in another, and the two
    give different products);
2.  atoms whose map appears only on the LHS are severed: their bonds to
    surviving mapped atoms are cut while spectator attachments stay, so the
    leaving group survives as one fragment; if a severed atom still reaches
    the kept part (ring substrates) the embedding is rejected;
3.  RHS edges: a missing bond is created (explicit order, else single), but
    only where the atoms are not already bonded -- a bond-forming edge over
    an existing bond rejects the embedding; over an existing bond an
    explicit expression (``-``, ``=``, ``#``) sets the order, while an
    unspecified/any expression keeps the reactant order when the matching
    LHS edge was a query (unspecified or any) and sets single when the LHS
    edge was explicit;
4.  LHS edges between surviving mapped atoms with no RHS counterpart are
    deleted;
5.  implicit hydrogens of every touched atom are recomputed from the valence
    table (no fitting valence rejects the embedding);
6.  the RHS doubles as a postcondition: every RHS atom expression and bond
    expression must hold on the re-perceived product at the mapped
    positions, or the embedding is rejected.  Constructive/destructive
    template pairs share their LHS/RHS strings, so this is what guarantees
    that the paired inverse can re-match every emitted product;
7.  connected components containing no RHS-mapped atom are dropped
    from the product (kept in a side channel as the discarded fragments);
8.  products are deduplicated by the canonical SMILES of their kept
    fragments.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .elements import allowed_valences
from .errors import ReactionError
from .molgraph import DOUBLE, SINGLE, TRIPLE, Molecule, kekulizations, write_canonical
from .smarts import Embedding, PatternGraph, match, parse_smarts, write_pattern

# Table of the 20 builtin templates; ids are 1-based line positions and the
# inverse of template k is k+10 (or k-10 for the second half).
BUILTIN_TEMPLATES: tuple[str, ...] = (
    "[#6,#7,#8;h:1].[O,N,F,C:2]>>[#6,#7,#8:1][O,N,F,C:2]",
    "[O,N,C;h:1][O,N,C;h:2]>>[O,N,C:1]=[O,N,C:2]",
    "[N,C;h2:1][N,C;h2:2]>>[N,C:1]#[N,C:2]",
    "[C;h:1]=[N,C;h:2]>>[C:1]#[N,C:2]",
    "[#6,#7,#8;h:1]~[*:2]~[#6,#7,#8;h:3]>>[#6,#7,#8:1]1[*:2]~[#6,#7,#8:3]1",
    "[#6,#7,#8;h:1]~[*:2]~[*:4]~[#6,#7,#8;h:3]"
    ">>[#6,#7,#8:1]1[*:2]~[*:4]~[#6,#7,#8:3]1",
    "[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[#6,#7,#8;h:3]"
    ">>[O,N,C:1]1[*:2]~[*:4]~[*:5]~[#6,#7,#8:3]1",
    "[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[*:6]~[#6,#7,#8;h:3]"
    ">>[O,N,C:1]1[*:2]~[*:4]~[*:5]~[*:6]~[#6,#7,#8:3]1",
    "[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[#6,#7,#8;h:3]"
    ">>[O,N,C:1]1[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[#6,#7,#8:3]1",
    "[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[*:8]~[#6,#7,#8;h:3]"
    ">>[O,N,C:1]1[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[*:8]~[#6,#7,#8:3]1",
    "[#6,#7,#8:1][O,N,F,C:2]>>[#6,#7,#8;h:1]",
    "[O,N,C:1]=[O,N,C:2]>>[O,N,C;h:1][O,N,C;h:2]",
    "[N,C:1]#[N,C:2]>>[N,C;h2:1][N,C;h2:2]",
    "[C:1]#[N,C:2]>>[C;h:1]=[N,C;h:2]",
    "[#6,#7,#8:1]1[*:2]~[#6,#7,#8:3]1>>[#6,#7,#8;h:1]~[*:2]~[#6,#7,#8;h:3]",
    "[#6,#7,#8:1]1[*:2]~[*:4]~[#6,#7,#8:3]1"
    ">>[#6,#7,#8;h:1]~[*:2]~[*:4]~[#6,#7,#8;h:3]",
    "[O,N,C:1]1[*:2]~[*:4]~[*:5]~[#6,#7,#8:3]1"
    ">>[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[#6,#7,#8;h:3]",
    "[O,N,C:1]1[*:2]~[*:4]~[*:5]~[*:6]~[#6,#7,#8:3]1"
    ">>[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[*:6]~[#6,#7,#8;h:3]",
    "[O,N,C:1]1[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[#6,#7,#8:3]1"
    ">>[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[#6,#7,#8;h:3]",
    "[O,N,C:1]1[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[*:8]~[#6,#7,#8:3]1"
    ">>[#6,#7,#8;h:1]~[*:2]~[*:4]~[*:5]~[*:6]~[*:7]~[*:8]~[#6,#7,#8;h:3]",
)


@dataclass(frozen=True)
class SmartsReaction:
    lhs: PatternGraph
    rhs: PatternGraph
    raw_text: str

    @property
    def lhs_maps(self) -> dict[int, int]:
        return self.lhs.maps

    @property
    def rhs_maps(self) -> dict[int, int]:
        return self.rhs.maps


def parse_reaction(text: str) -> SmartsReaction:
    """Parse and validate one reaction SMARTS."""
    parts = text.split(">>")
    if len(parts) != 2:
        raise ReactionError(
            f"a reaction needs exactly one '>>' separator: {text!r}"
        )
    lhs = parse_smarts(parts[0])
    rhs = parse_smarts(parts[1])
    for map_num, rhs_idx in rhs.maps.items():
        if map_num not in lhs.maps:
            raise ReactionError(
                f"RHS map {map_num} has no LHS counterpart in {text!r}"
            )
    for idx, expr in enumerate(rhs.atoms):
        if expr.map is None:
            raise ReactionError(
                f"unmapped RHS atom {expr.text()} in {text!r}: atom creation "
                "is not supported"
            )
    return SmartsReaction(lhs, rhs, text)


def write_reaction(rxn: SmartsReaction) -> str:
    return write_pattern(rxn.lhs) + ">>" + write_pattern(rxn.rhs)


class Registry:
    """Ordered template registry; ids are 1-based line numbers."""

    def __init__(self, templates: list[SmartsReaction]):
        self.templates = {i + 1: t for i, t in enumerate(templates)}

    def __len__(self) -> int:
        return len(self.templates)

    def ids(self) -> list[int]:
        return sorted(self.templates)

    def get(self, template_id: int) -> SmartsReaction:
        try:
            return self.templates[template_id]
        except KeyError:
            raise ReactionError(f"no template with id {template_id}") from None

    def direction(self, template_id: int) -> str:
        self.get(template_id)
        half = (len(self.templates) + 1) // 2
        return "constructive" if template_id <= half else "destructive"

    def inverse_of(self, template_id: int) -> int:
        self.get(template_id)
        half = len(self.templates) // 2
        if template_id <= half:
            return template_id + half
        return template_id - half


def builtin_registry() -> Registry:
    return Registry([parse_reaction(t) for t in BUILTIN_TEMPLATES])


def load_registry(path: str) -> Registry:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh]
    while lines and not lines[-1]:
        lines.pop()
    templates = []
    for lineno, line in enumerate(lines, start=1):
        if not line:
            raise ReactionError(f"blank template line {lineno} in {path}")
        templates.append(parse_reaction(line))
    return Registry(templates)


def save_registry(registry: Registry, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for template_id in registry.ids():
            fh.write(registry.get(template_id).raw_text + "\n")


# ---------------------------------------------------------------------------
# Application


@dataclass(frozen=True)
class Application:
    """One deduplicated outcome: kept product fragments plus whatever was
    severed (the side channel for reconstruction tests)."""

    products: tuple[Molecule, ...]
    discarded: tuple[Molecule, ...]
    smiles: str

    @property
    def discarded_smiles(self) -> str:
        return ".".join(sorted(write_canonical(m) for m in self.discarded))


def _embedding_role(rxn: SmartsReaction, emb: Embedding):
    """Rewrite-equivalence key: two embeddings with equal keys produce the
    same outcome, because the key records every quantity the rewrite and the
    postcondition read, attached to the molecule atoms it lands on — the
    expression matched at each target and whether its atom is kept (with
    which postcondition expression), severed, or unmapped; for each matched
    bond its query kind plus the kind of its postcondition counterpart (or
    its deletion); and where each bond-forming edge lands.  This is finer
    than the matcher's structural dedup, which ignores bond asymmetry: in a
    path template whose two end atoms carry equal expressions but whose edges
    differ in kind, reversing the path changes which product bond each edge
    expression constrains, and only one orientation may survive.
    """
    lhs, rhs = rxn.lhs, rxn.rhs
    assignment = emb.assignment
    atoms = []
    for p, target in enumerate(assignment):
        expr = lhs.atoms[p]
        if expr.map is None:
            role: tuple = ("unmapped",)
        elif expr.map in rhs.maps:
            role = ("kept", rhs.atoms[rhs.maps[expr.map]].structural_key)
        else:
            role = ("severed",)
        atoms.append((expr.structural_key, role, target))
    bonds = []
    for i, j, bexpr in lhs.bonds:
        mi, mj = lhs.atoms[i].map, lhs.atoms[j].map
        rhs_kind = "off"
        if mi in rhs.maps and mj in rhs.maps:
            rexpr = rhs.bond_expr_between(rhs.maps[mi], rhs.maps[mj])
            rhs_kind = rexpr.kind if rexpr is not None else "deleted"
        bonds.append((bexpr.kind, rhs_kind,
                      frozenset((assignment[i], assignment[j]))))
    formed = []
    for ri, rj, rexpr in rhs.bonds:
        li = lhs.maps[rhs.atoms[ri].map]
        lj = lhs.maps[rhs.atoms[rj].map]
        if lhs.bond_expr_between(li, lj) is None:
            formed.append((rexpr.kind,
                           frozenset((assignment[li], assignment[lj]))))
    return (frozenset(atoms), frozenset(bonds), frozenset(formed))


def apply(
    rxn: SmartsReaction,
    reactants: list[Molecule],
    mode: str = "intra",
) -> list[Application]:
    """All distinct products of the template on the reactants.

    Returns an empty list when the template does not apply.  Outcomes are
    deduplicated by the canonical SMILES of the kept fragments and sorted by
    that key.
    """
    outcomes: dict[str, Application] = {}
    kek_lists = [kekulizations(m) for m in reactants]
    cache: dict = {}
    seen_roles: set = set()
    for emb in match(rxn.lhs, reactants, mode, dedup_symmetric=False):
        role = _embedding_role(rxn, emb)
        if role in seen_roles:
            continue
        seen_roles.add(role)
        involved = sorted({m for m, _a in emb.assignment})
        combos = itertools.product(*(kek_lists[i] for i in involved))
        for combo in itertools.islice(combos, 256):
            result = _rewrite(rxn, dict(zip(involved, combo)), emb, cache)
            if result is None:
                continue
            kept, discarded, key = result
            if key not in outcomes:
                outcomes[key] = Application(kept, discarded, key)
    return [outcomes[k] for k in sorted(outcomes)]


def apply_smiles(rxn: SmartsReaction, reactants: list[Molecule],
                 mode: str = "intra") -> list[str]:
    return [a.smiles for a in apply(rxn, reactants, mode)]


_RewriteResult = tuple[tuple[Molecule, ...], tuple[Molecule, ...], str]


def _rewrite(
    rxn: SmartsReaction,
    kekulized: dict[int, Molecule],
    emb: Embedding,
    cache: dict,
) -> _RewriteResult | None:
    mol_indices = sorted({m for m, _a in emb.assignment})
    offset: dict[int, int] = {}
    atom_specs: list[list] = []  # [element, charge, implicit_h, isotope]
    bonds: dict[tuple[int, int], int] = {}
    for m_idx in mol_indices:
        kek = kekulized[m_idx]
        offset[m_idx] = len(atom_specs)
        for atom in kek.atoms:
            atom_specs.append([atom.element, atom.charge, atom.implicit_h,
                               atom.isotope])
        for bond in kek.bonds:
            a1 = offset[m_idx] + bond.a1
            a2 = offset[m_idx] + bond.a2
            bonds[(min(a1, a2), max(a1, a2))] = bond.order

    def combined(pat_idx: int) -> int:
        m_idx, a_idx = emb.assignment[pat_idx]
        return offset[m_idx] + a_idx

    lhs_of_map = {m: combined(i) for m, i in rxn.lhs.maps.items()}
    severed = {lhs_of_map[m] for m in rxn.lhs.maps if m not in rxn.rhs.maps}
    survivors_of_map = {m: a for m, a in lhs_of_map.items() if m in rxn.rhs.maps}

    touched: set[int] = set()

    def pair(a: int, b: int) -> tuple[int, int]:
        return (min(a, b), max(a, b))

    explicit_order = {"single": SINGLE, "double": DOUBLE, "triple": TRIPLE}

    # Step 3: RHS edges.
    rhs_pairs: set[frozenset[int]] = set()
    for p, q, rexpr in rxn.rhs.bonds:
        mp = rxn.rhs.atoms[p].map
        mq = rxn.rhs.atoms[q].map
        rhs_pairs.add(frozenset((mp, mq)))
        a, b = survivors_of_map[mp], survivors_of_map[mq]
        key = pair(a, b)
        existing = bonds.get(key)
        lexpr = rxn.lhs.bond_expr_between(rxn.lhs.maps[mp], rxn.lhs.maps[mq])
        if existing is None:
            bonds[key] = explicit_order.get(rexpr.kind, SINGLE)
            touched.update(key)
        elif lexpr is None:
            # Bond-forming edge, but the matched atoms are already bonded
            # (e.g. a ring-closure chain wrapped around an existing ring).
            return None
        elif rexpr.kind in explicit_order:
            order = explicit_order[rexpr.kind]
            if existing != order:
                bonds[key] = order
                touched.update(key)
        elif rexpr.kind == "unspecified":
            # An explicit LHS bond rewritten as unspecified means "back to
            # single"; a query LHS bond (any/unspecified) carries its order.
            if lexpr.kind in explicit_order and existing != SINGLE:
                bonds[key] = SINGLE
                touched.update(key)
        # rexpr "any": keep the reactant order.

    # Step 4: LHS edges between surviving maps with no RHS counterpart.
    for p, q, _lexpr in rxn.lhs.bonds:
        mp = rxn.lhs.atoms[p].map
        mq = rxn.lhs.atoms[q].map
        if mp is None or mq is None:
            continue
        if mp not in survivors_of_map or mq not in survivors_of_map:
            continue
        if frozenset((mp, mq)) in rhs_pairs:
            continue
        key = pair(survivors_of_map[mp], survivors_of_map[mq])
        if key in bonds:
            del bonds[key]
            touched.update(key)

    # Step 2 (deferred so severed bonds are final): cut severed atoms away
    # from the mapped atoms they were bonded to.  Spectator attachments stay
    # with the severed atom so the leaving group survives intact; if a
    # severed atom still reaches the kept region afterwards (ring cases),
    # deletion is impossible and the embedding is rejected.
    surviving_atoms = set(survivors_of_map.values())
    for key in list(bonds):
        a, b = key
        if (a in severed and b in surviving_atoms) or (
            b in severed and a in surviving_atoms
        ):
            del bonds[key]
            touched.update(key)
    if severed:
        region: set[int] = set(surviving_atoms)
        stack = list(surviving_atoms)
        adj_now: dict[int, list[int]] = {}
        for a, b in bonds:
            adj_now.setdefault(a, []).append(b)
            adj_now.setdefault(b, []).append(a)
        while stack:
            x = stack.pop()
            for y in adj_now.get(x, ()):
                if y not in region:
                    region.add(y)
                    stack.append(y)
        if region & severed:
            return None

    # Step 5: recompute implicit H on touched atoms.
    order_sum = [0] * len(atom_specs)
    for (a, b), order in bonds.items():
        order_sum[a] += order
        order_sum[b] += order
    for a in touched:
        element, charge, _h, _iso = atom_specs[a]
        valences = allowed_valences(element, charge)
        fit = next((v for v in valences if v >= order_sum[a]), None)
        if fit is None:
            return None
        atom_specs[a][2] = fit - order_sum[a]

    # The remaining steps depend only on the edited graph and the survivor
    # mapping.  Symmetric embeddings and kekulization combinations hit the
    # same state over and over, so the expensive tail (fragment splitting,
    # aromaticity perception, postcondition) is memoized per apply() call.
    state = (
        tuple(tuple(s) for s in atom_specs),
        tuple(sorted(bonds.items())),
        tuple(sorted(survivors_of_map.items())),
    )
    if state in cache:
        return cache[state]
    result = _finish_rewrite(rxn, atom_specs, bonds, survivors_of_map)
    cache[state] = result
    return result


def _finish_rewrite(
    rxn: SmartsReaction,
    atom_specs: list[list],
    bonds: dict[tuple[int, int], int],
    survivors_of_map: dict[int, int],
) -> _RewriteResult | None:
    # Step 7: split into components; keep those holding an RHS-mapped atom.
    n = len(atom_specs)
    adj: list[list[int]] = [[] for _ in range(n)]
    for a, b in bonds:
        adj[a].append(b)
        adj[b].append(a)
    comp_id = [-1] * n
    comp_count = 0
    for start in range(n):
        if comp_id[start] >= 0:
            continue
        stack = [start]
        comp_id[start] = comp_count
        while stack:
            x = stack.pop()
            for y in adj[x]:
                if comp_id[y] < 0:
                    comp_id[y] = comp_count
                    stack.append(y)
        comp_count += 1

    mapped_comps = {comp_id[a] for a in survivors_of_map.values()}

    kept: list[Molecule] = []
    discarded: list[Molecule] = []
    local_of: dict[int, tuple[Molecule, int]] = {}
    for c in range(comp_count):
        members = [a for a in range(n) if comp_id[a] == c]
        index_of = {a: i for i, a in enumerate(members)}
        specs = [tuple(atom_specs[a]) for a in members]
        comp_bonds = [
            (index_of[a], index_of[b], order)
            for (a, b), order in sorted(bonds.items())
            if comp_id[a] == c
        ]
        fragment = Molecule.from_kekulized(specs, comp_bonds)
        (kept if c in mapped_comps else discarded).append(fragment)
        for a in members:
            local_of[a] = (fragment, index_of[a])

    # Step 6 (after re-perception): the RHS is a postcondition.  Every RHS
    # atom and bond expression must hold on the perceived product.
    for expr in rxn.rhs.atoms:
        fragment, local = local_of[survivors_of_map[expr.map]]
        if not expr.matches(fragment.atoms[local]):
            return None
    for p, q, rexpr in rxn.rhs.bonds:
        a = survivors_of_map[rxn.rhs.atoms[p].map]
        b = survivors_of_map[rxn.rhs.atoms[q].map]
        fragment, la = local_of[a]
        lb = local_of[b][1]
        if not rexpr.matches(fragment.bond_between(la, lb).order):
            return None
    key = ".".join(sorted(write_canonical(m) for m in kept))
    return tuple(kept), tuple(discarded), key
