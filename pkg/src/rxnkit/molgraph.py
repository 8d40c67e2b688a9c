"""Molecular graphs and the SMILES reader/writer.

The module covers the subset of SMILES the toolchain needs: organic-subset
bare atoms, bracket atoms with isotope/charge/H-count, bond symbols ``-``,
``=``, ``#``, aromatic lowercase atoms, ring closures (``1``..``9`` and
``%nn``) and dot-separated fragments.  Stereochemistry is out of scope and
rejected as a syntax error.

Aromaticity is perceived, never trusted from the input: the reader first
kekulizes whatever lowercase annotation it is given, then re-perceives
aromatic rings (Hueckel 4n+2 over SSSR ring systems).  ``write_canonical``
therefore maps every spelling of a molecule to one string.
"""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, replace

from .elements import (
    AROMATIC_SYMBOLS,
    LONE_PAIR_DONORS,
    NUMBERS,
    ORGANIC_SUBSET,
    SP2_CAPABLE,
    SYMBOLS,
    allowed_valences,
)
from .errors import KekulizeError, SmilesError, ValenceError

SINGLE = 1
DOUBLE = 2
TRIPLE = 3
AROMATIC = 4

_BOND_CHARS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE}
_ORDER_CHARS = {SINGLE: "-", DOUBLE: "=", TRIPLE: "#"}


@dataclass(frozen=True)
class Atom:
    """One heavy atom.  Hydrogens are implicit counts, never graph nodes."""

    element: int
    index: int
    aromatic: bool = False
    charge: int = 0
    implicit_h: int = 0
    isotope: int | None = None


@dataclass(frozen=True)
class Bond:
    a1: int
    a2: int
    order: int

    def other(self, idx: int) -> int:
        if idx == self.a1:
            return self.a2
        if idx == self.a2:
            return self.a1
        raise ValueError(f"atom {idx} not on bond {self.a1}-{self.a2}")


@dataclass(frozen=True)
class RingInfo:
    """SSSR output: ring atom cycles plus flat membership sets."""

    rings: tuple[tuple[int, ...], ...]
    rings_bonds: tuple[tuple[int, ...], ...]
    ring_atoms: frozenset[int]
    ring_bonds: frozenset[int]

    def is_ring_atom(self, idx: int) -> bool:
        return idx in self.ring_atoms

    def is_ring_bond(self, bond_idx: int) -> bool:
        return bond_idx in self.ring_bonds


class Molecule:
    """Immutable molecular graph.

    ``atoms[i].index == i`` always holds.  ``ring_info`` is the SSSR of the
    graph; it is computed once and shared by perception, matching and the
    writer.  Instances are only built through :func:`parse_smiles`,
    :meth:`from_kekulized` or :func:`kekulize`, which guarantee consistent
    hydrogen counts and aromatic flags.
    """

    __slots__ = ("atoms", "bonds", "_adj", "_ring", "_canon")

    def __init__(self, atoms: tuple[Atom, ...], bonds: tuple[Bond, ...],
                 ring_info: RingInfo | None = None):
        self.atoms = atoms
        self.bonds = bonds
        adj: list[list[tuple[int, int]]] = [[] for _ in atoms]
        for b_idx, bond in enumerate(bonds):
            adj[bond.a1].append((bond.a2, b_idx))
            adj[bond.a2].append((bond.a1, b_idx))
        self._adj = tuple(tuple(nbrs) for nbrs in adj)
        self._ring = ring_info
        self._canon: str | None = None

    @classmethod
    def from_kekulized(
        cls,
        atom_specs: list[tuple[int, int, int, int | None]],
        bond_specs: list[tuple[int, int, int]],
    ) -> "Molecule":
        """Build a molecule from kekulized parts and perceive aromaticity.

        ``atom_specs`` rows are (element, charge, implicit_h, isotope) and
        ``bond_specs`` rows are (a1, a2, order) with order in {1, 2, 3}.
        """
        n = len(atom_specs)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for b_idx, (a1, a2, _order) in enumerate(bond_specs):
            adj[a1].append((a2, b_idx))
            adj[a2].append((a1, b_idx))
        candidates = _all_shortest_cycles(bond_specs, adj)
        ring = _sssr(n, bond_specs, adj, candidates)
        arom_atoms, arom_bonds = _perceive_aromaticity(
            atom_specs, bond_specs, adj, candidates
        )
        atoms = tuple(
            Atom(element=e, index=i, aromatic=(i in arom_atoms), charge=c,
                 implicit_h=h, isotope=iso)
            for i, (e, c, h, iso) in enumerate(atom_specs)
        )
        bonds = tuple(
            Bond(a1, a2, AROMATIC if b_idx in arom_bonds else order)
            for b_idx, (a1, a2, order) in enumerate(bond_specs)
        )
        return cls(atoms, bonds, ring_info=ring)

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def ring_info(self) -> RingInfo:
        if self._ring is None:
            bond_specs = [(b.a1, b.a2, b.order) for b in self.bonds]
            adj = [[(j, b_idx) for j, b_idx in nbrs] for nbrs in self._adj]
            self._ring = _sssr(len(self.atoms), bond_specs, adj)
        return self._ring

    def neighbors(self, idx: int) -> tuple[tuple[int, int], ...]:
        """(neighbor atom index, bond index) pairs for one atom."""
        return self._adj[idx]

    def degree(self, idx: int) -> int:
        return len(self._adj[idx])

    def bond_between(self, i: int, j: int) -> Bond | None:
        for nbr, b_idx in self._adj[i]:
            if nbr == j:
                return self.bonds[b_idx]
        return None

    def components(self) -> tuple[tuple[int, ...], ...]:
        seen: set[int] = set()
        comps: list[tuple[int, ...]] = []
        for start in range(len(self.atoms)):
            if start in seen:
                continue
            stack, comp = [start], []
            seen.add(start)
            while stack:
                a = stack.pop()
                comp.append(a)
                for nbr, _ in self._adj[a]:
                    if nbr not in seen:
                        seen.add(nbr)
                        stack.append(nbr)
            comps.append(tuple(sorted(comp)))
        return tuple(comps)


# ---------------------------------------------------------------------------
# SSSR


def _components(n: int, adj: list[list[tuple[int, int]]]) -> int:
    seen = [False] * n
    count = 0
    for start in range(n):
        if seen[start]:
            continue
        count += 1
        stack = [start]
        seen[start] = True
        while stack:
            a = stack.pop()
            for nbr, _ in adj[a]:
                if not seen[nbr]:
                    seen[nbr] = True
                    stack.append(nbr)
    return count


def _bridge_bonds(
    n: int,
    bond_specs: list[tuple[int, int, int]],
    adj: list[list[tuple[int, int]]],
) -> set[int]:
    """Bond indices on no cycle at all, found with one DFS (Tarjan lowlinks)."""
    disc = [-1] * n
    low = [0] * n
    bridges: set[int] = set()
    timer = 0
    for root in range(n):
        if disc[root] >= 0:
            continue
        disc[root] = low[root] = timer
        timer += 1
        stack: list[list] = [[root, -1, 0]]
        while stack:
            frame = stack[-1]
            x, pb, pos = frame
            if pos < len(adj[x]):
                frame[2] = pos + 1
                nbr, b_idx = adj[x][pos]
                if b_idx == pb:
                    continue
                if disc[nbr] >= 0:
                    if disc[nbr] < low[x]:
                        low[x] = disc[nbr]
                else:
                    disc[nbr] = low[nbr] = timer
                    timer += 1
                    stack.append([nbr, b_idx, 0])
            else:
                stack.pop()
                if stack:
                    px = stack[-1][0]
                    if low[x] < low[px]:
                        low[px] = low[x]
                    if low[x] > disc[px]:
                        bridges.add(pb)
    return bridges


def _all_shortest_cycles(
    bond_specs: list[tuple[int, int, int]],
    adj: list[list[tuple[int, int]]],
) -> dict[int, tuple[int, ...]]:
    """Every minimum-length cycle through each bond, keyed by bond mask.

    Keeping all tied cycles (instead of one BFS representative per bond)
    makes downstream aromaticity perception independent of atom numbering:
    a tie between two rings must never be broken by input order.
    """
    out: dict[int, tuple[int, ...]] = {}
    bridges = _bridge_bonds(len(adj), bond_specs, adj)
    for b_idx, (u, v, _order) in enumerate(bond_specs):
        if b_idx in bridges:
            continue
        dist = {u: 0}
        parents: dict[int, list[int]] = {u: []}
        frontier = [u]
        while frontier and v not in dist:
            nxt: list[int] = []
            for x in frontier:
                for nbr, bi in adj[x]:
                    if bi == b_idx:
                        continue
                    if nbr not in dist:
                        dist[nbr] = dist[x] + 1
                        parents[nbr] = [x]
                        nxt.append(nbr)
                    elif dist[nbr] == dist[x] + 1:
                        parents[nbr].append(x)
            frontier = nxt
        if v not in dist:
            continue
        stack: list[tuple[int, tuple[int, ...]]] = [(v, (v,))]
        paths: list[tuple[int, ...]] = []
        while stack and len(paths) < 512:
            node, path = stack.pop()
            if node == u:
                paths.append(path)
                continue
            for p in parents[node]:
                stack.append((p, path + (p,)))
        for path in paths:
            cycle = _normalized_cycle(path)
            out.setdefault(_cycle_mask(cycle, adj), cycle)
    return out


def _cycle_mask(atoms: tuple[int, ...], adj: list[list[tuple[int, int]]]) -> int:
    mask = 0
    for pos, a in enumerate(atoms):
        b = atoms[(pos + 1) % len(atoms)]
        for nbr, b_idx in adj[a]:
            if nbr == b:
                mask |= 1 << b_idx
                break
    return mask


def _normalized_cycle(atoms: tuple[int, ...]) -> tuple[int, ...]:
    # Rotate the smallest atom to the front, pick the lexicographically
    # smaller direction, so equal cycles compare equal.
    k = atoms.index(min(atoms))
    fwd = atoms[k:] + atoms[:k]
    rev = (fwd[0],) + tuple(reversed(fwd[1:]))
    return min(fwd, rev)


def _bounded_simple_cycles(
    n: int, adj: list[list[tuple[int, int]]], max_len: int
) -> list[tuple[int, ...]]:
    """All simple cycles up to max_len; fallback when short cycles per bond
    do not span the cycle space."""
    cycles: set[tuple[int, ...]] = set()

    def extend(path: list[int], on_path: set[int]) -> None:
        if len(path) > max_len:
            return
        head = path[-1]
        root = path[0]
        for nbr, _ in adj[head]:
            if nbr == root and len(path) >= 3:
                cycles.add(_normalized_cycle(tuple(path)))
            elif nbr > root and nbr not in on_path:
                path.append(nbr)
                on_path.add(nbr)
                extend(path, on_path)
                on_path.discard(nbr)
                path.pop()

    for root in range(n):
        extend([root], {root})
    return sorted(cycles, key=lambda c: (len(c), c))


def _sssr(
    n: int,
    bond_specs: list[tuple[int, int, int]],
    adj: list[list[tuple[int, int]]],
    candidates: dict[int, tuple[int, ...]] | None = None,
) -> RingInfo:
    target = len(bond_specs) - n + _components(n, adj)
    if target <= 0:
        return RingInfo((), (), frozenset(), frozenset())

    if candidates is None:
        candidates = _all_shortest_cycles(bond_specs, adj)

    ordered = sorted(candidates.items(), key=lambda kv: (len(kv[1]), kv[1]))
    basis: list[int] = []
    chosen: list[tuple[int, tuple[int, ...]]] = []

    def try_add(mask: int, cycle: tuple[int, ...]) -> None:
        reduced = mask
        for vec in basis:
            reduced = min(reduced, reduced ^ vec)
        if reduced:
            basis.append(reduced)
            basis.sort(reverse=True)
            chosen.append((mask, cycle))

    for mask, cycle in ordered:
        if len(chosen) == target:
            break
        try_add(mask, cycle)

    if len(chosen) < target:
        for cycle in _bounded_simple_cycles(n, adj, max_len=min(n, 16)):
            if len(chosen) == target:
                break
            try_add(_cycle_mask(cycle, adj), cycle)
    if len(chosen) < target:
        raise RuntimeError("SSSR search failed to span the cycle space")

    chosen.sort(key=lambda mc: (len(mc[1]), mc[1]))
    rings = tuple(cycle for _, cycle in chosen)
    rings_bonds = tuple(
        tuple(i for i in range(len(bond_specs)) if mask >> i & 1)
        for mask, _ in chosen
    )
    ring_atoms = frozenset(a for ring in rings for a in ring)
    ring_bonds = frozenset(i for bonds in rings_bonds for i in bonds)
    return RingInfo(rings, rings_bonds, ring_atoms, ring_bonds)


# ---------------------------------------------------------------------------
# Aromaticity perception (on kekulized bond orders)


def _perceive_aromaticity(
    atom_specs: list[tuple[int, int, int, int | None]],
    bond_specs: list[tuple[int, int, int]],
    adj: list[list[tuple[int, int]]],
    candidates: dict[int, tuple[int, ...]],
) -> tuple[set[int], set[int]]:
    """Hueckel 4n+2 over minimal rings and connected fused unions of them.

    ``candidates`` holds every minimum-length cycle through each bond, so
    tied ring choices are all examined and the result cannot depend on atom
    numbering.  Returns (aromatic atom set, aromatic bond index set).
    Electron counting per atom, relative to a candidate ring union U: an
    in-U double bond gives 1, an exocyclic double gives 0, a lone-pair
    heteroatom without a double gives 2.  Carbon without a double bond, two
    doubles, a triple, or sigma degree above 3 disqualify the union.

    Counting is existential over alternating reassignments of the ring
    double bonds: a union is aromatic when ANY valence-preserving placement
    of those doubles reaches 4n+2.  Ring doubles in a fused system can sit
    on a shared bond in one assignment and off it in another, which changes
    a sub-ring's count; without the existential rule perception would depend
    on which assignment the parser or rewriter happened to produce.
    """
    rings = sorted(candidates.items(), key=lambda kv: (len(kv[1]), kv[1]))
    ring_cycles = [cycle for _mask, cycle in rings]
    ring_bond_lists = [
        [i for i in range(len(bond_specs)) if mask >> i & 1] for mask, _c in rings
    ]
    n = len(atom_specs)
    double_partner = [-1] * n
    double_count = [0] * n
    has_triple = [False] * n
    for a1, a2, order in bond_specs:
        if order == DOUBLE:
            double_partner[a1] = a2
            double_partner[a2] = a1
            double_count[a1] += 1
            double_count[a2] += 1
        elif order == TRIPLE:
            has_triple[a1] = True
            has_triple[a2] = True

    # Flip space: ring doubles between atoms that each carry exactly one
    # double can migrate along alternating ring paths.  Enumerate the
    # perfect matchings of those atoms per connected flip component; each
    # matching is one valence-preserving placement.
    ring_bond_all: set[int] = set()
    for bl in ring_bond_lists:
        ring_bond_all.update(bl)
    flip_atoms: set[int] = set()
    for b_idx in ring_bond_all:
        a1, a2, order = bond_specs[b_idx]
        if order == DOUBLE and double_count[a1] == 1 and double_count[a2] == 1:
            flip_atoms.add(a1)
            flip_atoms.add(a2)
    flip_adj: dict[int, list[tuple[int, int]]] = {a: [] for a in flip_atoms}
    for b_idx in sorted(ring_bond_all):
        a1, a2, order = bond_specs[b_idx]
        if order in (SINGLE, DOUBLE) and a1 in flip_atoms and a2 in flip_atoms:
            flip_adj[a1].append((a2, b_idx))
            flip_adj[a2].append((a1, b_idx))

    comp_of_atom: dict[int, int] = {}
    comp_partner_maps: list[list[dict[int, int]]] = []
    for start in sorted(flip_atoms):
        if start in comp_of_atom:
            continue
        cid = len(comp_partner_maps)
        comp = []
        stack = [start]
        comp_of_atom[start] = cid
        while stack:
            x = stack.pop()
            comp.append(x)
            for y, _b in flip_adj[x]:
                if y not in comp_of_atom:
                    comp_of_atom[y] = cid
                    stack.append(y)
        partner_maps = []
        for doubles in _kekule_assign_all(frozenset(comp), flip_adj, limit=256):
            partner: dict[int, int] = {}
            for b in doubles:
                a1, a2, _order = bond_specs[b]
                partner[a1] = a2
                partner[a2] = a1
            partner_maps.append(partner)
        comp_partner_maps.append(partner_maps)

    def atom_ok(i: int) -> bool:
        element, _charge, implicit_h, _iso = atom_specs[i]
        if element not in SP2_CAPABLE:
            return False
        if has_triple[i] or double_count[i] > 1:
            return False
        if len(adj[i]) + implicit_h > 3:
            return False
        if double_count[i] == 0 and element not in LONE_PAIR_DONORS:
            return False
        return True

    ring_ok = [all(atom_ok(a) for a in cycle) for cycle in ring_cycles]

    # Fused systems: rings sharing at least one bond.
    n_rings = len(ring_cycles)
    ring_bond_sets = [set(bs) for bs in ring_bond_lists]
    fused: list[list[int]] = [[] for _ in range(n_rings)]
    for r in range(n_rings):
        for s in range(r + 1, n_rings):
            if ring_bond_sets[r] & ring_bond_sets[s]:
                fused[r].append(s)
                fused[s].append(r)

    systems: list[list[int]] = []
    seen_r: set[int] = set()
    for r in range(n_rings):
        if r in seen_r or not ring_ok[r]:
            continue
        stack, system = [r], []
        seen_r.add(r)
        while stack:
            x = stack.pop()
            system.append(x)
            for y in fused[x]:
                if y not in seen_r and ring_ok[y]:
                    seen_r.add(y)
                    stack.append(y)
        systems.append(sorted(system))

    arom_atoms: set[int] = set()
    arom_bonds: set[int] = set()

    for system in systems:
        k = len(system)
        # Subsets are cheap for chemistry-sized systems; guard anyway.
        if k > 12:
            subset_sizes = [1, k]
        else:
            subset_sizes = list(range(1, k + 1))
        from itertools import combinations

        for size in subset_sizes:
            for combo in combinations(system, size):
                if size > 1 and not _fused_connected(combo, fused):
                    continue
                atoms_u: set[int] = set()
                for r in combo:
                    atoms_u.update(ring_cycles[r])
                base_pi = 0
                for a in atoms_u:
                    if a in comp_of_atom:
                        continue
                    if double_count[a] == 1:
                        base_pi += 1 if double_partner[a] in atoms_u else 0
                    else:
                        base_pi += 2
                comps_here = sorted({comp_of_atom[a] for a in atoms_u
                                     if a in comp_of_atom})
                choices = itertools.product(
                    *(comp_partner_maps[c] for c in comps_here)
                )
                for choice in itertools.islice(choices, 1024):
                    pi = base_pi
                    for partner in choice:
                        for a, p in partner.items():
                            if a in atoms_u:
                                pi += 1 if p in atoms_u else 0
                    if pi >= 2 and pi % 4 == 2:
                        arom_atoms.update(atoms_u)
                        for r in combo:
                            arom_bonds.update(ring_bond_lists[r])
                        break
    return arom_atoms, arom_bonds


def _fused_connected(combo: tuple[int, ...], fused: list[list[int]]) -> bool:
    members = set(combo)
    stack = [combo[0]]
    seen = {combo[0]}
    while stack:
        x = stack.pop()
        for y in fused[x]:
            if y in members and y not in seen:
                seen.add(y)
                stack.append(y)
    return len(seen) == len(members)


# ---------------------------------------------------------------------------
# Kekulization (perfect matching on atoms that need one double bond)


def _kekule_problem(
    mol: Molecule,
) -> tuple[dict[int, list[tuple[int, int]]], frozenset[int]] | None:
    """Candidate adjacency over aromatic bonds plus the set of atoms that
    must take exactly one double.  None when nothing is aromatic."""
    if not any(b.order == AROMATIC for b in mol.bonds):
        return None

    cand_adj: dict[int, list[tuple[int, int]]] = {i: [] for i in range(len(mol.atoms))}
    sigma = [0] * len(mol.atoms)
    for i, atom in enumerate(mol.atoms):
        for nbr, b_idx in mol.neighbors(i):
            order = mol.bonds[b_idx].order
            if order == AROMATIC:
                sigma[i] += 1
                cand_adj[i].append((nbr, b_idx))
            else:
                sigma[i] += order

    needy: set[int] = set()
    for i, atom in enumerate(mol.atoms):
        if not cand_adj[i]:
            continue
        valences = allowed_valences(atom.element, atom.charge)
        if not valences:
            raise KekulizeError(
                f"no valence rules for element {SYMBOLS.get(atom.element, atom.element)}"
                " in an aromatic ring"
            )
        need = None
        for v in valences:
            d = v - sigma[i] - atom.implicit_h
            if d in (0, 1):
                need = d
                break
        if need is None:
            raise KekulizeError(
                f"atom {i} cannot take part in an alternating bond assignment"
            )
        if need:
            needy.add(i)
    return cand_adj, frozenset(needy)


def _kekule_assign_all(
    needy: frozenset[int],
    cand_adj: dict[int, list[tuple[int, int]]],
    limit: int,
) -> list[frozenset[int]]:
    """All perfect matchings of the needy atoms over candidate bonds, as
    double-bond index sets, in a deterministic order (at most ``limit``)."""
    out: list[frozenset[int]] = []
    chosen: set[int] = set()

    def rec(remaining: frozenset[int]) -> None:
        if len(out) >= limit:
            return
        if not remaining:
            out.append(frozenset(chosen))
            return
        # Most-constrained atom first keeps the backtracking shallow; the
        # index tiebreak keeps the enumeration order reproducible.
        pivot = min(
            remaining,
            key=lambda a: (sum(1 for n, _ in cand_adj[a] if n in remaining), a),
        )
        for nbr, b_idx in cand_adj[pivot]:
            if nbr not in remaining:
                continue
            chosen.add(b_idx)
            rec(remaining - {pivot, nbr})
            chosen.discard(b_idx)

    rec(needy)
    return out


def _with_assignment(mol: Molecule, double_bonds: frozenset[int]) -> Molecule:
    new_bonds = tuple(
        replace(b, order=DOUBLE if i in double_bonds else SINGLE)
        if b.order == AROMATIC
        else b
        for i, b in enumerate(mol.bonds)
    )
    return Molecule(mol.atoms, new_bonds, ring_info=mol._ring)


def kekulize(mol: Molecule) -> Molecule:
    """Replace aromatic bond orders with an alternating single/double
    assignment.  Atom aromatic flags are kept as metadata."""
    problem = _kekule_problem(mol)
    if problem is None:
        return mol
    cand_adj, needy = problem
    assignments = _kekule_assign_all(needy, cand_adj, limit=1)
    if not assignments:
        raise KekulizeError("aromatic system cannot be kekulized")
    return _with_assignment(mol, assignments[0])


def kekulizations(mol: Molecule, limit: int = 256) -> tuple[Molecule, ...]:
    """Every alternating single/double assignment of the aromatic systems.

    A molecule without aromatic bonds is returned as the only entry.  The
    rewrite machinery needs all assignments, not one: a bond created inside
    what becomes an aromatic ring may sit on a double in one assignment and
    on a single in another, and only the latter can be deleted back."""
    problem = _kekule_problem(mol)
    if problem is None:
        return (mol,)
    cand_adj, needy = problem
    assignments = _kekule_assign_all(needy, cand_adj, limit)
    if not assignments:
        raise KekulizeError("aromatic system cannot be kekulized")
    return tuple(_with_assignment(mol, a) for a in assignments)


# ---------------------------------------------------------------------------
# SMILES reader


class _RawAtom:
    __slots__ = ("element", "lower", "charge", "hcount", "isotope", "bracket", "offset")

    def __init__(self, element: int, lower: bool, charge: int,
                 hcount: int | None, isotope: int | None, bracket: bool, offset: int):
        self.element = element
        self.lower = lower
        self.charge = charge
        self.hcount = hcount
        self.isotope = isotope
        self.bracket = bracket
        self.offset = offset


def _parse_bracket(text: str, start: int) -> tuple[_RawAtom, int]:
    end = text.find("]", start)
    if end < 0:
        raise SmilesError("unterminated bracket atom", text, start)
    pos = start + 1

    isotope = None
    num_start = pos
    while pos < end and text[pos].isdigit():
        pos += 1
    if pos > num_start:
        isotope = int(text[num_start:pos])

    if pos >= end:
        raise SmilesError("bracket atom has no element symbol", text, pos)
    lower = False
    if text[pos] == "*":
        element = 0
        pos += 1
    else:
        sym = text[pos]
        if pos + 1 < end and text[pos + 1].islower() and (sym + text[pos + 1]) in NUMBERS:
            two = sym + text[pos + 1]
            if sym.isupper():
                sym = two
                pos += 2
            else:
                pos += 1
        else:
            pos += 1
        if sym.islower():
            if sym not in AROMATIC_SYMBOLS:
                raise SmilesError(f"element {sym!r} cannot be aromatic", text, start + 1)
            lower = True
            element = NUMBERS[sym.upper()]
        else:
            if sym not in NUMBERS:
                raise SmilesError(f"unknown element symbol {sym!r}", text, start + 1)
            element = NUMBERS[sym]

    hcount = None
    if pos < end and text[pos] == "H":
        pos += 1
        num_start = pos
        while pos < end and text[pos].isdigit():
            pos += 1
        hcount = int(text[num_start:pos]) if pos > num_start else 1

    charge = 0
    if pos < end and text[pos] in "+-":
        sign = 1 if text[pos] == "+" else -1
        first = text[pos]
        count = 0
        while pos < end and text[pos] == first:
            count += 1
            pos += 1
        num_start = pos
        while pos < end and text[pos].isdigit():
            pos += 1
        if pos > num_start:
            if count != 1:
                raise SmilesError("malformed charge", text, num_start)
            charge = sign * int(text[num_start:pos])
        else:
            charge = sign * count

    if pos < end and text[pos] == ":":
        raise SmilesError("atom maps are not allowed in molecule SMILES", text, pos)
    if pos != end:
        raise SmilesError(
            f"unexpected character {text[pos]!r} in bracket atom", text, pos
        )
    return _RawAtom(element, lower, charge, hcount, isotope, True, start), end + 1


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string.

    Raises :class:`SmilesError` (with byte offset) on syntax problems,
    :class:`ValenceError` on impossible hydrogen counts and
    :class:`KekulizeError` when an aromatic annotation cannot be kekulized.
    """
    if not text:
        raise SmilesError("empty SMILES", text, 0)

    atoms: list[_RawAtom] = []
    bond_syms: list[tuple[int, int, str, int]] = []
    ring_open: dict[int, tuple[int, str, int]] = {}
    branch_stack: list[tuple[int | None, int]] = []
    prev: int | None = None
    pending = ""
    pending_off = -1
    pos = 0

    def add_atom(raw: _RawAtom) -> None:
        nonlocal prev, pending
        idx = len(atoms)
        atoms.append(raw)
        if prev is not None:
            bond_syms.append((prev, idx, pending, raw.offset))
        elif pending:
            raise SmilesError("bond symbol without a preceding atom", text, pending_off)
        pending = ""
        prev = idx

    while pos < len(text):
        c = text[pos]
        if c == "[":
            raw, pos = _parse_bracket(text, pos)
            add_atom(raw)
        elif c == "*":
            add_atom(_RawAtom(0, False, 0, None, None, False, pos))
            pos += 1
        elif c.isalpha():
            sym = c
            if c.isupper() and pos + 1 < len(text) and (c + text[pos + 1]) in ORGANIC_SUBSET:
                sym = c + text[pos + 1]
            if sym.isupper() and sym not in ORGANIC_SUBSET:
                raise SmilesError(
                    f"element {sym!r} must be written in brackets", text, pos
                )
            if sym.islower() and sym not in AROMATIC_SYMBOLS:
                raise SmilesError(f"unexpected character {c!r}", text, pos)
            lower = sym.islower()
            add_atom(
                _RawAtom(NUMBERS[sym.upper() if lower else sym], lower,
                         0, None, None, False, pos)
            )
            pos += len(sym)
        elif c in _BOND_CHARS:
            if pending:
                raise SmilesError("two bond symbols in a row", text, pos)
            pending = c
            pending_off = pos
            pos += 1
        elif c == ":":
            raise SmilesError("':' bonds are not supported", text, pos)
        elif c.isdigit() or c == "%":
            if c == "%":
                if pos + 2 >= len(text) + 1 or not text[pos + 1 : pos + 3].isdigit():
                    raise SmilesError("'%' needs two digits", text, pos)
                num = int(text[pos + 1 : pos + 3])
                pos += 3
            else:
                num = int(c)
                pos += 1
            if prev is None:
                raise SmilesError("ring closure before any atom", text, pos - 1)
            if num in ring_open:
                other, sym_open, _off = ring_open.pop(num)
                if other == prev:
                    raise SmilesError("ring closure to the same atom", text, pos - 1)
                if pending and sym_open and pending != sym_open:
                    raise SmilesError("conflicting ring bond symbols", text, pos - 1)
                bond_syms.append((other, prev, pending or sym_open, pos - 1))
            else:
                ring_open[num] = (prev, pending, pos - 1)
            pending = ""
        elif c == "(":
            if prev is None:
                raise SmilesError("branch before any atom", text, pos)
            branch_stack.append((prev, len(atoms)))
            pos += 1
        elif c == ")":
            if not branch_stack:
                raise SmilesError("unmatched ')'", text, pos)
            if pending:
                raise SmilesError("dangling bond before ')'", text, pos)
            opened_prev, atoms_at_open = branch_stack.pop()
            if len(atoms) == atoms_at_open:
                raise SmilesError("empty branch", text, pos)
            prev = opened_prev
            pos += 1
        elif c == ".":
            if pending:
                raise SmilesError("bond symbol before '.'", text, pos)
            if branch_stack:
                raise SmilesError("'.' inside a branch", text, pos)
            prev = None
            pos += 1
        else:
            raise SmilesError(f"unexpected character {c!r}", text, pos)

    if branch_stack:
        raise SmilesError("unclosed '('", text, len(text))
    if ring_open:
        num, (_atom, _sym, off) = next(iter(sorted(ring_open.items())))
        raise SmilesError(f"unclosed ring bond {num}", text, off)
    if pending:
        raise SmilesError("dangling bond symbol", text, pending_off)

    return _finish_molecule(text, atoms, bond_syms)


def _finish_molecule(
    text: str,
    atoms: list[_RawAtom],
    bond_syms: list[tuple[int, int, str, int]],
) -> Molecule:
    n = len(atoms)
    seen_pairs: set[tuple[int, int]] = set()
    for a1, a2, _sym, off in bond_syms:
        pair = (min(a1, a2), max(a1, a2))
        if pair in seen_pairs:
            raise SmilesError("duplicate bond between two atoms", text, off)
        seen_pairs.add(pair)

    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for b_idx, (a1, a2, _sym, _off) in enumerate(bond_syms):
        adj[a1].append((a2, b_idx))
        adj[a2].append((a1, b_idx))

    # A bond can be aromatic only if it sits on a cycle; biphenyl-style
    # links between two lowercase atoms stay single.
    def on_cycle(b_idx: int) -> bool:
        a1, a2, _sym, _off = bond_syms[b_idx]
        seen = {a1}
        stack = [a1]
        while stack:
            x = stack.pop()
            for nbr, bi in adj[x]:
                if bi == b_idx or nbr in seen:
                    continue
                if nbr == a2:
                    return True
                seen.add(nbr)
                stack.append(nbr)
        return False

    candidate = [False] * len(bond_syms)
    for b_idx, (a1, a2, sym, _off) in enumerate(bond_syms):
        if sym == "" and atoms[a1].lower and atoms[a2].lower and on_cycle(b_idx):
            candidate[b_idx] = True

    cand_adj: dict[int, list[tuple[int, int]]] = {i: [] for i in range(n)}
    sigma = [0] * n
    for b_idx, (a1, a2, sym, _off) in enumerate(bond_syms):
        if candidate[b_idx]:
            sigma[a1] += 1
            sigma[a2] += 1
            cand_adj[a1].append((a2, b_idx))
            cand_adj[a2].append((a1, b_idx))
        else:
            order = _BOND_CHARS.get(sym, SINGLE)
            sigma[a1] += order
            sigma[a2] += order

    needy: set[int] = set()
    for i, raw in enumerate(atoms):
        if not raw.lower:
            continue
        if not cand_adj[i]:
            raise KekulizeError(
                f"aromatic atom at offset {raw.offset} is not in an aromatic ring"
            )
        valences = allowed_valences(raw.element, raw.charge)
        if not valences:
            raise KekulizeError(
                f"no valence rules for aromatic atom at offset {raw.offset}"
            )
        if raw.hcount is not None:
            need = None
            for v in valences:
                d = v - sigma[i] - raw.hcount
                if d in (0, 1):
                    need = d
                    break
            if need is None:
                raise KekulizeError(
                    f"aromatic atom at offset {raw.offset} cannot be kekulized"
                )
        else:
            fit = next((v for v in valences if v >= sigma[i]), None)
            if fit is None:
                raise ValenceError(
                    f"atom at offset {raw.offset} exceeds its allowed valence"
                )
            need = 1 if fit - sigma[i] >= 1 else 0
        if need:
            needy.add(i)

    assignments = _kekule_assign_all(frozenset(needy), cand_adj, limit=1)
    if not assignments:
        raise KekulizeError("aromatic system cannot be kekulized")
    double_bonds = assignments[0]

    bond_specs: list[tuple[int, int, int]] = []
    for b_idx, (a1, a2, sym, _off) in enumerate(bond_syms):
        if candidate[b_idx]:
            order = DOUBLE if b_idx in double_bonds else SINGLE
        else:
            order = _BOND_CHARS.get(sym, SINGLE)
        bond_specs.append((a1, a2, order))

    order_sum = [0] * n
    for a1, a2, order in bond_specs:
        order_sum[a1] += order
        order_sum[a2] += order

    atom_specs: list[tuple[int, int, int, int | None]] = []
    for i, raw in enumerate(atoms):
        valences = allowed_valences(raw.element, raw.charge)
        if raw.bracket:
            h = raw.hcount or 0
            if valences and (order_sum[i] + h) not in valences:
                raise ValenceError(
                    f"valence {order_sum[i] + h} not allowed for "
                    f"{SYMBOLS[raw.element]} (offset {raw.offset})"
                )
        else:
            if raw.element == 0:
                h = 0
            else:
                fit = next((v for v in valences if v >= order_sum[i]), None)
                if fit is None:
                    raise ValenceError(
                        f"valence {order_sum[i]} not allowed for "
                        f"{SYMBOLS[raw.element]} (offset {raw.offset})"
                    )
                h = fit - order_sum[i]
        atom_specs.append((raw.element, raw.charge, h, raw.isotope))

    return Molecule.from_kekulized(atom_specs, bond_specs)


# ---------------------------------------------------------------------------
# SMILES writer


def _writes_lowercase(mol: Molecule, idx: int) -> bool:
    if not mol.atoms[idx].aromatic:
        return False
    return any(mol.bonds[b_idx].order == AROMATIC for _, b_idx in mol.neighbors(idx))


def _inferred_h(mol: Molecule, idx: int) -> int | None:
    """H count a reader would infer for this atom written bare."""
    atom = mol.atoms[idx]
    valences = allowed_valences(atom.element, atom.charge)
    if not valences:
        return 0 if atom.element == 0 else None
    if _writes_lowercase(mol, idx):
        sigma = sum(
            1 if mol.bonds[b].order == AROMATIC else mol.bonds[b].order
            for _, b in mol.neighbors(idx)
        )
        fit = next((v for v in valences if v >= sigma), None)
        if fit is None:
            return None
        need = 1 if fit - sigma >= 1 else 0
        return fit - sigma - need
    total = sum(mol.bonds[b].order for _, b in mol.neighbors(idx))
    fit = next((v for v in valences if v >= total), None)
    if fit is None:
        return None
    return fit - total


def _atom_token(mol: Molecule, idx: int) -> str:
    atom = mol.atoms[idx]
    lower = _writes_lowercase(mol, idx)
    sym = SYMBOLS[atom.element]
    if lower:
        sym = sym.lower()

    bare_ok = (
        atom.isotope is None
        and atom.charge == 0
        and (
            atom.element == 0
            or (sym in AROMATIC_SYMBOLS if lower else sym in ORGANIC_SUBSET)
        )
        and _inferred_h(mol, idx) == atom.implicit_h
    )
    if bare_ok:
        return sym

    parts = ["["]
    if atom.isotope is not None:
        parts.append(str(atom.isotope))
    parts.append(sym)
    if atom.implicit_h == 1:
        parts.append("H")
    elif atom.implicit_h > 1:
        parts.append(f"H{atom.implicit_h}")
    if atom.charge == 1:
        parts.append("+")
    elif atom.charge == -1:
        parts.append("-")
    elif atom.charge > 1:
        parts.append(f"+{atom.charge}")
    elif atom.charge < -1:
        parts.append(f"-{-atom.charge}")
    parts.append("]")
    return "".join(parts)


def _bond_token(mol: Molecule, bond: Bond) -> str:
    if bond.order == AROMATIC:
        return ""
    if bond.order == SINGLE:
        if _writes_lowercase(mol, bond.a1) and _writes_lowercase(mol, bond.a2):
            return "-"
        return ""
    return _ORDER_CHARS[bond.order]


def _write_fragment(mol: Molecule, ranks: list[int], atoms_in_frag: list[int]) -> str:
    root = min(atoms_in_frag, key=lambda a: ranks[a])

    preorder: dict[int, int] = {}
    children: dict[int, list[tuple[int, int]]] = {a: [] for a in atoms_in_frag}
    closures: list[tuple[int, int, int]] = []  # (open atom, close atom, bond idx)
    seen_closure: set[int] = set()

    def walk(u: int, entry_bond: int) -> None:
        preorder[u] = len(preorder)
        nbrs = sorted(mol.neighbors(u), key=lambda nb: ranks[nb[0]])
        for v, b_idx in nbrs:
            if b_idx == entry_bond:
                continue
            if v in preorder:
                if b_idx not in seen_closure:
                    seen_closure.add(b_idx)
                    closures.append((v, u, b_idx))
            else:
                children[u].append((v, b_idx))
                walk(v, b_idx)

    walk(root, -1)

    # Greedy digit assignment; digits live from the opening atom to the
    # closing atom in preorder positions.
    intervals: list[tuple[int, int, int]] = []  # (digit, open pos, close pos)
    closure_digit: dict[int, int] = {}
    for open_a, close_a, b_idx in sorted(
        closures, key=lambda c: (preorder[c[0]], preorder[c[1]])
    ):
        lo, hi = preorder[open_a], preorder[close_a]
        digit = 1
        while any(d == digit and not (hi < o or lo > c) for d, o, c in intervals):
            digit += 1
        intervals.append((digit, lo, hi))
        closure_digit[b_idx] = digit

    opens_at: dict[int, list[int]] = {}
    closes_at: dict[int, list[int]] = {}
    for open_a, close_a, b_idx in closures:
        opens_at.setdefault(open_a, []).append(b_idx)
        closes_at.setdefault(close_a, []).append(b_idx)

    def digit_token(d: int) -> str:
        return str(d) if d <= 9 else f"%{d:02d}"

    out: list[str] = []

    def emit(u: int, entry_bond: int) -> None:
        if entry_bond >= 0:
            out.append(_bond_token(mol, mol.bonds[entry_bond]))
        out.append(_atom_token(mol, u))
        for b_idx in sorted(opens_at.get(u, ()), key=lambda b: closure_digit[b]):
            out.append(_bond_token(mol, mol.bonds[b_idx]))
            out.append(digit_token(closure_digit[b_idx]))
        for b_idx in sorted(closes_at.get(u, ()), key=lambda b: closure_digit[b]):
            out.append(digit_token(closure_digit[b_idx]))
        kids = children[u]
        for v, b_idx in kids[:-1]:
            out.append("(")
            emit(v, b_idx)
            out.append(")")
        if kids:
            emit(kids[-1][0], kids[-1][1])

    emit(root, -1)
    return "".join(out)


def write_smiles(mol: Molecule, ranks: list[int]) -> str:
    frags = mol.components()
    texts = sorted(_write_fragment(mol, ranks, list(frag)) for frag in frags)
    return ".".join(texts)


# ---------------------------------------------------------------------------
# Canonical ranks


def _initial_keys(mol: Molecule) -> list[tuple]:
    return [
        (a.element, a.charge, mol.degree(i), a.implicit_h, a.aromatic,
         a.isotope or 0)
        for i, a in enumerate(mol.atoms)
    ]


def _ranks_from_keys(keys: list) -> list[int]:
    order = sorted(set(keys))
    index = {k: r for r, k in enumerate(order)}
    return [index[k] for k in keys]


def _refine(mol: Molecule, ranks: list[int]) -> list[int]:
    n = len(mol.atoms)
    while True:
        keys = [
            (
                ranks[i],
                tuple(sorted(
                    (mol.bonds[b].order, ranks[j]) for j, b in mol.neighbors(i)
                )),
            )
            for i in range(n)
        ]
        new_ranks = _ranks_from_keys(keys)
        if new_ranks == ranks:
            return ranks
        ranks = new_ranks


def _canonical_string(mol: Molecule) -> str:
    n = len(mol.atoms)
    if n == 0:
        return ""
    ranks = _refine(mol, _ranks_from_keys(_initial_keys(mol)))

    best: list[str | None] = [None]

    def explore(ranks: list[int]) -> None:
        counts: dict[int, int] = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied_rank = min((r for r, c in counts.items() if c > 1), default=None)
        if tied_rank is None:
            text = write_smiles(mol, ranks)
            if best[0] is None or text < best[0]:
                best[0] = text
            return
        for a in [i for i in range(n) if ranks[i] == tied_rank]:
            keys = [(ranks[i], 0 if i == a else 1) for i in range(n)]
            explore(_refine(mol, _ranks_from_keys(keys)))

    explore(ranks)
    assert best[0] is not None
    return best[0]


def write_canonical(mol: Molecule) -> str:
    """Canonical SMILES: invariant under atom relabeling, fixed point under
    re-parsing."""
    if mol._canon is None:
        mol._canon = _canonical_string(mol)
    return mol._canon


def randomized_smiles(mol: Molecule, seed: int) -> str:
    """A valid, randomly re-rooted and re-ordered SMILES for the molecule."""
    rng = random.Random(seed)
    perm = list(range(len(mol.atoms)))
    rng.shuffle(perm)
    return write_smiles(mol, perm)


def permuted(mol: Molecule, order: list[int]) -> Molecule:
    """Relabel atoms so new index i holds old atom order[i]."""
    if sorted(order) != list(range(len(mol.atoms))):
        raise ValueError("order must be a permutation of atom indices")
    new_of_old = {old: new for new, old in enumerate(order)}
    atoms = tuple(
        replace(mol.atoms[old], index=new) for new, old in enumerate(order)
    )
    bonds = tuple(
        Bond(new_of_old[b.a1], new_of_old[b.a2], b.order) for b in mol.bonds
    )
    return Molecule(atoms, bonds)
