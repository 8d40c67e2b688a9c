"""SMARTS subset: bracket-atom patterns and a backtracking matcher.

Grammar (bit-exact subset):

    pattern   :=  fragment ('.' fragment)*
    fragment  :=  atom (bond? (atom | ring-digit) | '(' ... ')')*
    atom      :=  '[' expr ']'
    expr      :=  or_list (';' prim)* (':' int)?
    or_list   :=  prim (',' prim)*
    prim      :=  '#' digits | ElementSymbol | lowercase element | '*'
               |  'h' digits?
    bond      :=  '' | '-' | '=' | '#' | '~'

Anything else (charge, degree, recursion, negation, ...) is rejected with
the primitive named in the error.  Uppercase element primitives match
non-aromatic atoms only, lowercase match aromatic only, ``#n`` matches both;
bare ``h`` means implicit-H count >= 1, ``hN`` exactly N.  An unspecified
bond matches single or aromatic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .elements import AROMATIC_SYMBOLS, NUMBERS, SYMBOLS
from .molgraph import AROMATIC, DOUBLE, SINGLE, TRIPLE, Atom, Molecule
from .errors import SmartsError

_UNSUPPORTED = {
    "+": "charge (+)",
    "-": "charge (-)",
    "H": "total hydrogen count (H)",
    "D": "degree (D)",
    "X": "connectivity (X)",
    "x": "ring connectivity (x)",
    "R": "ring membership (R)",
    "r": "ring size (r)",
    "v": "valence (v)",
    "!": "negation (!)",
    "&": "high-precedence and (&)",
    "$": "recursive SMARTS ($(...))",
    "@": "chirality (@)",
}


@dataclass(frozen=True)
class AtomPrim:
    """One primitive: kind is number/aliphatic/aromatic/wildcard/hcount.

    ``value`` is the atomic number, or the H count (None for bare ``h``).
    """

    kind: str
    value: int | None = None

    def matches(self, atom: Atom) -> bool:
        if self.kind == "number":
            return atom.element == self.value
        if self.kind == "aliphatic":
            return atom.element == self.value and not atom.aromatic
        if self.kind == "aromatic":
            return atom.element == self.value and atom.aromatic
        if self.kind == "wildcard":
            return True
        if self.kind == "hcount":
            if self.value is None:
                return atom.implicit_h >= 1
            return atom.implicit_h == self.value
        raise AssertionError(self.kind)

    @property
    def text(self) -> str:
        if self.kind == "number":
            return f"#{self.value}"
        if self.kind == "aliphatic":
            return SYMBOLS[self.value]
        if self.kind == "aromatic":
            return SYMBOLS[self.value].lower()
        if self.kind == "wildcard":
            return "*"
        if self.kind == "hcount":
            return "h" if self.value is None else f"h{self.value}"
        raise AssertionError(self.kind)


@dataclass(frozen=True)
class AtomExpr:
    or_terms: tuple[AtomPrim, ...]
    and_terms: tuple[AtomPrim, ...]
    map: int | None = None

    def matches(self, atom: Atom) -> bool:
        return any(p.matches(atom) for p in self.or_terms) and all(
            p.matches(atom) for p in self.and_terms
        )

    def text(self, include_map: bool = True) -> str:
        body = ",".join(p.text for p in self.or_terms)
        for p in self.and_terms:
            body += ";" + p.text
        if include_map and self.map is not None:
            body += f":{self.map}"
        return f"[{body}]"

    @property
    def structural_key(self) -> str:
        """Serialization without the atom map; embeddings that differ only
        by swapping structurally identical pattern atoms are duplicates."""
        return self.text(include_map=False)


@dataclass(frozen=True)
class BondExpr:
    kind: str  # unspecified | single | double | triple | any

    def matches(self, order: int) -> bool:
        if self.kind == "unspecified":
            return order in (SINGLE, AROMATIC)
        if self.kind == "single":
            return order == SINGLE
        if self.kind == "double":
            return order == DOUBLE
        if self.kind == "triple":
            return order == TRIPLE
        if self.kind == "any":
            return True
        raise AssertionError(self.kind)

    @property
    def text(self) -> str:
        return {"unspecified": "", "single": "-", "double": "=",
                "triple": "#", "any": "~"}[self.kind]


_BOND_KINDS = {"-": "single", "=": "double", "#": "triple", "~": "any"}


@dataclass(frozen=True)
class Embedding:
    """assignment[pattern atom index] = (molecule index, atom index)."""

    assignment: tuple[tuple[int, int], ...]


class PatternGraph:
    """Parsed pattern: atoms indexed globally, dot-components keep their
    input order (order is data for the augmentation engine)."""

    __slots__ = ("atoms", "bonds", "components", "raw", "maps", "_adj")

    def __init__(
        self,
        atoms: tuple[AtomExpr, ...],
        bonds: tuple[tuple[int, int, BondExpr], ...],
        components: tuple[tuple[int, ...], ...],
        raw: str = "",
    ):
        self.atoms = atoms
        self.bonds = bonds
        self.components = components
        self.raw = raw
        maps: dict[int, int] = {}
        for idx, expr in enumerate(atoms):
            if expr.map is not None:
                if expr.map in maps:
                    raise SmartsError(f"duplicate atom map {expr.map}", raw)
                maps[expr.map] = idx
        self.maps = maps
        adj: list[list[tuple[int, int]]] = [[] for _ in atoms]
        for b_idx, (a1, a2, _expr) in enumerate(bonds):
            adj[a1].append((a2, b_idx))
            adj[a2].append((a1, b_idx))
        self._adj = tuple(tuple(n) for n in adj)

    def neighbors(self, idx: int) -> tuple[tuple[int, int], ...]:
        return self._adj[idx]

    def bond_expr_between(self, i: int, j: int) -> BondExpr | None:
        for nbr, b_idx in self._adj[i]:
            if nbr == j:
                return self.bonds[b_idx][2]
        return None


# ---------------------------------------------------------------------------
# Parsing


def _parse_prim(text: str, pos: int, end: int) -> tuple[AtomPrim, int]:
    c = text[pos]
    if c == "#":
        num_start = pos + 1
        p = num_start
        while p < end and text[p].isdigit():
            p += 1
        if p == num_start:
            raise SmartsError("'#' needs an atomic number", text, pos)
        num = int(text[num_start:p])
        if num not in SYMBOLS or num == 0:
            raise SmartsError(f"unknown atomic number {num}", text, num_start)
        return AtomPrim("number", num), p
    if c == "*":
        return AtomPrim("wildcard"), pos + 1
    if c == "h":
        p = pos + 1
        num_start = p
        while p < end and text[p].isdigit():
            p += 1
        value = int(text[num_start:p]) if p > num_start else None
        return AtomPrim("hcount", value), p
    if c in _UNSUPPORTED or c.isdigit():
        name = _UNSUPPORTED.get(c, "isotope")
        raise SmartsError(f"unsupported SMARTS primitive: {name}", text, pos)
    if c.isupper():
        sym = c
        if pos + 1 < end and text[pos + 1].islower() and (c + text[pos + 1]) in NUMBERS:
            sym = c + text[pos + 1]
        if sym not in NUMBERS:
            raise SmartsError(f"unknown element symbol {sym!r}", text, pos)
        return AtomPrim("aliphatic", NUMBERS[sym]), pos + len(sym)
    if c.islower():
        if c in AROMATIC_SYMBOLS:
            return AtomPrim("aromatic", NUMBERS[c.upper()]), pos + 1
        raise SmartsError(f"element {c!r} cannot be aromatic", text, pos)
    raise SmartsError(f"unexpected character {c!r} in atom expression", text, pos)


def _parse_atom_expr(text: str, start: int) -> tuple[AtomExpr, int]:
    end = text.find("]", start)
    if end < 0:
        raise SmartsError("unterminated bracket atom", text, start)
    pos = start + 1
    if pos == end:
        raise SmartsError("empty atom expression", text, pos)

    or_terms: list[AtomPrim] = []
    prim, pos = _parse_prim(text, pos, end)
    or_terms.append(prim)
    while pos < end and text[pos] == ",":
        prim, pos = _parse_prim(text, pos + 1, end)
        or_terms.append(prim)

    and_terms: list[AtomPrim] = []
    while pos < end and text[pos] == ";":
        prim, pos = _parse_prim(text, pos + 1, end)
        and_terms.append(prim)

    map_num: int | None = None
    if pos < end and text[pos] == ":":
        pos += 1
        num_start = pos
        while pos < end and text[pos].isdigit():
            pos += 1
        if pos == num_start:
            raise SmartsError("':' needs a map number", text, pos)
        map_num = int(text[num_start:pos])

    if pos != end:
        c = text[pos]
        if c in _UNSUPPORTED:
            raise SmartsError(
                f"unsupported SMARTS primitive: {_UNSUPPORTED[c]}", text, pos
            )
        raise SmartsError(f"unexpected character {c!r} in atom expression", text, pos)
    return AtomExpr(tuple(or_terms), tuple(and_terms), map_num), end + 1


def parse_smarts(text: str) -> PatternGraph:
    """Parse a pattern; see the module docstring for the accepted grammar."""
    if not text:
        raise SmartsError("empty SMARTS", text, 0)
    if ">>" in text:
        raise SmartsError("'>>' belongs to reactions, not patterns", text,
                          text.find(">>"))

    atoms: list[AtomExpr] = []
    bonds: list[tuple[int, int, BondExpr]] = []
    components: list[list[int]] = [[]]
    ring_open: dict[int, tuple[int, str, int]] = {}
    branch_stack: list[int | None] = []
    prev: int | None = None
    pending = ""
    pending_off = -1
    pos = 0

    def bond_expr(sym: str) -> BondExpr:
        return BondExpr(_BOND_KINDS.get(sym, "unspecified"))

    while pos < len(text):
        c = text[pos]
        if c == "[":
            expr, pos = _parse_atom_expr(text, pos)
            idx = len(atoms)
            atoms.append(expr)
            components[-1].append(idx)
            if prev is not None:
                bonds.append((prev, idx, bond_expr(pending)))
            elif pending:
                raise SmartsError("bond symbol without a preceding atom",
                                  text, pending_off)
            pending = ""
            prev = idx
        elif c in _BOND_KINDS:
            if pending:
                raise SmartsError("two bond symbols in a row", text, pos)
            pending = c
            pending_off = pos
            pos += 1
        elif c.isdigit() or c == "%":
            if c == "%":
                if not text[pos + 1 : pos + 3].isdigit():
                    raise SmartsError("'%' needs two digits", text, pos)
                num = int(text[pos + 1 : pos + 3])
                pos += 3
            else:
                num = int(c)
                pos += 1
            if prev is None:
                raise SmartsError("ring closure before any atom", text, pos - 1)
            if num in ring_open:
                other, sym_open, _off = ring_open.pop(num)
                if other == prev:
                    raise SmartsError("ring closure to the same atom", text, pos - 1)
                if pending and sym_open and pending != sym_open:
                    raise SmartsError("conflicting ring bond symbols", text, pos - 1)
                bonds.append((other, prev, bond_expr(pending or sym_open)))
            else:
                ring_open[num] = (prev, pending, pos - 1)
            pending = ""
        elif c == "(":
            if prev is None:
                raise SmartsError("branch before any atom", text, pos)
            branch_stack.append(prev)
            pos += 1
        elif c == ")":
            if not branch_stack:
                raise SmartsError("unmatched ')'", text, pos)
            if pending:
                raise SmartsError("dangling bond before ')'", text, pos)
            prev = branch_stack.pop()
            pos += 1
        elif c == ".":
            if pending:
                raise SmartsError("bond symbol before '.'", text, pos)
            if branch_stack:
                raise SmartsError("'.' inside a branch", text, pos)
            if ring_open:
                raise SmartsError("unclosed ring bond before '.'", text, pos)
            if not components[-1]:
                raise SmartsError("empty pattern component", text, pos)
            components.append([])
            prev = None
            pos += 1
        elif c == ":":
            raise SmartsError("unsupported SMARTS primitive: aromatic bond (:)",
                              text, pos)
        elif c in "/\\":
            raise SmartsError(
                "unsupported SMARTS primitive: directional bond (/ or \\)", text, pos
            )
        else:
            raise SmartsError(f"unexpected character {c!r}", text, pos)

    if branch_stack:
        raise SmartsError("unclosed '('", text, len(text))
    if ring_open:
        num, (_atom, _sym, off) = next(iter(sorted(ring_open.items())))
        raise SmartsError(f"unclosed ring bond {num}", text, off)
    if pending:
        raise SmartsError("dangling bond symbol", text, pending_off)
    if not components[-1]:
        raise SmartsError("empty pattern component", text, len(text) - 1)

    return PatternGraph(
        tuple(atoms), tuple(bonds), tuple(tuple(c) for c in components), raw=text
    )


# ---------------------------------------------------------------------------
# Serialization (the augmentation engine re-emits edited patterns)


def write_pattern(pattern: PatternGraph) -> str:
    """Serialize a pattern, preserving component order, atom order within a
    component, and OR-term order (all three are data)."""
    parts = []
    for comp in pattern.components:
        parts.append(_write_component(pattern, comp))
    return ".".join(parts)


def _write_component(pattern: PatternGraph, comp: tuple[int, ...]) -> str:
    root = comp[0]
    preorder: dict[int, int] = {}
    children: dict[int, list[tuple[int, int]]] = {a: [] for a in comp}
    closures: list[tuple[int, int, int]] = []
    seen_closure: set[int] = set()

    def walk(u: int, entry_bond: int) -> None:
        preorder[u] = len(preorder)
        for v, b_idx in pattern.neighbors(u):
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

    intervals: list[tuple[int, int, int]] = []
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

    out: list[str] = []

    def emit(u: int, entry_bond: int) -> None:
        if entry_bond >= 0:
            out.append(pattern.bonds[entry_bond][2].text)
        out.append(pattern.atoms[u].text())
        for b_idx in sorted(opens_at.get(u, ()), key=lambda b: closure_digit[b]):
            out.append(pattern.bonds[b_idx][2].text)
            d = closure_digit[b_idx]
            out.append(str(d) if d <= 9 else f"%{d:02d}")
        for b_idx in sorted(closes_at.get(u, ()), key=lambda b: closure_digit[b]):
            d = closure_digit[b_idx]
            out.append(str(d) if d <= 9 else f"%{d:02d}")
        kids = children[u]
        for v, b_idx in kids[:-1]:
            out.append("(")
            emit(v, b_idx)
            out.append(")")
        if kids:
            emit(kids[-1][0], kids[-1][1])

    emit(root, -1)
    return "".join(out)


# ---------------------------------------------------------------------------
# Matching


def _component_embeddings(
    pattern: PatternGraph,
    comp: tuple[int, ...],
    mol: Molecule,
) -> list[dict[int, int]]:
    """All assignments of one connected component into one molecule."""
    cands: dict[int, list[int]] = {}
    for p in comp:
        expr = pattern.atoms[p]
        cands[p] = [a for a in range(len(mol.atoms)) if expr.matches(mol.atoms[a])]
        if not cands[p]:
            return []

    # Most-constrained first, then grow along pattern bonds so every later
    # atom is checked against at least one assigned neighbor.
    start = min(comp, key=lambda p: len(cands[p]))
    order = [start]
    placed = {start}
    while len(order) < len(comp):
        frontier = [
            (len(cands[q]), q)
            for q in comp
            if q not in placed and any(nbr in placed for nbr, _ in pattern.neighbors(q))
        ]
        _, nxt = min(frontier)
        order.append(nxt)
        placed.add(nxt)

    results: list[dict[int, int]] = []
    assignment: dict[int, int] = {}
    used: set[int] = set()

    def extend(depth: int) -> None:
        if depth == len(order):
            results.append(dict(assignment))
            return
        p = order[depth]
        for a in cands[p]:
            if a in used:
                continue
            ok = True
            for nbr, b_idx in pattern.neighbors(p):
                if nbr not in assignment:
                    continue
                bond = mol.bond_between(a, assignment[nbr])
                if bond is None or not pattern.bonds[b_idx][2].matches(bond.order):
                    ok = False
                    break
            if ok:
                assignment[p] = a
                used.add(a)
                extend(depth + 1)
                used.discard(a)
                del assignment[p]

    extend(0)
    return results


def match(
    pattern: PatternGraph,
    mols: list[Molecule],
    mode: str = "intra",
    dedup_symmetric: bool = True,
) -> list[Embedding]:
    """All embeddings of the pattern into the molecule list.

    ``intra`` lets every component bind any molecule (atom-disjointly, so a
    single molecule may satisfy a multi-component pattern); ``inter``
    requires each component to bind a distinct molecule.  By default,
    embeddings that differ only by permuting structurally identical pattern
    atoms are reported once; callers that need a finer equivalence (the
    rewriting engine cares which pattern *bonds* land where, not just the
    atoms) pass ``dedup_symmetric=False`` to receive every embedding.
    """
    if mode not in ("intra", "inter"):
        raise ValueError(f"unknown matching mode {mode!r}")
    if not mols:
        return []

    per_component: list[list[tuple[int, dict[int, int]]]] = []
    for comp in pattern.components:
        options: list[tuple[int, dict[int, int]]] = []
        for m_idx, mol in enumerate(mols):
            for emb in _component_embeddings(pattern, comp, mol):
                options.append((m_idx, emb))
        if not options:
            return []
        per_component.append(options)

    raw: list[tuple[tuple[int, int], ...]] = []
    chosen: list[tuple[int, dict[int, int]]] = []

    def combine(c_idx: int) -> None:
        if c_idx == len(per_component):
            assignment: dict[int, tuple[int, int]] = {}
            for m_idx, emb in chosen:
                for p, a in emb.items():
                    assignment[p] = (m_idx, a)
            raw.append(tuple(assignment[p] for p in range(len(pattern.atoms))))
            return
        for m_idx, emb in per_component[c_idx]:
            ok = True
            for pm_idx, prev in chosen:
                if mode == "inter" and pm_idx == m_idx:
                    ok = False
                    break
                if pm_idx == m_idx and set(prev.values()) & set(emb.values()):
                    ok = False
                    break
            if ok:
                chosen.append((m_idx, emb))
                combine(c_idx + 1)
                chosen.pop()

    combine(0)

    if not dedup_symmetric:
        return [Embedding(assignment) for assignment in sorted(raw)]

    keys = [pattern.atoms[p].structural_key for p in range(len(pattern.atoms))]
    seen: set[frozenset] = set()
    out: list[Embedding] = []
    for assignment in sorted(raw):
        key = frozenset((keys[p], ma) for p, ma in enumerate(assignment))
        if key in seen:
            continue
        seen.add(key)
        out.append(Embedding(assignment))
    return out
