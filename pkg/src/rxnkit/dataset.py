"""Corpus generation: molecule ingestion, seeded template application,
realism filters, leakage-free splits, and two augmentation passes.

The pipeline turns molecule files plus a template registry into
train/valid/test record files.  Records are grouped by (canonical reactant
tuple, template id); a group is generated at most once and lands in exactly
one split, which is what makes the splits leakage-free by construction.

Determinism contract: generation is reproducible byte-for-byte for a fixed
config and seed, independent of the worker count.  Work is issued in fixed
waves of (template id, sample index) items; each item derives its own RNG
stream from ``sha256(seed | template id | index)`` and is a pure function of
the config, so the only scheduling freedom a process pool has is *when* an
item runs, never *what* it computes.  Results are merged single-threaded in
item order, and acceptance (group dedup, quota, target cut-off) happens only
in that merge.

Scaffold signatures: a molecule's ring systems (connected components of ring
bonds) are reduced to placeholder graphs -- every atom the same anonymous
vertex, aromatic flags dropped, bond orders kept as edge labels -- and
serialized canonically via refinement plus individualization, so the
signature is invariant under atom relabeling.  The signatures observed in a
reference molecule set form an allowlist; products whose ring systems fall
outside it are rejected as unrealistic, alongside products matching any
forbidden substructure pattern.
"""
from __future__ import annotations

import hashlib
import json
import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .augment import enumerate_variants
from .elements import NUMBERS
from .errors import DataError, RxnkitError
from .molgraph import Molecule, parse_smiles, randomized_smiles, write_canonical
from .rxn import (
    Registry,
    SmartsReaction,
    apply_smiles,
    builtin_registry,
    load_registry,
    parse_reaction,
)
from .smarts import PatternGraph, match, parse_smarts

logger = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")
DEFAULT_ELEMENT_ALLOWLIST = frozenset({"C", "N", "O", "F", "S"})

# Scheduling-wave shape: items per template per wave, and how many
# consecutive waves may pass without a single new accepted record before
# generation declares the sources exhausted.  Both are constants (never
# derived from the worker count) so the wave sequence is scheduling-free.
_WAVE_ROUNDS = 8
_STALL_WAVES = 25


def _derive_seed(*parts: object) -> int:
    """A 64-bit stream seed from a tuple of identifying parts."""
    text = "|".join(str(p) for p in parts)
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


# ---------------------------------------------------------------------------
# Molecule ingestion


@dataclass(frozen=True)
class MoleculeSource:
    """One molecule file: SMILES per line, optional tab-separated id.

    Retained molecules must parse, be neutral and non-isotopic, and contain
    only allowlisted elements.
    """

    name: str
    path: str
    element_allowlist: frozenset[str] = DEFAULT_ELEMENT_ALLOWLIST

    def allowed_numbers(self) -> frozenset[int]:
        unknown = [s for s in self.element_allowlist if s not in NUMBERS]
        if unknown:
            raise DataError(f"unknown element symbols in allowlist: {unknown}")
        return frozenset(NUMBERS[s] for s in self.element_allowlist)


@dataclass(frozen=True)
class LoadResult:
    """Molecules kept from one source plus per-line accounting.

    ``smiles[i]`` is the canonical form of ``molecules[i]``.  Every
    non-empty input line is either kept or counted in exactly one skip
    bucket, so ``len(molecules) + skipped_parse + skipped_allowlist +
    skipped_nonneutral`` equals the number of non-empty lines.
    """

    molecules: tuple[Molecule, ...]
    smiles: tuple[str, ...]
    skipped_parse: int
    skipped_allowlist: int
    skipped_nonneutral: int

    def __len__(self) -> int:
        return len(self.molecules)

    def __iter__(self):
        return iter(self.molecules)

    @property
    def skipped(self) -> int:
        return self.skipped_parse + self.skipped_allowlist + self.skipped_nonneutral


def load_molecules(src: MoleculeSource) -> LoadResult:
    """Read one molecule file, keeping order and counting every skip."""
    allowed = src.allowed_numbers()
    try:
        with open(src.path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read molecule file {src.path}: {exc}") from exc
    molecules: list[Molecule] = []
    smiles: list[str] = []
    skipped_parse = skipped_allowlist = skipped_nonneutral = 0
    for line in lines:
        text = line.strip()
        if not text:
            continue
        smi = text.split("\t", 1)[0].strip()
        try:
            mol = parse_smiles(smi)
        except RxnkitError:
            skipped_parse += 1
            continue
        if any(a.charge != 0 or a.isotope is not None for a in mol.atoms):
            skipped_nonneutral += 1
            continue
        if any(a.element not in allowed for a in mol.atoms):
            skipped_allowlist += 1
            continue
        molecules.append(mol)
        smiles.append(write_canonical(mol))
    if not molecules:
        logger.warning("source %s yielded no molecules (%d lines skipped)",
                       src.name, skipped_parse + skipped_allowlist + skipped_nonneutral)
    return LoadResult(tuple(molecules), tuple(smiles),
                      skipped_parse, skipped_allowlist, skipped_nonneutral)


# ---------------------------------------------------------------------------
# Scaffold signatures (generic ring-system shapes)


def _canonical_graph_string(n: int, edges: list[tuple[int, int, int]]) -> str:
    """Canonical serialization of an edge-labeled graph on anonymous vertices.

    Iterative refinement by (rank, sorted incident (label, neighbor rank))
    followed by individualization of the first non-singleton class; the
    lexicographically smallest discrete encoding over all branches is the
    canonical form, so isomorphic graphs map to equal strings.
    """
    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for i, j, order in edges:
        adj[i].append((order, j))
        adj[j].append((order, i))

    def refine(ranks: list[int]) -> list[int]:
        while True:
            keys = [
                (ranks[v], tuple(sorted((o, ranks[u]) for o, u in adj[v])))
                for v in range(n)
            ]
            order = {k: r for r, k in enumerate(sorted(set(keys)))}
            new = [order[k] for k in keys]
            if new == ranks:
                return ranks
            ranks = new

    def encode(ranks: list[int]) -> str:
        pos = ranks  # discrete ranks are a bijection vertex -> position
        out = sorted(
            (min(pos[i], pos[j]), max(pos[i], pos[j]), o) for i, j, o in edges
        )
        return f"{n}:" + ",".join(f"{i}-{j}({o})" for i, j, o in out)

    best: list[str] = []

    def search(ranks: list[int]) -> None:
        ranks = refine(ranks)
        cells: dict[int, list[int]] = {}
        for v, r in enumerate(ranks):
            cells.setdefault(r, []).append(v)
        target = None
        for r in sorted(cells):
            if len(cells[r]) > 1:
                target = cells[r]
                break
        if target is None:
            text = encode(ranks)
            if not best or text < best[0]:
                best[:] = [text]
            return
        for v in target:
            branched = [r * 2 for r in ranks]
            branched[v] -= 1
            search(branched)

    search([0] * n)
    return best[0]


def scaffold_signatures(mol: Molecule) -> frozenset[str]:
    """Canonical strings of the molecule's ring systems.

    A ring system is a connected component of ring bonds; atoms become
    anonymous placeholder vertices and bond orders stay as edge labels, so
    the signature captures ring shape and saturation but no element
    identity.  Acyclic molecules have no ring systems and yield the empty
    set.
    """
    ring = mol.ring_info
    if not ring.ring_bonds:
        return frozenset()
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for b_idx in ring.ring_bonds:
        bond = mol.bonds[b_idx]
        for a in (bond.a1, bond.a2):
            parent.setdefault(a, a)
        ra, rb = find(bond.a1), find(bond.a2)
        if ra != rb:
            parent[ra] = rb
    systems: dict[int, list[int]] = {}
    for b_idx in sorted(ring.ring_bonds):
        bond = mol.bonds[b_idx]
        systems.setdefault(find(bond.a1), []).append(b_idx)
    signatures = set()
    for bond_idxs in systems.values():
        atoms = sorted({a for b in bond_idxs for a in
                        (mol.bonds[b].a1, mol.bonds[b].a2)})
        local = {a: i for i, a in enumerate(atoms)}
        edges = [
            (local[mol.bonds[b].a1], local[mol.bonds[b].a2], mol.bonds[b].order)
            for b in bond_idxs
        ]
        signatures.add(_canonical_graph_string(len(atoms), edges))
    return frozenset(signatures)


def build_scaffold_allowlist(mols) -> set[str]:
    """Union of ring-system signatures over a reference molecule set."""
    allow: set[str] = set()
    for mol in mols:
        allow |= scaffold_signatures(mol)
    return allow


def load_allowlist(path: str) -> set[str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return {line.strip() for line in fh if line.strip()}
    except OSError as exc:
        raise DataError(f"cannot read allowlist file {path}: {exc}") from exc


def save_allowlist(signatures: set[str], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sig in sorted(signatures):
            fh.write(sig + "\n")


def load_forbidden(path: str) -> list[PatternGraph]:
    """Forbidden substructures: one SMARTS pattern per line."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [line.strip() for line in fh]
    except OSError as exc:
        raise DataError(f"cannot read pattern file {path}: {exc}") from exc
    return [parse_smarts(line) for line in lines if line]


# ---------------------------------------------------------------------------
# Product filtering


def _filter_reason(
    mol: Molecule,
    forbidden: list[PatternGraph],
    allowlist: set[str] | frozenset[str] | None,
) -> str | None:
    """None when the product passes, else which filter rejected it."""
    try:
        write_canonical(mol)
    except RxnkitError:
        return "canon"
    for pattern in forbidden:
        if match(pattern, [mol], "intra"):
            return "forbidden"
    if allowlist is not None:
        if any(sig not in allowlist for sig in scaffold_signatures(mol)):
            return "allowlist"
    return None


def filter_product(
    p: Molecule,
    forbidden: list[PatternGraph],
    allowlist: set[str] | frozenset[str] | None = None,
) -> bool:
    """True iff the product canonicalizes, matches no forbidden pattern, and
    every ring-system signature is allowlisted (vacuous without a list)."""
    return _filter_reason(p, forbidden, allowlist) is None


# ---------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class DatasetRecord:
    """One (reactants, template) sample with its retained product set.

    ``generate`` emits canonical reactant strings; ``augment_inputs`` later
    relaxes that to randomized forms on purpose.  The group key
    ``(reactants, template_id)`` determines the split, never the products.
    """

    reactants: tuple[str, ...]
    template_id: int
    template: str
    products: tuple[str, ...]
    split: str

    def __post_init__(self):
        if not self.reactants:
            raise DataError("record needs at least one reactant")
        if not self.products:
            raise DataError("record needs at least one product")
        if self.split not in SPLITS:
            raise DataError(f"unknown split {self.split!r}")

    @property
    def group_key(self) -> tuple[tuple[str, ...], int]:
        return (self.reactants, self.template_id)

    def to_obj(self) -> dict:
        return {
            "reactants": list(self.reactants),
            "template_id": self.template_id,
            "template": self.template,
            "products": list(self.products),
            "split": self.split,
        }

    @classmethod
    def from_obj(cls, obj: dict) -> "DatasetRecord":
        try:
            return cls(
                reactants=tuple(obj["reactants"]),
                template_id=int(obj["template_id"]),
                template=str(obj["template"]),
                products=tuple(obj["products"]),
                split=str(obj["split"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed record object: {exc}") from exc


def write_records(records, path: str) -> None:
    """One JSON object per line, insertion order preserved."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec.to_obj(), separators=(",", ":")) + "\n")


def read_records(path: str) -> list[DatasetRecord]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise DataError(f"cannot read record file {path}: {exc}") from exc
    records = []
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}:{lineno}: not JSON: {exc}") from exc
        records.append(DatasetRecord.from_obj(obj))
    return records


# ---------------------------------------------------------------------------
# Generation


@dataclass(frozen=True)
class GenerationConfig:
    """Everything ``generate`` needs; JSON-loadable for the command line.

    ``counts`` gives the target record count per split.  ``mode`` is
    ``auto`` (inter for multi-component templates, intra otherwise) unless
    forced.  ``quota`` optionally caps accepted records per template id;
    without it templates share attempts uniformly round-robin.
    """

    sources: tuple[MoleculeSource, ...]
    out_dir: str
    counts: dict = field(default_factory=lambda: {"train": 2000, "valid": 200, "test": 200})
    seed: int = 0
    workers: int = 1
    registry_path: str | None = None
    forbidden_path: str | None = None
    allowlist_path: str | None = None
    product_cap: int = 10
    template_ids: tuple[int, ...] | None = None
    quota: dict | None = None
    mode: str = "auto"

    def __post_init__(self):
        if not self.sources:
            raise DataError("generation needs at least one molecule source")
        if set(self.counts) - set(SPLITS) or not self.counts:
            raise DataError(f"counts keys must be a subset of {SPLITS}")
        if any(int(v) < 0 for v in self.counts.values()):
            raise DataError("split targets must be >= 0")
        if sum(int(v) for v in self.counts.values()) < 1:
            raise DataError("at least one record must be requested")
        if self.workers < 1:
            raise DataError("workers must be >= 1")
        if self.product_cap < 1:
            raise DataError("product_cap must be >= 1")
        if self.mode not in ("auto", "intra", "inter"):
            raise DataError(f"unknown matching mode {self.mode!r}")

    @classmethod
    def from_obj(cls, obj: dict, base_dir: str | None = None) -> "GenerationConfig":
        def resolve(p):
            if p is None:
                return None
            path = Path(p)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return str(path)

        try:
            sources = tuple(
                MoleculeSource(
                    name=s.get("name", f"source{i}"),
                    path=resolve(s["path"]),
                    element_allowlist=frozenset(
                        s.get("elements", sorted(DEFAULT_ELEMENT_ALLOWLIST))
                    ),
                )
                for i, s in enumerate(obj["sources"])
            )
            return cls(
                sources=sources,
                out_dir=resolve(obj["out_dir"]),
                counts={k: int(v) for k, v in obj.get(
                    "counts", {"train": 2000, "valid": 200, "test": 200}).items()},
                seed=int(obj.get("seed", 0)),
                workers=int(obj.get("workers", 1)),
                registry_path=resolve(obj.get("registry")),
                forbidden_path=resolve(obj.get("forbidden")),
                allowlist_path=resolve(obj.get("allowlist")),
                product_cap=int(obj.get("product_cap", 10)),
                template_ids=tuple(int(t) for t in obj["template_ids"])
                if obj.get("template_ids") else None,
                quota={int(k): int(v) for k, v in obj["quota"].items()}
                if obj.get("quota") else None,
                mode=obj.get("mode", "auto"),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed generation config: {exc}") from exc

    @classmethod
    def from_file(cls, path: str) -> "GenerationConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise DataError(f"config {path} is not JSON: {exc}") from exc
        return cls.from_obj(obj, base_dir=str(Path(path).parent))


@dataclass(frozen=True)
class GenerationResult:
    paths: dict
    statistics: dict


class _WorkerState:
    """Per-process parsed state; built once from a plain-data payload."""

    def __init__(self, payload: dict):
        self.seed: int = payload["seed"]
        self.pool_smiles: list[str] = payload["pool"]
        self.pool = [parse_smiles(s) for s in self.pool_smiles]
        self.templates = {
            tid: parse_reaction(text) for tid, text in payload["templates"]
        }
        self.forbidden = [parse_smarts(s) for s in payload["forbidden"]]
        self.allowlist = (
            frozenset(payload["allowlist"])
            if payload["allowlist"] is not None else None
        )
        self.cap: int = payload["cap"]
        self.mode: str = payload["mode"]

    def attempt(self, tid: int, index: int) -> dict:
        """One pure work item: sample, apply, filter.  Plain-dict result."""
        rng = random.Random(_derive_seed(self.seed, "item", tid, index))
        rxn = self.templates[tid]
        n_comp = len(rxn.lhs.components)
        picks = [rng.randrange(len(self.pool)) for _ in range(n_comp)]
        chosen = sorted((self.pool_smiles[i], i) for i in picks)
        reactants = [smi for smi, _ in chosen]
        mols = [self.pool[i] for _, i in chosen]
        mode = self.mode
        if mode == "auto":
            mode = "inter" if n_comp > 1 else "intra"
        out = {
            "tid": tid, "ok": False, "reactants": reactants, "products": [],
            "no_match": 0, "error": 0, "rejected_forbidden": 0,
            "rejected_allowlist": 0, "rejected_canon": 0, "capped": 0,
        }
        try:
            products = apply_smiles(rxn, mols, mode)
        except RxnkitError:
            out["error"] = 1
            return out
        if not products:
            out["no_match"] = 1
            return out
        kept = []
        for product in products:
            try:
                pmol = parse_smiles(product)
            except RxnkitError:
                out["rejected_canon"] += 1
                continue
            reason = _filter_reason(pmol, self.forbidden, self.allowlist)
            if reason is None:
                kept.append(product)
            else:
                out[f"rejected_{reason}"] += 1
        out["capped"] = max(0, len(kept) - self.cap)
        kept = kept[: self.cap]
        if kept:
            out["ok"] = True
            out["products"] = kept
        return out


_WORKER: _WorkerState | None = None


def _init_worker(payload: dict) -> None:
    global _WORKER
    _WORKER = _WorkerState(payload)


def _run_item(item: tuple[int, int]) -> dict:
    assert _WORKER is not None
    return _WORKER.attempt(*item)


def _provisional_split(reactants: tuple[str, ...], tid: int,
                       targets: dict) -> str:
    """Stable split draw: group-key hash against cumulative target ranges."""
    total = sum(targets.values())
    h = _derive_seed("split", tid, *reactants) % total
    upper = 0
    for split in SPLITS:
        upper += targets.get(split, 0)
        if h < upper:
            return split
    return SPLITS[-1]


def _rebalance(assigned: list[str], targets: dict) -> None:
    """Move whole groups (from the end) out of overfull splits until every
    split is at or under target; exact when the total matches the target."""
    counts = {s: 0 for s in SPLITS}
    for split in assigned:
        counts[split] += 1
    idx = len(assigned) - 1
    while idx >= 0:
        split = assigned[idx]
        if counts[split] > targets.get(split, 0):
            for other in SPLITS:
                if counts[other] < targets.get(other, 0):
                    assigned[idx] = other
                    counts[split] -= 1
                    counts[other] += 1
                    break
            else:
                idx -= 1
                continue
            idx = min(idx, len(assigned) - 1)
            continue
        idx -= 1


def generate(cfg: GenerationConfig) -> GenerationResult:
    """Produce train/valid/test record files plus a statistics file."""
    registry = (
        load_registry(cfg.registry_path) if cfg.registry_path
        else builtin_registry()
    )
    names = [src.name for src in cfg.sources]
    if len(set(names)) != len(names):
        raise DataError(f"source names must be unique, got {names}")
    template_ids = list(cfg.template_ids) if cfg.template_ids else registry.ids()
    for tid in template_ids:
        registry.get(tid)
    targets = {s: int(cfg.counts.get(s, 0)) for s in SPLITS}
    total_target = sum(targets.values())

    loads = {src.name: load_molecules(src) for src in cfg.sources}
    pool_smiles = [smi for src in cfg.sources for smi in loads[src.name].smiles]
    forbidden_texts = (
        [p.raw for p in load_forbidden(cfg.forbidden_path)]
        if cfg.forbidden_path else []
    )
    allowlist = load_allowlist(cfg.allowlist_path) if cfg.allowlist_path else None

    payload = {
        "seed": cfg.seed,
        "pool": pool_smiles,
        "templates": [(tid, registry.get(tid).raw_text) for tid in template_ids],
        "forbidden": forbidden_texts,
        "allowlist": sorted(allowlist) if allowlist is not None else None,
        "cap": cfg.product_cap,
        "mode": cfg.mode,
    }

    per_template = {
        tid: {
            "attempts": 0, "accepted": 0, "no_match": 0, "error": 0,
            "filtered_out": 0, "duplicate_group": 0, "quota_skipped": 0,
            "surplus": 0, "rejected_forbidden": 0, "rejected_allowlist": 0,
            "rejected_canon": 0, "capped": 0,
        }
        for tid in template_ids
    }
    accepted: list[dict] = []
    accepted_per_tid = {tid: 0 for tid in template_ids}
    seen_groups: set = set()
    next_index = {tid: 0 for tid in template_ids}
    exhausted = not pool_smiles
    stall = 0

    def merge(results) -> None:
        nonlocal stall
        before = len(accepted)
        for res in results:
            tid = res["tid"]
            stats = per_template[tid]
            stats["attempts"] += 1
            for key in ("no_match", "error", "rejected_forbidden",
                        "rejected_allowlist", "rejected_canon", "capped"):
                stats[key] += res[key]
            if not res["ok"]:
                if not res["no_match"] and not res["error"]:
                    stats["filtered_out"] += 1
                continue
            if cfg.quota is not None and tid in cfg.quota \
                    and accepted_per_tid[tid] >= int(cfg.quota[tid]):
                stats["quota_skipped"] += 1
                continue
            group = (tuple(res["reactants"]), tid)
            if group in seen_groups:
                stats["duplicate_group"] += 1
                continue
            if len(accepted) >= total_target:
                stats["surplus"] += 1
                continue
            seen_groups.add(group)
            accepted.append(res)
            accepted_per_tid[tid] += 1
        stall = stall + 1 if len(accepted) == before else 0

    def waves(run_wave) -> None:
        nonlocal exhausted
        while len(accepted) < total_target:
            wave = []
            for _ in range(_WAVE_ROUNDS):
                for tid in template_ids:
                    wave.append((tid, next_index[tid]))
                    next_index[tid] += 1
            merge(run_wave(wave))
            if stall >= _STALL_WAVES:
                exhausted = True
                break

    if pool_smiles:
        if cfg.workers == 1:
            state = _WorkerState(payload)
            waves(lambda wave: (state.attempt(t, i) for t, i in wave))
        else:
            with ProcessPoolExecutor(
                max_workers=cfg.workers,
                initializer=_init_worker,
                initargs=(payload,),
            ) as executor:
                chunk = max(1, _WAVE_ROUNDS * len(template_ids)
                            // (cfg.workers * 4))
                waves(lambda wave: list(
                    executor.map(_run_item, wave, chunksize=chunk)))

    if len(accepted) < total_target:
        logger.warning(
            "sources exhausted: generated %d of %d requested records",
            len(accepted), total_target,
        )

    assigned = [
        _provisional_split(tuple(res["reactants"]), res["tid"], targets)
        for res in accepted
    ]
    _rebalance(assigned, targets)

    records = [
        DatasetRecord(
            reactants=tuple(res["reactants"]),
            template_id=res["tid"],
            template=registry.get(res["tid"]).raw_text,
            products=tuple(res["products"]),
            split=split,
        )
        for res, split in zip(accepted, assigned)
    ]
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {split: str(out_dir / f"{split}.jsonl") for split in SPLITS}
    for split in SPLITS:
        write_records([r for r in records if r.split == split], paths[split])

    for tid in template_ids:
        for split in SPLITS:
            per_template[tid][split] = 0
    written = {s: 0 for s in SPLITS}
    for rec in records:
        written[rec.split] += 1
        per_template[rec.template_id]["accepted"] += 1
        per_template[rec.template_id][rec.split] += 1

    statistics = {
        "targets": targets,
        "written": written,
        "records": len(records),
        "multi_product_records": sum(1 for r in records if len(r.products) > 1),
        "exhausted": exhausted or len(records) < total_target,
        "attempts": sum(s["attempts"] for s in per_template.values()),
        "per_template": {f"{tid:02d}": per_template[tid] for tid in template_ids},
        "sources": {
            name: {
                "kept": len(load.molecules),
                "skipped_parse": load.skipped_parse,
                "skipped_allowlist": load.skipped_allowlist,
                "skipped_nonneutral": load.skipped_nonneutral,
            }
            for name, load in loads.items()
        },
    }
    stats_path = out_dir / "statistics.json"
    with open(stats_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(statistics, indent=2, sort_keys=True) + "\n")
    paths["statistics"] = str(stats_path)
    return GenerationResult(paths=paths, statistics=statistics)


# ---------------------------------------------------------------------------
# Corpus augmentation: doubles the training file with template-variant twins


_WIDENING_KINDS = frozenset({"generalize", "permute_within", "permute_between"})


def _augment_record(
    record: DatasetRecord,
    seed: int,
    max_candidates: int,
) -> DatasetRecord | None:
    """A copy of the record with a variant template valid for its reactants.

    Widening/order-preserving variants must reproduce every stored product;
    narrowing variants must retain at least one, and the record's product
    set shrinks to what the variant still reaches, keeping the record
    invariant (products are produced by the record's own template) intact.
    Returns None when no drawn variant qualifies.
    """
    base = parse_reaction(record.template)
    mols = [parse_smiles(s) for s in record.reactants]
    mode = "inter" if len(mols) > 1 else "intra"
    variants = enumerate_variants(
        base, max_count=max_candidates, seed=seed, probe_smiles=None,
    )
    for variant in variants:
        try:
            reached = set(apply_smiles(variant.result, mols, mode))
        except RxnkitError:
            continue
        kinds = {op.kind for op in variant.ops}
        if kinds <= _WIDENING_KINDS:
            if set(record.products) <= reached:
                return replace(record, template=variant.provenance_text)
        else:
            still = tuple(p for p in record.products if p in reached)
            if still:
                return replace(record, template=variant.provenance_text,
                               products=still)
    return None


def augment_corpus(
    train_path: str,
    registry: Registry,
    seed: int,
    out_path: str | None = None,
    max_candidates: int = 8,
) -> tuple[str, dict]:
    """Double a training record file with template-variant twins.

    Every input record is re-emitted followed by one augmented copy; when no
    valid variant is found the original is duplicated and counted.  Output
    size is exactly twice the input size.
    """
    records = read_records(train_path)
    for rec in records:
        registry.get(rec.template_id)
    out = Path(out_path) if out_path else Path(train_path).with_suffix(".aug.jsonl")
    augmented = duplicated = 0
    result: list[DatasetRecord] = []
    for index, rec in enumerate(records):
        result.append(rec)
        twin = _augment_record(rec, _derive_seed(seed, "corpus", index),
                               max_candidates)
        if twin is None:
            result.append(rec)
            duplicated += 1
        else:
            result.append(twin)
            augmented += 1
    write_records(result, str(out))
    stats = {
        "records_in": len(records),
        "records_out": len(result),
        "augmented": augmented,
        "duplicated": duplicated,
    }
    return str(out), stats


def augment_inputs(records, factor: int, seed: int) -> list[DatasetRecord]:
    """Expand each record to ``factor`` copies over randomized reactant
    SMILES; copy 0 keeps the canonical strings, products never change."""
    if factor < 1:
        raise DataError(f"augmentation factor must be >= 1, not {factor}")
    out: list[DatasetRecord] = []
    for index, rec in enumerate(records):
        out.append(rec)
        if factor == 1:
            continue
        mols = [parse_smiles(s) for s in rec.reactants]
        for copy in range(1, factor):
            randomized = tuple(
                randomized_smiles(
                    mol, seed=_derive_seed(seed, "inputs", index, copy, k))
                for k, mol in enumerate(mols)
            )
            out.append(replace(rec, reactants=randomized))
    return out
