"""Command-line interface: one executable covering the whole toolchain.

Every subcommand is a thin adapter over a library operation; results go to
stdout as JSON lines (compact by default, indented with ``--pretty``) and
diagnostics go to stderr.  Exit codes: 0 on success, 1 on usage errors,
2 on data errors (unparseable input, missing files, contract violations).
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .augment import enumerate_variants
from .dataset import (
    GenerationConfig,
    MoleculeSource,
    augment_corpus,
    build_scaffold_allowlist,
    generate,
    load_molecules,
    read_records,
    save_allowlist,
)
from .encode import Vocab, build_vocab, encode_records
from .errors import RxnkitError
from .evalkit import evaluate
from .molgraph import parse_smiles, write_canonical
from .rxn import SmartsReaction, apply, builtin_registry, load_registry, parse_reaction
from .smarts import match, parse_smarts


class _Parser(argparse.ArgumentParser):
    """ArgumentParser whose usage failures exit with status 1, not 2."""

    def error(self, message: str):  # noqa: D102 - argparse contract
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _emit(obj: dict, pretty: bool) -> None:
    if pretty:
        print(json.dumps(obj, indent=2, sort_keys=True))
    else:
        print(json.dumps(obj, separators=(",", ":"), sort_keys=True))


# ---------------------------------------------------------------------------
# Subcommand handlers: each takes parsed args, returns a dict or list of
# dicts (one JSON line each).  Domain errors propagate as RxnkitError.


def _resolve_template(text: str) -> SmartsReaction:
    """Numeric text selects a built-in template id; otherwise parse it."""
    stripped = text.strip()
    if stripped.lstrip("+-").isdigit():
        return builtin_registry().get(int(stripped))
    return parse_reaction(stripped)


def _default_mode(rxn: SmartsReaction) -> str:
    return "inter" if len(rxn.lhs.components) > 1 else "intra"


def _cmd_canon(args) -> dict:
    return {"canonical": write_canonical(parse_smiles(args.smiles))}


def _cmd_match(args) -> dict:
    pattern = parse_smarts(args.smarts)
    mols = [parse_smiles(s) for s in args.smiles.split(",")]
    embeddings = match(pattern, mols, args.mode or "intra")
    return {
        "count": len(embeddings),
        "embeddings": [emb.assignment for emb in embeddings],
    }


def _cmd_apply(args) -> dict:
    rxn = _resolve_template(args.template)
    mols = [parse_smiles(s) for s in args.reactants.split(",")]
    applications = apply(rxn, mols, args.mode or _default_mode(rxn))
    result = {"products": [a.smiles for a in applications]}
    if args.keep_discarded:
        result["discarded"] = [a.discarded_smiles for a in applications]
    return result


_OPS_TOKENS = {
    "spec": ("specialize",),
    "gen": ("generalize",),
    "perm": ("permute_within", "permute_between"),
    "comb": ("combine",),
}


def _parse_ops(text: str) -> frozenset[str]:
    kinds: set[str] = set()
    for token in text.split(","):
        token = token.strip()
        if token not in _OPS_TOKENS:
            raise argparse.ArgumentTypeError(
                f"unknown op token {token!r}; expected a comma-separated "
                f"subset of {', '.join(sorted(_OPS_TOKENS))}"
            )
        kinds.update(_OPS_TOKENS[token])
    return frozenset(kinds)


def _cmd_augment(args) -> list[dict]:
    rxn = parse_reaction(args.template)
    variants = enumerate_variants(
        rxn, allowed_kinds=args.ops, max_count=args.max, seed=args.seed
    )
    return [
        {
            "ops": "+".join(op.signature for op in variant.ops),
            "template": variant.provenance_text,
        }
        for variant in variants
    ]


def _cmd_gen_dataset(args) -> dict:
    cfg = GenerationConfig.from_file(args.config)
    if args.workers is not None:
        cfg = dataclasses.replace(cfg, workers=args.workers)
    result = generate(cfg)
    return {"paths": result.paths, "statistics": result.statistics}


def _cmd_aug_corpus(args) -> dict:
    registry = load_registry(args.registry) if args.registry else builtin_registry()
    path, stats = augment_corpus(args.in_path, registry, args.seed, out_path=args.out)
    return {"path": path, **stats}


def _cmd_scaffold_allowlist(args) -> dict:
    source = MoleculeSource(name=Path(args.molecules).stem, path=args.molecules)
    loaded = load_molecules(source)
    signatures = build_scaffold_allowlist(loaded.molecules)
    save_allowlist(signatures, args.out)
    return {
        "molecules": len(loaded),
        "skipped": loaded.skipped,
        "signatures": len(signatures),
        "out": args.out,
    }


def _cmd_tokenize(args) -> dict:
    records = read_records(args.records)
    vocab = Vocab.load(args.vocab)
    meta = encode_records(records, vocab, args.mode, args.out)
    return {
        "out": args.out,
        "mode": meta["mode"],
        "records": meta["records"],
        "examples": meta["examples"],
        "unknown": meta["unknown"],
        "vocab_size": meta["vocab_size"],
    }


def _cmd_build_vocab(args) -> dict:
    vocab = build_vocab(args.records)
    vocab.save(args.out)
    return {"tokens": len(vocab), "out": args.out}


def _cmd_eval(args) -> dict:
    return evaluate(args.pred, args.refs).to_obj()


# ---------------------------------------------------------------------------
# Parser assembly


def _add_mode_flags(parser: argparse.ArgumentParser) -> None:
    group = parser.add_mutually_exclusive_group()
    group.add_argument(
        "--intra",
        dest="mode",
        action="store_const",
        const="intra",
        help="components of the pattern may all bind one molecule",
    )
    group.add_argument(
        "--inter",
        dest="mode",
        action="store_const",
        const="inter",
        help="each pattern component binds a distinct molecule",
    )
    parser.set_defaults(mode=None)


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        "--pretty", action="store_true", help="indent JSON output for humans"
    )

    parser = _Parser(
        prog="rxnkit",
        description="Reaction-template engine and dataset toolchain.",
    )
    sub = parser.add_subparsers(
        dest="command", required=True, parser_class=_Parser, metavar="COMMAND"
    )

    p = sub.add_parser("canon", parents=[common], help="canonicalize a SMILES string")
    p.add_argument("--smiles", required=True, help="molecule to canonicalize")
    p.set_defaults(func=_cmd_canon)

    p = sub.add_parser("match", parents=[common], help="embed a pattern into molecules")
    p.add_argument("--smarts", required=True, help="pattern to match")
    p.add_argument(
        "--smiles", required=True, help="molecule, or comma-separated molecules"
    )
    _add_mode_flags(p)
    p.set_defaults(func=_cmd_match)

    p = sub.add_parser("apply", parents=[common], help="apply a reaction template")
    p.add_argument(
        "--template",
        required=True,
        help="built-in template id (number) or a reaction SMARTS string",
    )
    p.add_argument(
        "--reactants", required=True, help="comma-separated reactant SMILES"
    )
    p.add_argument(
        "--keep-discarded",
        action="store_true",
        help="also report the fragments each application discards",
    )
    _add_mode_flags(p)
    p.set_defaults(func=_cmd_apply)

    p = sub.add_parser(
        "augment", parents=[common], help="enumerate template variants"
    )
    p.add_argument("--template", required=True, help="reaction SMARTS to vary")
    p.add_argument(
        "--ops",
        type=_parse_ops,
        default=None,
        help="comma-separated subset of spec,gen,perm,comb (default: all)",
    )
    p.add_argument("--max", type=int, default=10, help="maximum variants to emit")
    p.add_argument("--seed", type=int, default=0, help="sampling seed")
    p.set_defaults(func=_cmd_augment)

    p = sub.add_parser(
        "gen-dataset", parents=[common], help="generate a dataset from a config file"
    )
    p.add_argument("--config", required=True, help="JSON generation config")
    p.add_argument(
        "--workers", type=int, default=None, help="override the configured worker count"
    )
    p.set_defaults(func=_cmd_gen_dataset)

    p = sub.add_parser(
        "aug-corpus",
        parents=[common],
        help="double a training record file with template-variant twins",
    )
    p.add_argument("--in", dest="in_path", required=True, help="input record file")
    p.add_argument("--seed", type=int, required=True, help="variant sampling seed")
    p.add_argument(
        "--registry", default=None, help="template registry file (default: built-ins)"
    )
    p.add_argument(
        "--out", default=None, help="output path (default: input with .aug.jsonl)"
    )
    p.set_defaults(func=_cmd_aug_corpus)

    p = sub.add_parser(
        "scaffold-allowlist",
        parents=[common],
        help="collect ring-system signatures from a molecule file",
    )
    p.add_argument(
        "--molecules", required=True, help="SMILES file (one molecule per line)"
    )
    p.add_argument("--out", required=True, help="signature file to write")
    p.set_defaults(func=_cmd_scaffold_allowlist)

    p = sub.add_parser(
        "tokenize", parents=[common], help="encode a record file to binary tensors"
    )
    p.add_argument("--records", required=True, help="record file to encode")
    p.add_argument("--vocab", required=True, help="vocabulary file")
    p.add_argument(
        "--mode",
        required=True,
        choices=("tb", "tf", "template-based", "template-free"),
        help="tb appends the template to the input; tf omits it",
    )
    p.add_argument("--out", required=True, help="output path prefix")
    p.set_defaults(func=_cmd_tokenize)

    p = sub.add_parser(
        "build-vocab", parents=[common], help="build a character vocabulary"
    )
    p.add_argument(
        "--records",
        required=True,
        nargs="+",
        help="record file(s) whose strings define the vocabulary",
    )
    p.add_argument("--out", required=True, help="vocabulary file to write")
    p.set_defaults(func=_cmd_build_vocab)

    p = sub.add_parser(
        "eval", parents=[common], help="score predictions against references"
    )
    p.add_argument("--pred", required=True, help="predictions, one SMILES per line")
    p.add_argument("--refs", required=True, help="reference record file")
    p.set_defaults(func=_cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if isinstance(exc.code, int):
            return exc.code
        return 0 if exc.code is None else 1
    try:
        result = args.func(args)
    except (RxnkitError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    for obj in result if isinstance(result, list) else [result]:
        _emit(obj, args.pretty)
    return 0


if __name__ == "__main__":
    sys.exit(main())
