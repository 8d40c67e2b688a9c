"""Reaction-template engine and dataset toolchain.

Public API re-exports; see the module docstrings for details.
"""
from .augment import (
    OP_KINDS,
    AugmentationOp,
    AugmentedTemplate,
    Site,
    enumerate_variants,
)
from .dataset import (
    SPLITS,
    DatasetRecord,
    GenerationConfig,
    GenerationResult,
    LoadResult,
    MoleculeSource,
    augment_corpus,
    augment_inputs,
    build_scaffold_allowlist,
    filter_product,
    generate,
    load_allowlist,
    load_forbidden,
    load_molecules,
    read_records,
    save_allowlist,
    scaffold_signatures,
    write_records,
)
from .encode import (
    BOS,
    EOS,
    PAD,
    SEP,
    SPECIAL_TOKENS,
    TYPE_PAD,
    TYPE_PRODUCT,
    TYPE_REACTANT,
    TYPE_REACTION,
    TYPE_SPECIAL,
    UNK,
    TokenSequence,
    Vocab,
    build_vocab,
    decode,
    encode_input,
    encode_records,
    encode_target,
    load_encoded,
)
from .errors import (
    AugmentError,
    DataError,
    KekulizeError,
    ReactionError,
    RxnkitError,
    SmartsError,
    SmilesError,
    ValenceError,
)
from .evalkit import EvalReport, evaluate, exact_match
from .molgraph import (
    AROMATIC,
    DOUBLE,
    SINGLE,
    TRIPLE,
    Atom,
    Bond,
    Molecule,
    kekulize,
    parse_smiles,
    permuted,
    randomized_smiles,
    write_canonical,
)
from .rxn import (
    BUILTIN_TEMPLATES,
    Application,
    Registry,
    SmartsReaction,
    apply,
    apply_smiles,
    builtin_registry,
    load_registry,
    parse_reaction,
    save_registry,
    write_reaction,
)
from .smarts import Embedding, PatternGraph, match, parse_smarts, write_pattern

__version__ = "0.1.0"

__all__ = [
    "AROMATIC",
    "Application",
    "Atom",
    "AugmentError",
    "AugmentationOp",
    "AugmentedTemplate",
    "BOS",
    "BUILTIN_TEMPLATES",
    "Bond",
    "DOUBLE",
    "DataError",
    "DatasetRecord",
    "Embedding",
    "EOS",
    "EvalReport",
    "GenerationConfig",
    "GenerationResult",
    "KekulizeError",
    "LoadResult",
    "Molecule",
    "MoleculeSource",
    "OP_KINDS",
    "PAD",
    "PatternGraph",
    "ReactionError",
    "Registry",
    "RxnkitError",
    "SEP",
    "SINGLE",
    "SPECIAL_TOKENS",
    "SPLITS",
    "SmartsError",
    "SmartsReaction",
    "SmilesError",
    "Site",
    "TRIPLE",
    "TYPE_PAD",
    "TYPE_PRODUCT",
    "TYPE_REACTANT",
    "TYPE_REACTION",
    "TYPE_SPECIAL",
    "TokenSequence",
    "UNK",
    "ValenceError",
    "Vocab",
    "apply",
    "apply_smiles",
    "augment_corpus",
    "augment_inputs",
    "build_scaffold_allowlist",
    "build_vocab",
    "builtin_registry",
    "decode",
    "encode_input",
    "encode_records",
    "encode_target",
    "enumerate_variants",
    "evaluate",
    "exact_match",
    "filter_product",
    "generate",
    "kekulize",
    "load_allowlist",
    "load_encoded",
    "load_forbidden",
    "load_molecules",
    "load_registry",
    "match",
    "parse_reaction",
    "parse_smarts",
    "parse_smiles",
    "permuted",
    "randomized_smiles",
    "read_records",
    "save_allowlist",
    "save_registry",
    "scaffold_signatures",
    "write_canonical",
    "write_pattern",
    "write_reaction",
    "write_records",
    "__version__",
]
