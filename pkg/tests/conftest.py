import json
from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def pool():
    """Frozen 10k molecule fixture, one canonical SMILES per line."""
    return (DATA / "pool_10k.smi").read_text().splitlines()


@pytest.fixture(scope="session")
def apply_fixtures():
    with open(DATA / "apply_fixtures.json") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def registry():
    from rxnkit.rxn import builtin_registry

    return builtin_registry()
