"""Element tables shared by the SMILES and SMARTS machinery.

Atomic numbers are used everywhere internally; symbols only appear at the
text boundary.  Element 0 is the wildcard atom ``*`` (used by scaffold
signatures), it carries no valence rules.
"""
from __future__ import annotations

SYMBOLS: dict[int, str] = {
    0: "*",
    1: "H", 2: "He",
    3: "Li", 4: "Be", 5: "B", 6: "C", 7: "N", 8: "O", 9: "F", 10: "Ne",
    11: "Na", 12: "Mg", 13: "Al", 14: "Si", 15: "P", 16: "S", 17: "Cl", 18: "Ar",
    19: "K", 20: "Ca", 21: "Sc", 22: "Ti", 23: "V", 24: "Cr", 25: "Mn", 26: "Fe",
    27: "Co", 28: "Ni", 29: "Cu", 30: "Zn", 31: "Ga", 32: "Ge", 33: "As",
    34: "Se", 35: "Br", 36: "Kr",
    37: "Rb", 38: "Sr", 39: "Y", 40: "Zr", 41: "Nb", 42: "Mo", 43: "Tc",
    44: "Ru", 45: "Rh", 46: "Pd", 47: "Ag", 48: "Cd", 49: "In", 50: "Sn",
    51: "Sb", 52: "Te", 53: "I", 54: "Xe",
}

NUMBERS: dict[str, int] = {sym: num for num, sym in SYMBOLS.items()}

# Symbols that may appear outside brackets in SMILES.
ORGANIC_SUBSET: frozenset[str] = frozenset(
    {"B", "C", "N", "O", "P", "S", "F", "Cl", "Br", "I"}
)

# Lowercase symbols accepted as aromatic atoms, inside or outside brackets.
AROMATIC_SYMBOLS: frozenset[str] = frozenset({"b", "c", "n", "o", "p", "s"})

# Default valence alternatives, smallest first.  Elements not listed carry no
# implicit hydrogens and skip valence validation.
DEFAULT_VALENCES: dict[int, tuple[int, ...]] = {
    1: (1,),
    5: (3,),
    6: (4,),
    7: (3,),
    8: (2,),
    9: (1,),
    15: (3, 5),
    16: (2, 4, 6),
    17: (1,),
    35: (1,),
    53: (1,),
}

# Elements eligible for aromaticity perception.
SP2_CAPABLE: frozenset[int] = frozenset({6, 7, 8, 16})

# Heteroatoms that can donate a lone pair to an aromatic pi system.
LONE_PAIR_DONORS: frozenset[int] = frozenset({7, 8, 16})


def allowed_valences(element: int, charge: int) -> tuple[int, ...]:
    """Valences an atom may use, adjusted for formal charge.

    Returns an empty tuple when no valence rules exist for the element, in
    which case callers skip hydrogen inference and validation.
    """
    base = DEFAULT_VALENCES.get(element)
    if base is None:
        return ()
    if charge == 0:
        return base
    if element == 6:
        shift = -abs(charge)
    elif element == 5:
        shift = -charge
    else:
        # N, O, P, S, halogens, H: valence moves with the charge sign.
        shift = charge
    return tuple(v + shift for v in base if v + shift >= 0)


def symbol_for(element: int) -> str:
    try:
        return SYMBOLS[element]
    except KeyError:
        raise ValueError(f"unknown atomic number {element}") from None
