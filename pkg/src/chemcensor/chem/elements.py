"""Periodic-table symbols and the organic-subset valence model."""

from __future__ import annotations

SYMBOLS = (
    "H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni "
    "Cu Zn Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe "
    "Cs Ba La Ce Pr Nd Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg "
    "Tl Pb Bi Po At Rn Fr Ra Ac Th Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg "
    "Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og"
).split()

ATOMIC_NUMBER = {sym: i + 1 for i, sym in enumerate(SYMBOLS)}
ELEMENTS = frozenset(SYMBOLS)

# Organic subset: atoms that may be written without brackets.
DEFAULT_VALENCES: dict[str, tuple[int, ...]] = {
    "B": (3,),
    "C": (4,),
    "N": (3,),
    "O": (2,),
    "P": (3, 5),
    "S": (2, 4, 6),
    "F": (1,),
    "Cl": (1,),
    "Br": (1,),
    "I": (1,),
}

ORGANIC_SUBSET = frozenset(DEFAULT_VALENCES)
AROMATIC_ORGANIC = frozenset({"b", "c", "n", "o", "p", "s"})
# Lowercase symbols accepted inside brackets.
AROMATIC_BRACKET = frozenset({"b", "c", "n", "o", "p", "s", "se", "as", "te", "si"})


def atomic_number(symbol: str) -> int:
    """Atomic number for an element symbol; 0 for the wildcard or unknown."""
    return ATOMIC_NUMBER.get(symbol, 0)


def implicit_h_count(element: str, aromatic: bool, bond_sum: int) -> int:
    """Implicit hydrogens for an organic-subset atom.

    ``bond_sum`` counts aromatic bonds as 1; aromatic atoms reserve one extra
    valence unit for the delocalized system.

    Raises:
        ValueError: ``bond_sum`` exceeds every allowed valence.
    """
    valences = DEFAULT_VALENCES[element]
    if aromatic:
        if bond_sum > valences[-1]:
            raise ValueError(f"{element.lower()} has bond order sum {bond_sum}")
        return max(0, valences[0] - bond_sum - 1)
    for v in valences:
        if bond_sum <= v:
            return v - bond_sum
    raise ValueError(f"{element} has bond order sum {bond_sum}")
