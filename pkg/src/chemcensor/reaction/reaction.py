"""Reaction SMILES parsing and atom-map validation."""

from __future__ import annotations

from dataclasses import dataclass

from ..chem.molecule import Molecule
from ..chem.smiles import parse_smiles, write_smiles
from ..exceptions import MapError, SmilesSyntaxError


@dataclass(frozen=True, slots=True)
class Reaction:
    """Reactant, reagent and product molecules of one transformation.

    Attributes:
        reactants: Left-side molecules that contribute mapped atoms to a
            product (all left-side molecules while the reaction is unmapped).
        reagents: Left-side molecules that contribute no mapped atoms.
        products: Right-side molecules.
        mapped: True when at least one map number occurs on both sides.
        text: The reaction SMILES this object was parsed from.
    """

    reactants: tuple[Molecule, ...]
    reagents: tuple[Molecule, ...]
    products: tuple[Molecule, ...]
    mapped: bool
    text: str = ""

    def side(self, which: int) -> tuple[Molecule, ...]:
        """Reactants for ``which == 0``, products for ``which == 1``."""
        return self.reactants if which == 0 else self.products

    def to_smiles(self, include_maps: bool = True) -> str:
        def join(mols):
            return ".".join(write_smiles(m, include_maps=include_maps) for m in mols)

        return f"{join(self.reactants)}>{join(self.reagents)}>{join(self.products)}"


def split_components(text: str) -> list[str]:
    """Split a '.'-separated SMILES into component strings."""
    if not text:
        return []
    parts = text.split(".")
    if any(not p for p in parts):
        raise SmilesSyntaxError("empty component", text)
    return parts


def _map_table(mols: tuple[Molecule, ...], side: str) -> dict[int, tuple[int, int]]:
    table: dict[int, tuple[int, int]] = {}
    for mi, mol in enumerate(mols):
        for ai, atom in enumerate(mol.atoms):
            m = atom.map_number
            if not m:
                continue
            if m in table:
                raise MapError(f"duplicate map number {m} among {side}")
            table[m] = (mi, ai)
    return table


def assemble_reaction(
    left: list[Molecule], reagents: list[Molecule], products: list[Molecule], text: str = ""
) -> Reaction:
    """Assign roles and validate the atom mapping.

    A left-side molecule is a reactant when it shares a map number with the
    products; molecules without shared maps are reagents. Without any shared
    map number the reaction is unmapped and every left-side molecule from the
    reactant field stays a reactant.

    Raises:
        MapError: Duplicate map numbers on one side, an element mismatch
            between mapped counterparts, or a mapped product atom without a
            reactant counterpart.
    """
    left_all = tuple(left) + tuple(reagents)
    products_t = tuple(products)
    lmap = _map_table(left_all, "reactants")
    rmap = _map_table(products_t, "products")
    shared = lmap.keys() & rmap.keys()
    if not shared:
        return Reaction(tuple(left), tuple(reagents), products_t, False, text)
    for m, (mi, ai) in rmap.items():
        if m not in lmap:
            raise MapError(f"product map number {m} has no reactant counterpart")
        li, la = lmap[m]
        e_left = left_all[li].atoms[la].element
        e_right = products_t[mi].atoms[ai].element
        if e_left != e_right:
            raise MapError(f"map number {m} is {e_left} among reactants but {e_right} among products")
    contributing = {lmap[m][0] for m in shared}
    reactants = tuple(mol for i, mol in enumerate(left_all) if i in contributing)
    reagents_out = tuple(mol for i, mol in enumerate(left_all) if i not in contributing)
    return Reaction(reactants, reagents_out, products_t, True, text)


def parse_reaction(text: str) -> Reaction:
    """Parse ``reactants>reagents>products`` (or ``reactants>>products``).

    Raises:
        SmilesSyntaxError: Wrong number of '>' separators, an empty reactant
            or product side, or malformed component SMILES.
        ValenceError: A component violates organic-subset valences.
        MapError: See :func:`assemble_reaction`.
    """
    text = text.strip()
    parts = text.split(">")
    if len(parts) != 3:
        raise SmilesSyntaxError("reaction SMILES needs exactly two '>' separators", text)
    left_txt, mid_txt, right_txt = (p.strip() for p in parts)
    if not left_txt:
        raise SmilesSyntaxError("empty reactant side", text)
    if not right_txt:
        raise SmilesSyntaxError("empty product side", text)
    left = [parse_smiles(s) for s in split_components(left_txt)]
    reagents = [parse_smiles(s) for s in split_components(mid_txt)]
    products = [parse_smiles(s) for s in split_components(right_txt)]
    return assemble_reaction(left, reagents, products, text)
