"""Molecular-graph kernel: SMILES/SMARTS parsing, canonical ranking, rings, matching."""

from .canon import canonical_ranks
from .match import match_pattern
from .molecule import Atom, Bond, BondOrder, ChiralTag, DoubleBondStereo, Molecule
from .rings import perceive_rings
from .smarts import QueryPattern, parse_smarts
from .smiles import parse_smiles, randomize_traversal, write_smiles

__all__ = [
    "Atom",
    "Bond",
    "BondOrder",
    "ChiralTag",
    "DoubleBondStereo",
    "Molecule",
    "QueryPattern",
    "canonical_ranks",
    "match_pattern",
    "parse_smarts",
    "parse_smiles",
    "perceive_rings",
    "randomize_traversal",
    "write_smiles",
]
