"""Synthetic mapped-reaction corpora for tests and throughput checks.

Reactions are produced by applying simple two-component (or one-component)
transformations to building blocks. Each transformation names the reactive
atom and, optionally, a leaving atom in each reactant via a SMARTS pattern;
the product is assembled directly on the molecular graph, so the atom mapping
is exact by construction.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from typing import Iterator

from .chem.match import match_pattern
from .chem.molecule import Atom, Bond, BondOrder, ChiralTag, Molecule
from .chem.smarts import parse_smarts
from .chem.smiles import parse_smiles, write_smiles


@dataclass(frozen=True, slots=True)
class Site:
    """Reactive site: SMARTS, reactive query atom, optional leaving query atom."""

    smarts: str
    reactive: int
    leaving: int | None = None


@dataclass(frozen=True, slots=True)
class Transformation:
    name: str
    first: Site
    second: Site | None
    first_pool: str
    second_pool: str | None = None
    new_order: BondOrder = BondOrder.SINGLE


_SUBSTITUENTS = (
    "", "C", "CC", "OC", "F", "Cl", "C(F)(F)F", "C#N", "OC(F)(F)F", "C(C)C",
    "C(=O)OC", "N(C)C", "S(C)(=O)=O", "OCC", "C9CC9", "c9ccccc9", "[N+](=O)[O-]",
    "C(=O)C", "N9CCOCC9", "CO",
)


def _decorate(templates: tuple[str, ...]) -> list[str]:
    out = []
    for t in templates:
        for s in _SUBSTITUENTS:
            out.append(t.format(s=f"({s})" if s else ""))
    return out


BLOCKS: dict[str, list[str]] = {
    "acid": _decorate(("OC(=O)c1ccc{s}cc1", "OC(=O)c1cccc{s}c1", "OC(=O)Cc1ccc{s}cc1", "OC(=O)c1ccnc{s}c1"))
    + ["CC(=O)O", "OC(=O)C1CC1", "OC(=O)C1CCOCC1", "OC(=O)c1ccco1", "OC(=O)c1ccsc1", "C[C@H](N)C(=O)O"],
    "acyl_chloride": _decorate(("ClC(=O)c1ccc{s}cc1", "ClC(=O)Cc1cccc{s}c1")) + ["CC(=O)Cl", "O=C(Cl)C1CC1"],
    "amine": _decorate(("Nc1ccc{s}cc1", "NCc1ccc{s}cc1", "Nc1cccnc1{s}", "NCCc1cccc{s}c1"))
    + ["C1CCNCC1", "C1COCCN1", "CN1CCNCC1", "NC1CC1", "CCNCC", "NCC(F)(F)F", "NC1CCOCC1", "N[C@@H](C)c1ccccc1"],
    "alcohol": ["OCc1ccccc1", "CO", "CCO", "OCC1CC1", "OCCN1CCOCC1", "OC1CCCC1", "OCC#N", "OCCc1ccccc1"],
    "phenol": _decorate(("Oc1ccc{s}cc1", "Oc1cccc{s}c1")),
    "aryl_bromide": _decorate(("Brc1ccc{s}cc1", "Brc1cccc{s}c1", "Brc1ccc{s}nc1", "Brc1cnc{s}nc1")),
    "boronic_acid": _decorate(("OB(O)c1ccc{s}cc1",)) + ["OB(O)c1ccncc1", "OB(O)c1ccsc1", "OB(O)c1cnn(C)c1", "OB(O)/C=C/c1ccccc1"],
    "alkyl_bromide": ["BrCc1ccccc1", "BrCC#N", "BrCC(=O)OC", "BrCCOC", "BrCC1CC1", "BrCc1ccc(F)cc1", "BrCc1ccncc1", "CCBr"],
    "aldehyde": _decorate(("O=Cc1ccc{s}cc1",)) + ["CC(C)C=O", "O=CC1CCOCC1", "O=Cc1ccco1"],
    "sulfonyl_chloride": ["CS(=O)(=O)Cl", "Cc1ccc(S(=O)(=O)Cl)cc1", "O=S(=O)(Cl)c1cccs1", "O=S(=O)(Cl)c1ccc(F)cc1"],
    "boc_amine": _decorate(("CC(C)(C)OC(=O)Nc1ccc{s}cc1", "CC(C)(C)OC(=O)N1CCN(c2ccc{s}cc2)CC1")),
}

_ACID = Site("[CX3](=O)[OX2H1]", 0, 2)
_PRIMARY_OR_SECONDARY_AMINE = Site("[NX3;H2,H1;!$(NC=O)]", 0)

TRANSFORMATIONS: tuple[Transformation, ...] = (
    Transformation("amide_coupling", _ACID, Site("[NX3;H2,H1][#6]", 0), "acid", "amine"),
    Transformation("acyl_chloride_amidation", Site("[CX3](=O)Cl", 0, 2), Site("[NX3;H2,H1][#6]", 0), "acyl_chloride", "amine"),
    Transformation("esterification", _ACID, Site("[OX2H1][CX4]", 0), "acid", "alcohol"),
    Transformation("suzuki_coupling", Site("[c,n]Br", 0, 1), Site("[#6]B([OH])[OH]", 0, 1), "aryl_bromide", "boronic_acid"),
    Transformation("buchwald_amination", Site("cBr", 0, 1), Site("[NX3;H2,H1][#6]", 0), "aryl_bromide", "amine"),
    Transformation("n_alkylation", Site("[CX4]Br", 0, 1), Site("[NX3;H2,H1][#6]", 0), "alkyl_bromide", "amine"),
    Transformation("williamson_ether", Site("[CX4]Br", 0, 1), Site("c[OX2H1]", 1), "alkyl_bromide", "phenol"),
    Transformation("reductive_amination", Site("[CX3H1](=O)", 0, 1), Site("[NX3;H2,H1][#6]", 0), "aldehyde", "amine"),
    Transformation("sulfonamide_formation", Site("[SX4](=O)(=O)Cl", 0, 3), Site("[NX3;H2,H1][#6]", 0), "sulfonyl_chloride", "amine"),
    Transformation("boc_deprotection", Site("[NX3][CX3](=O)OC([CH3])([CH3])[CH3]", 0, 1), None, "boc_amine"),
)

_REAGENTS = ("", "", "CCN(CC)CC", "O=C([O-])[O-].[K+].[K+]", "ClCCl")

_site_cache: dict[str, object] = {}


def _site_matches(site: Site, mol: Molecule) -> list[tuple[int, ...]]:
    pattern = _site_cache.get(site.smarts)
    if pattern is None:
        # the package SMARTS subset has no recursion; strip the one guard used above
        pattern = _site_cache[site.smarts] = parse_smarts(site.smarts.replace(";!$(NC=O)", ""))
    return match_pattern(pattern, mol)


def _branch(mol: Molecule, start: int, blocked: int) -> set[int]:
    """Atoms reachable from ``start`` without passing through ``blocked``."""
    seen = {start}
    stack = [start]
    while stack:
        u = stack.pop()
        for v, _ in mol.neighbors(u):
            if v != blocked and v not in seen:
                seen.add(v)
                stack.append(v)
    return seen


def _reacting_part(mol: Molecule, site: Site, match: tuple[int, ...]) -> tuple[int, set[int], int]:
    """(reactive atom, atoms removed, bond order lost by the reactive atom)."""
    reactive = match[site.reactive]
    if site.leaving is None:
        return reactive, set(), 0
    leaving = match[site.leaving]
    bond = mol.bond_between(reactive, leaving)
    removed = _branch(mol, leaving, reactive)
    if reactive in removed:
        raise ValueError("leaving group is in a ring with the reactive atom")
    return reactive, removed, bond.order.valence_units


def combine(
    parts: list[tuple[Molecule, int, set[int], int]], new_order: BondOrder
) -> tuple[list[Molecule], Molecule]:
    """Assemble the product and return (mapped reactants, mapped product).

    Each part is ``(molecule, reactive atom, removed atoms, lost order)``; with
    two parts a new bond joins the reactive atoms.
    """
    atoms: list[Atom] = []
    bonds: list[Bond] = []
    stereo_order: dict[int, tuple[int, ...]] = {}
    bond_stereo: dict = {}
    new_index: list[dict[int, int]] = []
    reactive_new = []
    gained = new_order.valence_units if len(parts) == 2 else 0
    for mol, reactive, removed, lost in parts:
        index: dict[int, int] = {}
        for i, atom in enumerate(mol.atoms):
            if i in removed:
                continue
            index[i] = len(atoms)
            if i == reactive:
                h = atom.explicit_h + lost - gained
                if h < 0:
                    raise ValueError("reactive atom has too few hydrogens")
                atom = replace(atom, explicit_h=h, chiral_tag=ChiralTag.NONE)
            atoms.append(atom)
        bond_index: dict[int, int] = {}
        for bi, b in enumerate(mol.bonds):
            if b.a in index and b.b in index:
                bond_index[bi] = len(bonds)
                bonds.append(Bond(index[b.a], index[b.b], b.order, b.in_ring))
        for i, order in mol.stereo_order.items():
            if i == reactive or i not in index or any(j >= 0 and j not in index for j in order):
                if i in index:
                    k = index[i]
                    atoms[k] = replace(atoms[k], chiral_tag=ChiralTag.NONE)
                continue
            stereo_order[index[i]] = tuple(-1 if j < 0 else index[j] for j in order)
        for bi, st in mol.bond_stereo.items():
            if bi in bond_index and st.ref_a in index and st.ref_b in index:
                bond_stereo[bond_index[bi]] = replace(st, ref_a=index[st.ref_a], ref_b=index[st.ref_b])
        new_index.append(index)
        reactive_new.append(index[reactive])
    if len(parts) == 2:
        bonds.append(Bond(reactive_new[0], reactive_new[1], new_order, False))
    maps = [k + 1 for k in range(len(atoms))]
    product = Molecule([replace(a, map_number=m) for a, m in zip(atoms, maps)], bonds, "", stereo_order, bond_stereo)
    reactants = []
    for (mol, _, _, _), index in zip(parts, new_index):
        reactants.append(mol.with_map_numbers([index[i] + 1 if i in index else 0 for i in range(mol.n_atoms)]))
    return reactants, product


def _molecule(smiles: str, cache: dict) -> Molecule:
    mol = cache.get(smiles)
    if mol is None:
        mol = cache[smiles] = parse_smiles(smiles)
    return mol


def _apply(t: Transformation, a_smiles: str, b_smiles: str | None, cache: dict) -> str | None:
    a = _molecule(a_smiles, cache)
    ma = _site_matches(t.first, a)
    if not ma:
        return None
    parts = []
    try:
        parts.append((a, *_reacting_part(a, t.first, ma[0])))
        if t.second is not None:
            b = _molecule(b_smiles, cache)
            mb = _site_matches(t.second, b)
            if not mb:
                return None
            parts.append((b, *_reacting_part(b, t.second, mb[0])))
        reactants, product = combine(parts, t.new_order)
    except ValueError:
        return None
    left = ".".join(write_smiles(m, canonical=False) for m in reactants)
    return f"{left}>>{write_smiles(product, canonical=False)}"


def generate_corpus(n: int, seed: int = 0, with_reagents: bool = True) -> list[tuple[str, str]]:
    """``n`` distinct mapped reactions as ``(reaction SMILES, doc ref)`` pairs.

    Raises:
        ValueError: The building-block space cannot supply ``n`` distinct
            reactions.
    """
    rng = random.Random(seed)
    cache: dict = {}
    seen: set[str] = set()
    out: list[tuple[str, str]] = []
    attempts = 0
    while len(out) < n:
        attempts += 1
        if attempts > 50 * n + 1000:
            raise ValueError(f"could only generate {len(out)} distinct reactions")
        t = rng.choice(TRANSFORMATIONS)
        a = rng.choice(BLOCKS[t.first_pool])
        b = rng.choice(BLOCKS[t.second_pool]) if t.second_pool else None
        text = _apply(t, a, b, cache)
        if text is None or text in seen:
            continue
        seen.add(text)
        if with_reagents:
            reagent = rng.choice(_REAGENTS)
            if reagent:
                left, _, right = text.partition(">>")
                text = f"{left}>{reagent}>{right}"
        out.append((text, f"SYN-{t.name}-{len(out):06d}"))
    return out


def iter_corpus_lines(n: int, seed: int = 0) -> Iterator[str]:
    for text, ref in generate_corpus(n, seed):
        yield f"{text}\t{ref}"


def apply_transformation(name: str, first: str, second: str | None = None) -> str:
    """Mapped reaction SMILES for one named transformation, for fixtures.

    Raises:
        KeyError: Unknown transformation.
        ValueError: The building blocks lack the required reactive sites.
    """
    t = {x.name: x for x in TRANSFORMATIONS}[name]
    text = _apply(t, first, second, {})
    if text is None:
        raise ValueError(f"{name} does not apply to {first!r}, {second!r}")
    return text
