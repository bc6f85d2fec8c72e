from __future__ import annotations

import networkx as nx
import pytest

from chemcensor.chem.smiles import parse_smiles
from conftest import corpus_reactions, to_graph

RINGED = [
    "C1CC1",
    "c1ccc2ccccc2c1",
    "C1CC2CCC1CC2",
    "c1ccc2c(c1)ccc1ccccc12",
    "C1CC11CC1",
    "C12C3C4C1C5C2C3C45",
    "O=C1CCCN1",
    "c1ccc(cc1)-c1ccncc1",
    "C1CCC2(CC1)OCCO2",
]


def test_acyclic_has_no_rings():
    assert parse_smiles("CCO").rings == ()


def test_cyclopropane():
    rings = parse_smiles("C1CC1").rings
    assert len(rings) == 1 and len(rings[0]) == 3


def test_naphthalene_two_fused_rings():
    mol = parse_smiles("c1ccc2ccccc2c1")
    rings = mol.rings
    assert sorted(len(r) for r in rings) == [6, 6]
    shared = set(rings[0]) & set(rings[1])
    assert len(shared) == 2
    a, b = shared
    assert mol.bond_index(a, b) is not None


def _oracle_sizes(mol) -> list[int]:
    return sorted(len(c) for c in nx.minimum_cycle_basis(to_graph(mol)))


@pytest.mark.parametrize("smi", RINGED)
def test_ring_sizes_match_minimum_cycle_basis(smi):
    mol = parse_smiles(smi)
    assert sorted(len(r) for r in mol.rings) == _oracle_sizes(mol)


def test_ring_sizes_on_fixture_molecules():
    for rxn in corpus_reactions()[:60]:
        for part in rxn.replace(">>", ".").replace(">", ".").split("."):
            if not part:
                continue
            mol = parse_smiles(part)
            assert sorted(len(r) for r in mol.rings) == _oracle_sizes(mol), part


def test_ring_membership_flags():
    mol = parse_smiles("c1ccccc1CC1CC1")
    in_ring = [a.in_ring for a in mol.atoms]
    assert in_ring == [True] * 6 + [False] + [True] * 3
    g = to_graph(mol)
    bridges = {frozenset(e) for e in nx.bridges(g)}
    for b in mol.bonds:
        assert b.in_ring == (frozenset((b.a, b.b)) not in bridges)


def test_every_ring_is_a_cycle():
    for smi in RINGED:
        mol = parse_smiles(smi)
        for ring in mol.rings:
            for i, a in enumerate(ring):
                assert mol.bond_index(a, ring[(i + 1) % len(ring)]) is not None
