from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemcensor.chem.canon import canonical_ranks
from chemcensor.chem.molecule import BondOrder
from chemcensor.chem.smiles import parse_smiles, randomize_traversal, write_smiles
from chemcensor.exceptions import SmilesSyntaxError, ValenceError
from conftest import corpus_reactions, isomorphic

MOLECULES = [
    "C",
    "CCO",
    "c1ccccc1C(=O)O",
    "CC(=O)Nc1ccc(O)cc1",
    "C[C@H](N)C(=O)O",
    "C[C@@H](N)C(=O)O",
    "F/C=C/F",
    "F/C=C\\F",
    "c1ccc2ccccc2c1",
    "O=C([O-])[O-].[K+].[K+]",
    "CN1CCOCC1",
    "[13CH4]",
    "c1ccncc1",
    "c1cc[nH]c1",
    "CC(C)(C)OC(=O)N1CCC(CC1)C#N",
    "Brc1ccc(cc1)-c1ccncc1",
    "C1CC2CCC1CC2",
    "OB(O)c1ccccc1",
    "[Na+].[Cl-]",
]


def _fixture_molecules() -> list[str]:
    out = []
    for rxn in corpus_reactions()[:40]:
        for side in rxn.split(">"):
            out.extend(p for p in side.split(".") if p)
    return out


def test_single_carbon():
    mol = parse_smiles("C")
    assert mol.n_atoms == 1
    assert mol.atoms[0].explicit_h == 4
    assert len(mol.bonds) == 0


def test_ethanol_h_counts():
    mol = parse_smiles("CCO")
    assert mol.elements == ("C", "C", "O")
    assert [b.order for b in mol.bonds] == [BondOrder.SINGLE, BondOrder.SINGLE]
    assert [a.explicit_h for a in mol.atoms] == [3, 2, 1]


def test_benzene():
    mol = parse_smiles("c1ccccc1")
    assert mol.n_atoms == 6
    assert all(a.aromatic and a.element == "C" and a.in_ring for a in mol.atoms)
    assert len(mol.bonds) == 6
    assert all(b.order is BondOrder.AROMATIC and b.in_ring for b in mol.bonds)
    assert [a.explicit_h for a in mol.atoms] == [1] * 6


@pytest.mark.parametrize("bad", ["C(", "C)", "C1CC", "[CH4", "C==C", "", "Xx", "c1cc"])
def test_syntax_errors(bad):
    with pytest.raises(SmilesSyntaxError):
        parse_smiles(bad)


def test_organic_valence_violation():
    with pytest.raises(ValenceError):
        parse_smiles("C(C)(C)(C)(C)C")


def test_bracket_atom_fields():
    mol = parse_smiles("[13CH3:7][N+](C)(C)C")
    a = mol.atoms[0]
    assert (a.isotope, a.explicit_h, a.map_number) == (13, 3, 7)
    assert mol.atoms[1].formal_charge == 1


def test_canonical_is_order_independent():
    assert write_smiles(parse_smiles("OCC")) == write_smiles(parse_smiles("CCO"))
    assert write_smiles(parse_smiles("C")) == "C"


def test_symmetric_ranks_are_tie_broken():
    assert sorted(canonical_ranks(parse_smiles("CC"))) == [0, 1]


def test_oxygen_rank_stable_under_permutation():
    from itertools import permutations

    mol = parse_smiles("CCO")
    seen = set()
    for order in permutations(range(3)):
        p = mol.permuted(order)
        o = p.elements.index("O")
        seen.add(canonical_ranks(p)[o])
    assert len(seen) == 1


@pytest.mark.parametrize("smi", MOLECULES)
def test_round_trip_isomorphic(smi):
    mol = parse_smiles(smi)
    again = parse_smiles(write_smiles(mol))
    assert isomorphic(mol, again)
    assert write_smiles(again) == write_smiles(mol)


def test_round_trip_fixture_molecules():
    for smi in _fixture_molecules():
        mol = parse_smiles(smi)
        again = parse_smiles(write_smiles(mol))
        assert isomorphic(mol, again), smi
        assert write_smiles(again) == write_smiles(mol)


def test_randomized_output_reparses_isomorphic():
    mol = parse_smiles("CCO")
    for seed in range(10):
        assert isomorphic(parse_smiles(randomize_traversal(mol, seed)), mol)
    assert randomize_traversal(mol, 3) == randomize_traversal(mol, 3)


def test_randomized_output_varies():
    mol = parse_smiles("c1ccccc1C(=O)O")
    assert len({randomize_traversal(mol, s) for s in range(20)}) >= 2


def test_stereo_survives_canonicalization():
    left = write_smiles(parse_smiles("C[C@H](N)C(=O)O"))
    right = write_smiles(parse_smiles("C[C@@H](N)C(=O)O"))
    assert left != right
    assert write_smiles(parse_smiles("N[C@@H](C)C(=O)O")) == left
    assert write_smiles(parse_smiles("F/C=C/F")) != write_smiles(parse_smiles("F/C=C\\F"))
    assert write_smiles(parse_smiles("F\\C=C\\F")) == write_smiles(parse_smiles("F/C=C/F"))


def test_double_bond_markers_do_not_leak_input_order():
    trans = ["F/C=C/c1ccccc1Br", "F\\C=C\\c1ccccc1Br", "C(=C\\F)/c1ccccc1Br", "Brc1ccccc1/C=C/F"]
    cis = ["F/C=C\\c1ccccc1Br", "Brc1ccccc1/C=C\\F", "C(=C/F)/c1ccccc1Br"]
    assert len({write_smiles(parse_smiles(t)) for t in trans}) == 1
    assert len({write_smiles(parse_smiles(t)) for t in cis}) == 1
    assert write_smiles(parse_smiles(trans[0])) != write_smiles(parse_smiles(cis[0]))


def test_conjugated_diene_canonical_across_spellings():
    mol = parse_smiles("C/C=C/C=C\\Cl")
    want = write_smiles(mol)
    assert {write_smiles(parse_smiles(randomize_traversal(mol, s))) for s in range(40)} == {want}


@settings(max_examples=150, deadline=None)
@given(st.sampled_from(MOLECULES + _fixture_molecules()), st.integers(0, 2**32 - 1))
def test_canonical_invariant_under_rewriting(smi, seed):
    mol = parse_smiles(smi)
    rewritten = randomize_traversal(mol, seed)
    assert write_smiles(parse_smiles(rewritten)) == write_smiles(mol)


@settings(max_examples=100, deadline=None)
@given(st.sampled_from(MOLECULES + _fixture_molecules()), st.randoms(use_true_random=False))
def test_canonical_invariant_under_atom_permutation(smi, rnd):
    mol = parse_smiles(smi)
    order = list(range(mol.n_atoms))
    rnd.shuffle(order)
    assert write_smiles(mol.permuted(order)) == write_smiles(mol)


def test_without_maps_drops_map_text():
    mol = parse_smiles("[CH3:1][OH:2]")
    assert write_smiles(mol, include_maps=False) == write_smiles(parse_smiles("CO"))
    assert ":1]" in write_smiles(mol)


def test_seeded_randomization_is_deterministic():
    rng = random.Random(0)
    mol = parse_smiles("CC(=O)Nc1ccc(O)cc1")
    seeds = [rng.randrange(10**6) for _ in range(5)]
    assert [randomize_traversal(mol, s) for s in seeds] == [randomize_traversal(mol, s) for s in seeds]
