from __future__ import annotations

import random
import time
from itertools import product

import pytest
from networkx.algorithms.isomorphism import GraphMatcher

from chemcensor.chem.match import has_match, match_pattern
from chemcensor.chem.smarts import parse_smarts
from chemcensor.chem.smiles import parse_smiles
from chemcensor.exceptions import SmilesSyntaxError, UnsupportedFeature
from chemcensor.reaction.fg import FGLibrary
from conftest import corpus_reactions, to_graph


def brute_force(pattern, mol) -> list[tuple[int, ...]]:
    """Every injective assignment satisfying all atom and bond predicates."""
    nq = len(pattern.atoms)
    pools = [[i for i in range(mol.n_atoms) if qa.test(mol, i)] for qa in pattern.atoms]
    best: dict[frozenset, tuple] = {}
    for m in product(*pools):
        if len(set(m)) != nq:
            continue
        ok = True
        for qb in pattern.bonds:
            bi = mol.bond_index(m[qb.a], m[qb.b])
            if bi is None or not qb.test(mol.bonds[bi]):
                ok = False
                break
        if ok:
            key = frozenset(m)
            if key not in best or m < best[key]:
                best[key] = m
    return sorted(best.values())


def _small_molecules(limit: int = 12) -> list[str]:
    seen = {}
    for rxn in corpus_reactions():
        for part in rxn.replace(">>", ".").replace(">", ".").split("."):
            if part and part not in seen:
                mol = parse_smiles(part)
                if mol.n_atoms <= limit:
                    seen[part] = mol
    extra = ["CC(=O)O", "OCC(=O)OC", "c1ccncc1C#N", "CC(C)(C)OC(=O)NC", "O=S(=O)(Cl)c1ccccc1", "ClCCBr", "C=CC(=O)N"]
    for smi in extra:
        seen[smi] = parse_smiles(smi)
    return sorted(seen)


def oracle_pairs(n: int = 50) -> list[tuple[str, str]]:
    """Deterministic pattern/molecule pairs, half of them with at least one hit."""
    lib = FGLibrary.default()
    mols = _small_molecules()
    rng = random.Random(1234)
    hits, misses = [], []
    while len(hits) < n // 2 or len(misses) < n - n // 2:
        d = rng.choice(lib.definitions)
        smi = rng.choice(mols)
        pat = parse_smarts(d.smarts)
        if len(pat.atoms) > 12:
            continue
        bucket = hits if has_match(pat, parse_smiles(smi)) else misses
        target = n // 2 if bucket is hits else n - n // 2
        if len(bucket) < target:
            bucket.append((d.smarts, smi))
    return hits + misses


def test_simple_query_atoms():
    assert len(parse_smarts("[OH]").atoms) == 1
    pat = parse_smarts("C(=O)[OH]")
    assert len(pat.atoms) == 3 and len(pat.bonds) == 2


def test_recursive_smarts_unsupported():
    with pytest.raises(UnsupportedFeature):
        parse_smarts("[$(CC)]")


def test_disconnected_smarts_unsupported():
    with pytest.raises(UnsupportedFeature):
        parse_smarts("C.C")


def test_malformed_smarts():
    with pytest.raises(SmilesSyntaxError):
        parse_smarts("[C")


def test_oxygen_match():
    assert match_pattern(parse_smarts("O"), parse_smiles("CCO")) == [(2,)]


def test_carbon_matches():
    assert match_pattern(parse_smarts("C"), parse_smiles("CCO")) == [(0,), (1,)]


def test_carboxylic_acid_match():
    mol = parse_smiles("CC(=O)O")
    hits = match_pattern(parse_smarts("C(=O)[OH]"), mol)
    assert hits == brute_force(parse_smarts("C(=O)[OH]"), mol)
    assert [set(h) for h in hits] == [{1, 2, 3}]


@pytest.mark.parametrize(
    "smarts, smiles, expected",
    [
        ("[#6]~[#7]", "CN", 1),
        ("c", "c1ccccc1", 6),
        ("[R]", "C1CC1C", 3),
        ("[!#6]", "CCOCN", 2),
        ("[C,N;H2]", "CCNC", 1),
        ("[CX4;H3]", "CC(C)C", 3),
        ("[r5]", "C1CCCC1C1CC1", 5),
        ("[+1]", "C[N+](C)(C)C", 1),
        ("[D3]", "CC(C)C", 1),
        ("C@C", "C1CC1CC", 3),
        ("[a]:[a]", "c1ccccc1", 6),
        ("C=,#C", "C=CC#C", 2),
        ("[x2]", "C1CC1C", 3),
        ("[v4]", "CO", 1),
    ],
)
def test_primitive_semantics(smarts, smiles, expected):
    pat = parse_smarts(smarts)
    mol = parse_smiles(smiles)
    hits = match_pattern(pat, mol)
    assert len(hits) == expected
    assert hits == brute_force(pat, mol)


def test_matches_equal_brute_force():
    pairs = oracle_pairs()
    assert len(pairs) == 50
    start = time.perf_counter()
    for smarts, smi in pairs:
        pat, mol = parse_smarts(smarts), parse_smiles(smi)
        assert match_pattern(pat, mol) == brute_force(pat, mol), (smarts, smi)
    assert time.perf_counter() - start < 10


def test_element_only_patterns_match_networkx():
    """Pure element/aromatic/bond-order patterns against an independent monomorphism search."""
    cases = [
        ("CC(=O)O", "CC(=O)OCC(=O)O"),
        ("c1ccccc1", "c1ccc2ccccc2c1"),
        ("CN", "CN(C)CCN"),
        ("C=O", "O=CC(=O)C=O"),
        ("c1ccncc1", "c1ccc2ncccc2c1"),
    ]
    for q, m in cases:
        pat = parse_smarts(q)
        qmol, mol = parse_smiles(q), parse_smiles(m)
        gm = GraphMatcher(
            to_graph(mol),
            to_graph(qmol),
            node_match=lambda a, b: a["label"][:2] == b["label"][:2],
            edge_match=lambda a, b: a["order"] == b["order"],
        )
        sets = {frozenset(mapping) for mapping in gm.subgraph_monomorphisms_iter()}
        assert {frozenset(h) for h in match_pattern(pat, mol)} == sets, (q, m)


def test_required_element_prefilter():
    pat = parse_smarts("ClC=O")
    assert pat.required_elements == {"Cl": 1, "C": 1, "O": 1}
    assert match_pattern(pat, parse_smiles("CC(=O)O")) == []
