from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chemcensor.exceptions import EmptyCenter
from chemcensor.reaction.center import (
    LEVELS,
    analyze_reaction,
    compute_fg_signature,
    detect_dynamic_atoms,
    extract_rc,
    rc_canonical_key,
)
from chemcensor.reaction.reaction import parse_reaction
from conftest import corpus_reactions, scramble_reaction

ESTER = "[CH3:1][OH:2].[CH3:5][C:3](=[O:4])O>>[CH3:1][O:2][C:3](=[O:4])[CH3:5]"
ETHYL_ESTER = "[CH3:6][CH2:1][OH:2].[CH3:5][C:3](=[O:4])O>>[CH3:6][CH2:1][O:2][C:3](=[O:4])[CH3:5]"
AMIDE = "[CH3:1][NH2:2].[CH3:5][C:3](=[O:4])O>>[CH3:1][NH:2][C:3](=[O:4])[CH3:5]"
NITRILE_ESTER = (
    "[N:10]#[C:9][CH2:8][CH2:7][CH2:6][CH2:1][OH:2].[CH3:5][C:3](=[O:4])O"
    ">>[N:10]#[C:9][CH2:8][CH2:7][CH2:6][CH2:1][O:2][C:3](=[O:4])[CH3:5]"
)


def test_dynamic_atoms_esterification():
    dyn = detect_dynamic_atoms(parse_reaction(ESTER))
    assert dyn.map_numbers == {2, 3}
    assert "h_changed" in dyn.change_kinds[2]


def test_dynamic_atoms_substitution():
    dyn = detect_dynamic_atoms(parse_reaction("[CH3:1][Br:2].[NH3:3]>>[CH3:1][NH2:3]"))
    assert dyn.map_numbers == {1, 2, 3}


def test_identity_has_empty_center():
    with pytest.raises(EmptyCenter):
        detect_dynamic_atoms(parse_reaction("[CH4:1]>>[CH4:1]"))


def test_unmapped_reaction_rejected():
    with pytest.raises(ValueError):
        detect_dynamic_atoms(parse_reaction("CCO>>CC=O"))


def _map_numbers(rxn, side, refs):
    mols = rxn.side(side)
    return {mols[m].atoms[a].map_number for m, a in refs}


def test_level_one_esterification(library):
    rxn = parse_reaction(ESTER)
    rc = extract_rc(rxn, 1, library)
    # every reactant atom is within one bond of O:2 or C:3, or in an FG touching them
    assert _map_numbers(rxn, 0, rc.left_atoms) == {0, 1, 2, 3, 4, 5}
    assert len(rc.left_atoms) == 6
    assert _map_numbers(rxn, 1, rc.right_atoms) == {1, 2, 3, 4, 5}


def test_saturated_shells_share_one_key(library):
    a = analyze_reaction(parse_reaction(ESTER), library)
    bodies = {a.key(lv).split("|", 1)[1] for lv in LEVELS}
    assert len(bodies) == 1
    assert [a.key(lv).split("|", 1)[0] for lv in LEVELS] == [f"RC{lv}" for lv in LEVELS]


def test_ester_and_amide_keys_differ(library):
    a = analyze_reaction(parse_reaction(ESTER), library)
    b = analyze_reaction(parse_reaction(AMIDE), library)
    assert all(a.key(lv) != b.key(lv) for lv in LEVELS)


def test_methyl_vs_ethyl_ester_without_alkyl_fgs(library):
    small = library.subset(["ester", "carboxylic_acid", "primary_alcohol", "nitrile"])
    m, e = parse_reaction(ESTER), parse_reaction(ETHYL_ESTER)
    same = [extract_rc(m, lv, small).canonical_key == extract_rc(e, lv, small).canonical_key for lv in LEVELS]
    assert same == [True, False, False, False, False]


def test_distant_nitrile_until_absorbed(library):
    nid = library.id_of("nitrile")
    a = analyze_reaction(parse_reaction(NITRILE_ESTER), library)
    present = [(a.signature(lv) >> nid) & 1 for lv in LEVELS]
    assert present[0] == 1
    first_gone = present.index(0) if 0 in present else len(present)
    assert all(present[:first_gone]) and not any(present[first_gone:])


def test_all_atoms_in_center_gives_zero_signature(library):
    a = analyze_reaction(parse_reaction(ESTER), library)
    assert all(a.signature(lv) == 0 for lv in LEVELS)


def test_compute_fg_signature_agrees_with_analysis(library):
    for text in corpus_reactions()[:20]:
        rxn = parse_reaction(text)
        a = analyze_reaction(rxn, library)
        for lv in LEVELS:
            assert compute_fg_signature(rxn, a.patterns[lv - 1], library) == a.signature(lv)
            assert rc_canonical_key(a.patterns[lv - 1]) == a.key(lv)


def test_bad_level():
    with pytest.raises(ValueError):
        extract_rc(parse_reaction(ESTER), 6)


def test_hierarchy_on_fixture_corpus(library, fixture_lines):
    for text in fixture_lines:
        rxn = parse_reaction(text)
        a = analyze_reaction(rxn, library)
        for lv in LEVELS[:-1]:
            lower, upper = a.patterns[lv - 1], a.patterns[lv]
            assert lower.left_atoms <= upper.left_atoms, text
            assert lower.right_atoms <= upper.right_atoms, text
            assert a.signature(lv + 1) & ~a.signature(lv) == 0, text


_SAMPLE = corpus_reactions()[::5]


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(_SAMPLE), st.integers(0, 2**31))
def test_keys_and_signatures_invariant_under_rewriting(text, seed):
    from chemcensor.reaction.fg import FGLibrary

    library = FGLibrary.default()
    base = analyze_reaction(parse_reaction(text), library)
    other = analyze_reaction(parse_reaction(scramble_reaction(text, random.Random(seed))), library)
    assert [base.key(lv) for lv in LEVELS] == [other.key(lv) for lv in LEVELS]
    assert base.signatures == other.signatures
