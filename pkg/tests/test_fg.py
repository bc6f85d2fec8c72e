from __future__ import annotations

import pytest

from chemcensor.chem.smiles import parse_smiles
from chemcensor.exceptions import ConfigError
from chemcensor.reaction.fg import (
    FGLibrary,
    signature_bits,
    signature_from_hex,
    signature_to_hex,
    static_signature,
)


def test_default_library_is_dense(library):
    assert [d.fg_id for d in library.definitions] == list(range(library.size))
    assert library.size == len(library.patterns)
    assert len(library.digest) == 64


def test_name_lookup(library):
    nid = library.id_of("nitrile")
    assert library.name_of(nid) == "nitrile"
    with pytest.raises(KeyError):
        library.id_of("no-such-group")


def test_from_lines_rejects_gaps():
    with pytest.raises(ConfigError):
        FGLibrary.from_lines(["0\ta\tC", "2\tb\tN"])


def test_from_lines_rejects_duplicate_names():
    with pytest.raises(ConfigError):
        FGLibrary.from_lines(["0\ta\tC", "1\ta\tN"])


def test_from_lines_rejects_bad_fields():
    with pytest.raises(ConfigError):
        FGLibrary.from_lines(["0\ta"])
    with pytest.raises(ConfigError):
        FGLibrary.from_lines([])


def test_comments_and_digest():
    a = FGLibrary.from_lines(["# header", "0\tnitrile\tC#N", "", "1\tamine\t[NX3;H2]"])
    b = FGLibrary.from_lines(["0\tnitrile\tC#N", "1\tamine\t[NX3;H2]"])
    c = FGLibrary.from_lines(["0\tnitrile\tC#N", "1\tamine\t[NX3;H1]"])
    assert a.digest == b.digest != c.digest


def test_subset_renumbers(library):
    sub = library.subset(["nitrile", "ester"])
    assert [d.name for d in sub.definitions] == ["nitrile", "ester"]
    assert [d.fg_id for d in sub.definitions] == [0, 1]


def test_present_bits(library):
    sig = library.present(parse_smiles("N#CCCC(=O)OC"))
    names = {library.name_of(b) for b in signature_bits(sig)}
    assert {"nitrile", "ester", "methyl_ester"} <= names
    assert "amine" not in names


def test_static_signature_excludes_touching_matches(library):
    mol = parse_smiles("N#CCCCCO")
    fgs = library.find(mol)
    nid = library.id_of("nitrile")
    assert (static_signature(fgs, {6}) >> nid) & 1
    assert not (static_signature(fgs, {1}) >> nid) & 1


def test_find_is_cached_by_mapless_text(library):
    a = library.find(parse_smiles("[CH3:1][C:2]#[N:3]"))
    b = library.find(parse_smiles("[CH3:7][C:8]#[N:9]"))
    assert a is b


def test_signature_hex_round_trip():
    for sig in (0, 1, 1 << 185, (1 << 186) - 1, 0b1011):
        text = signature_to_hex(sig, 186)
        assert len(text) == 47
        assert signature_from_hex(text) == sig
    assert signature_bits(0b10110) == [1, 2, 4]
