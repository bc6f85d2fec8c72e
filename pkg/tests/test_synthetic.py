from __future__ import annotations

from chemcensor.reaction.center import analyze_reaction
from chemcensor.reaction.reaction import parse_reaction
from chemcensor.synthetic import TRANSFORMATIONS, apply_transformation, generate_corpus


def test_corpus_is_seeded():
    assert generate_corpus(20, seed=3) == generate_corpus(20, seed=3)
    assert generate_corpus(20, seed=3) != generate_corpus(20, seed=4)


def test_corpus_reactions_are_mapped_and_valid(library):
    rows = generate_corpus(60, seed=11)
    assert len(rows) == 60
    assert len({ref for _, ref in rows}) == 60
    names = set()
    for text, ref in rows:
        rxn = parse_reaction(text)
        assert rxn.mapped
        a = analyze_reaction(rxn, library)
        assert a.dynamic.map_numbers
        names.add(ref.split("-")[1])
    assert len(names) > 3


def test_every_transformation_applies():
    firsts = {
        "amide_coupling": ("OC(=O)c1ccccc1", "NCC"),
        "esterification": ("OC(=O)C", "OCC"),
        "boc_deprotection": ("CC(C)(C)OC(=O)NCC", None),
    }
    for name, (a, b) in firsts.items():
        assert name in {t.name for t in TRANSFORMATIONS}
        text = apply_transformation(name, a, b)
        assert parse_reaction(text).mapped


def test_without_reagents():
    for text, _ in generate_corpus(30, seed=2, with_reagents=False):
        assert ">>" in text
