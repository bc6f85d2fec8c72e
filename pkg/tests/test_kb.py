from __future__ import annotations

import json
import os

import pytest

from chemcensor.exceptions import FatalError, FormatError, MetadataMismatch, VersionError
from chemcensor.kb import KnowledgeBase, build_kb, iter_corpus, load_kb, merge_kb, save_kb
from chemcensor.reaction.center import LEVELS, analyze_reaction
from chemcensor.reaction.reaction import parse_reaction
from chemcensor.scorer import ChemCensorScorer
from conftest import corpus_reactions

NITRILE = (
    "[C:10]([CH2:9][CH2:8][CH2:7][CH2:6][CH2:5][OH:4])#[N:11].[CH3:1][C:2](=[O:3])O"
    ">>[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH2:6][CH2:7][CH2:8][CH2:9][C:10]#[N:11]"
)
THIOETHER = (
    "[CH3:11][S:10][CH2:9][CH2:8][CH2:7][CH2:6][CH2:5][OH:4].[CH3:1][C:2](=[O:3])O"
    ">>[CH3:1][C:2](=[O:3])[O:4][CH2:5][CH2:6][CH2:7][CH2:8][CH2:9][S:10][CH3:11]"
)


def test_single_reaction_kb(library):
    text = corpus_reactions()[0]
    kb, stats = build_kb([text], library)
    a = analyze_reaction(parse_reaction(text), library)
    assert len(kb) == 5 and stats.added == 1
    for lv in LEVELS:
        e = kb.lookup(lv, a.key(lv))
        assert e.precedent_count == 1
        assert e.aggregated_signature == a.signature(lv)


def test_repeated_reaction_counts_twice(library):
    text = corpus_reactions()[3]
    kb, _ = build_kb([text, text], library)
    a = analyze_reaction(parse_reaction(text), library)
    assert len(kb) == 5
    for lv in LEVELS:
        e = kb.lookup(lv, a.key(lv))
        assert e.precedent_count == 2 and e.aggregated_signature == a.signature(lv)


def test_shared_key_signatures_union(library):
    a = analyze_reaction(parse_reaction(NITRILE), library)
    b = analyze_reaction(parse_reaction(THIOETHER), library)
    assert a.key(1) == b.key(1)
    assert a.signature(1) != b.signature(1)
    kb, _ = build_kb([NITRILE, THIOETHER], library)
    e = kb.lookup(1, a.key(1))
    assert e.precedent_count == 2
    assert e.aggregated_signature == a.signature(1) | b.signature(1)


def test_lookup_is_per_level(library, fixture_kb):
    text = corpus_reactions()[0]
    a = analyze_reaction(parse_reaction(text), library)
    assert fixture_kb.lookup(1, a.key(1)) is not None
    assert fixture_kb.lookup(2, a.key(1)) is None
    assert fixture_kb.lookup(1, "RC1|nothing>>nothing") is None
    with pytest.raises(ValueError):
        fixture_kb.lookup(0, a.key(1))


def test_build_skips_bad_records(library):
    lines = ["# comment", "", corpus_reactions()[0] + "\tdoc-1", "CCO>>CC=O", "C(>>C", "[CH4:1]>>[CH4:1]"]
    kb, stats = build_kb(lines, library)
    assert (stats.records, stats.added, stats.skipped_unmapped, stats.skipped_errors) == (4, 1, 1, 2)
    # error samples carry 1-based line numbers
    assert [n for n, _ in stats.errors] == [5, 6]


def test_iter_corpus_doc_refs():
    rows = list(iter_corpus(["# c", "A>>B\tref-1", "", "C>>D"]))
    assert [(r[1], r[2]) for r in rows] == [("A>>B", "ref-1"), ("C>>D", None)]


def test_missing_corpus_file(library, tmp_path):
    with pytest.raises(FatalError):
        build_kb(str(tmp_path / "missing.tsv"), library)


def test_doc_ref_cap(library):
    text = corpus_reactions()[0]
    kb, _ = build_kb([f"{text}\tdoc-{i}" for i in range(8)], library, doc_ref_cap=3)
    key = analyze_reaction(parse_reaction(text), library).key(5)
    assert kb.lookup(5, key).doc_refs == ("doc-0", "doc-1", "doc-2")


def test_round_trip(library, tmp_path):
    kb, _ = build_kb([f"{t}\tref-{i}" for i, t in enumerate(corpus_reactions()[:3])], library)
    path = tmp_path / "kb.tsv"
    save_kb(kb, path)
    back = load_kb(path)
    assert back.same_entries(kb, compare_refs=True)
    assert back.metadata == kb.metadata
    assert back.content_digest() == kb.content_digest()


def test_truncated_file(library, tmp_path):
    kb, _ = build_kb(corpus_reactions()[:3], library)
    path = tmp_path / "kb.tsv"
    save_kb(kb, path)
    lines = path.read_text().splitlines(keepends=True)
    (tmp_path / "cut.tsv").write_text("".join(lines[:-2]))
    with pytest.raises(FormatError):
        load_kb(tmp_path / "cut.tsv")


def test_version_error(library, tmp_path):
    kb, _ = build_kb(corpus_reactions()[:1], library)
    path = tmp_path / "kb.tsv"
    save_kb(kb, path)
    magic, header = path.read_text().split("\n", 1)[0].split("\t", 1)
    meta = json.loads(header)
    meta["version"] = 99
    rest = path.read_text().split("\n", 1)[1]
    path.write_text(f"{magic}\t{json.dumps(meta)}\n{rest}")
    with pytest.raises(VersionError):
        load_kb(path)


def test_not_a_kb(tmp_path):
    path = tmp_path / "x.tsv"
    path.write_text("hello\n")
    with pytest.raises(FormatError):
        load_kb(path)


def test_foreign_library_rejected_by_scorer(library, fixture_kb):
    other = library.subset(["nitrile", "ester"])
    from chemcensor.exceptions import ConfigError

    with pytest.raises(ConfigError):
        ChemCensorScorer(fixture_kb, other)


def test_merge_requires_same_library(library):
    a, _ = build_kb(corpus_reactions()[:2], library)
    b, _ = build_kb(corpus_reactions()[:2], library.subset(["nitrile"]))
    with pytest.raises(MetadataMismatch):
        merge_kb(a, b)


def test_merge_equals_single_build(library):
    lines = corpus_reactions()[:40]
    whole, _ = build_kb(lines, library)
    parts = [build_kb(lines[i::4], library)[0] for i in range(4)]
    merged = parts[0]
    for p in parts[1:]:
        merged = merge_kb(merged, p)
    assert merged.same_entries(whole)
    assert merged.metadata.reaction_count == whole.metadata.reaction_count


def test_parallel_build_matches_serial(library):
    lines = corpus_reactions()[:24]
    serial, _ = build_kb(lines, library)
    parallel, _ = build_kb(lines, library, jobs=2)
    assert parallel.same_entries(serial, compare_refs=True)


def test_empty_kb_and_repr(library):
    kb = KnowledgeBase.empty(library, "none")
    assert len(kb) == 0
    assert "L1=0" in repr(kb)


def test_save_is_atomic_on_bad_directory(library, tmp_path):
    kb, _ = build_kb(corpus_reactions()[:1], library)
    with pytest.raises(OSError):
        save_kb(kb, tmp_path / "missing-dir" / "kb.tsv")
    assert os.listdir(tmp_path) == []
