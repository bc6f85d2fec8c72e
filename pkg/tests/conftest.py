from __future__ import annotations

import os
import re
import random

import pytest

from chemcensor.kb import build_kb
from chemcensor.reaction.fg import FGLibrary
from chemcensor.scorer import ChemCensorScorer

DATA = os.path.join(os.path.dirname(__file__), "data")
_MAP = re.compile(r":(\d+)\]")


def data_path(name: str) -> str:
    return os.path.join(DATA, name)


def corpus_reactions(path: str | None = None) -> list[str]:
    out = []
    with open(path or data_path("fixture_corpus.tsv"), encoding="utf-8") as fh:
        for line in fh:
            if line.strip() and not line.startswith("#"):
                out.append(line.split("\t", 1)[0].strip())
    return out


def relabel_maps(text: str, rng: random.Random) -> str:
    """Apply a random bijection to the map numbers of a reaction SMILES."""
    numbers = sorted({int(m) for m in _MAP.findall(text)})
    shuffled = rng.sample(range(1, 10 * len(numbers) + 2), len(numbers))
    table = dict(zip(numbers, shuffled))
    return _MAP.sub(lambda m: f":{table[int(m.group(1))]}]", text)


@pytest.fixture(scope="session")
def library() -> FGLibrary:
    return FGLibrary.default()


@pytest.fixture(scope="session")
def fixture_lines() -> list[str]:
    return corpus_reactions()


@pytest.fixture(scope="session")
def fixture_kb(library):
    kb, stats = build_kb(data_path("fixture_corpus.tsv"), library)
    return kb


@pytest.fixture(scope="session")
def scorer(fixture_kb, library) -> ChemCensorScorer:
    return ChemCensorScorer(fixture_kb, library)


def to_graph(mol):
    """networkx view of a molecule for isomorphism oracles."""
    import networkx as nx

    g = nx.Graph()
    for i, a in enumerate(mol.atoms):
        g.add_node(i, label=(a.element, a.aromatic, a.formal_charge, a.explicit_h, a.isotope))
    for b in mol.bonds:
        g.add_edge(b.a, b.b, order=int(b.order))
    return g


def isomorphic(m1, m2) -> bool:
    import networkx as nx
    from networkx.algorithms.isomorphism import categorical_edge_match, categorical_node_match

    return nx.is_isomorphic(
        to_graph(m1),
        to_graph(m2),
        node_match=categorical_node_match("label", None),
        edge_match=categorical_edge_match("order", None),
    )


def scramble_reaction(text: str, rng: random.Random) -> str:
    """Same reaction with new atom orders, component orders and map labels."""
    from chemcensor.chem.smiles import parse_smiles, randomize_traversal

    fields = []
    for field in text.split(">"):
        parts = [p for p in field.split(".") if p]
        rewritten = [randomize_traversal(parse_smiles(p), rng.randrange(2**31)) for p in parts]
        rng.shuffle(rewritten)
        fields.append(".".join(rewritten))
    return relabel_maps(">".join(fields), rng)


ACCEPTANCE_LINES: list[str] = []


def record_criterion(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
