"""Heuristic atom mapping for unmapped reactions.

Greedy maximum-common-edge-subgraph alignment: for each ordering of the
reactant molecules, fragments are grown from seed atom pairs by walking bonds
present on both sides, then left-over product atoms are paired one at a time.
The ordering whose alignment preserves the most bonds wins.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

from ..chem.canon import graph_classes
from ..chem.molecule import BondOrder, Molecule
from ..exceptions import MappingFailed
from .reaction import Reaction, assemble_reaction

DEFAULT_COVERAGE_THRESHOLD = 0.90
_ENV_RADIUS = 5
_MAX_SEEDS = 6
_MAX_PERMUTED = 4

Ref = tuple[int, int]  # (molecule index, atom index)


@dataclass(slots=True)
class _Side:
    mols: tuple[Molecule, ...]
    refs: list[Ref]
    env: dict[Ref, tuple[int, ...]]
    cls: dict[Ref, int]


def _env_labels(mols: tuple[Molecule, ...], vocab: dict) -> tuple[dict, dict]:
    """Per-atom environment labels at radius 0.._ENV_RADIUS and graph classes."""
    env: dict[Ref, tuple[int, ...]] = {}
    cls: dict[Ref, int] = {}
    for mi, mol in enumerate(mols):
        n = mol.n_atoms
        cur = [vocab.setdefault((a.element, a.aromatic), len(vocab)) for a in mol.atoms]
        layers = [cur]
        for _ in range(_ENV_RADIUS):
            nxt = []
            for i in range(n):
                key = (cur[i], tuple(sorted((cur[j], int(mol.bonds[bi].order)) for j, bi in mol.neighbors(i))))
                nxt.append(vocab.setdefault(key, len(vocab)))
            cur = nxt
            layers.append(cur)
        classes = graph_classes(mol)
        for i in range(n):
            env[(mi, i)] = tuple(layer[i] for layer in layers)
            cls[(mi, i)] = classes[i]
    return env, cls


def _side(mols: tuple[Molecule, ...], vocab: dict) -> _Side:
    env, cls = _env_labels(mols, vocab)
    refs = [(mi, i) for mi, mol in enumerate(mols) for i in range(mol.n_atoms)]
    return _Side(mols, refs, env, cls)


def _depth(left: _Side, r: Ref, right: _Side, p: Ref) -> int:
    """Largest radius at which the two atom environments agree (-1: elements differ)."""
    a, b = left.env[r], right.env[p]
    d = -1
    for x, y in zip(a, b):
        if x != y:
            break
        d += 1
    return d


def _atom(side: _Side, ref: Ref):
    return side.mols[ref[0]].atoms[ref[1]]


def _neighbors(side: _Side, ref: Ref):
    mi, i = ref
    mol = side.mols[mi]
    for j, bi in mol.neighbors(i):
        yield (mi, j), mol.bonds[bi].order


class _Aligner:
    def __init__(self, left: _Side, right: _Side):
        self.left = left
        self.right = right
        self.by_element: dict[str, list[Ref]] = {}
        for p in right.refs:
            self.by_element.setdefault(_atom(right, p).element, []).append(p)

    def extend(self, seed: tuple[Ref, Ref], r2p: dict, p2r: dict) -> list[tuple[Ref, Ref]]:
        """Grow a fragment from ``seed`` along bonds present on both sides."""
        left, right = self.left, self.right
        added = [seed]
        taken_r = {seed[0]}
        taken_p = {seed[1]}
        queue = [seed]
        while queue:
            r, p = queue.pop(0)
            options = []
            for r2, order_r in _neighbors(left, r):
                if r2 in r2p or r2 in taken_r:
                    continue
                el = _atom(left, r2).element
                for p2, order_p in _neighbors(right, p):
                    if p2 in p2r or p2 in taken_p or _atom(right, p2).element != el:
                        continue
                    score = (
                        order_r is order_p,
                        _depth(left, r2, right, p2),
                        _atom(left, r2).aromatic == _atom(right, p2).aromatic,
                    )
                    options.append((score, left.cls[r2], right.cls[p2], r2, p2))
            options.sort(key=lambda o: (tuple(-int(x) for x in o[0]), o[1], o[2], o[3], o[4]))
            for _, _, _, r2, p2 in options:
                if r2 in taken_r or p2 in taken_p:
                    continue
                taken_r.add(r2)
                taken_p.add(p2)
                added.append((r2, p2))
                queue.append((r2, p2))
        return added

    def seeds(self, mol_index: int, r2p: dict, p2r: dict) -> list[tuple[Ref, Ref]]:
        left, right = self.left, self.right
        cands = []
        for r in left.refs:
            if r[0] != mol_index or r in r2p:
                continue
            for p in self.by_element.get(_atom(left, r).element, ()):
                if p in p2r:
                    continue
                cands.append((-_depth(left, r, right, p), left.cls[r], right.cls[p], r, p))
        cands.sort()
        return [(c[3], c[4]) for c in cands[:_MAX_SEEDS]]

    def align(self, order: tuple[int, ...]) -> dict[Ref, Ref]:
        r2p: dict[Ref, Ref] = {}
        p2r: dict[Ref, Ref] = {}
        for mol_index in order:
            while True:
                best = None
                for seed in self.seeds(mol_index, r2p, p2r):
                    frag = self.extend(seed, r2p, p2r)
                    if best is None or len(frag) > len(best):
                        best = frag
                if best is None or len(best) < 2:
                    break
                for r, p in best:
                    r2p[r] = p
                    p2r[p] = r
        self._fill_singles(r2p, p2r)
        return p2r

    def _fill_singles(self, r2p: dict, p2r: dict) -> None:
        left, right = self.left, self.right
        while True:
            best = None
            for p in right.refs:
                if p in p2r:
                    continue
                el = _atom(right, p).element
                mapped_nbrs = {p2r[q] for q, _ in _neighbors(right, p) if q in p2r}
                for r in left.refs:
                    if r in r2p or _atom(left, r).element != el:
                        continue
                    kept = sum(1 for q, _ in _neighbors(left, r) if q in mapped_nbrs)
                    key = (-kept, -_depth(left, r, right, p), right.cls[p], left.cls[r], p, r)
                    if best is None or key < best[0]:
                        best = (key, r, p)
            if best is None:
                return
            _, r, p = best
            for r2, p2 in self.extend((r, p), r2p, p2r):
                r2p[r2] = p2
                p2r[p2] = r2

    def evaluate(self, p2r: dict[Ref, Ref]) -> tuple:
        """Ranking key: preserved bonds, then fewer saturated-carbon breaks, then env agreement."""
        left, right = self.left, self.right
        preserved = 0
        for p, r in p2r.items():
            for q, _ in _neighbors(right, p):
                if q in p2r and q > p and left.mols[r[0]].bond_index(r[1], p2r[q][1]) is not None and p2r[q][0] == r[0]:
                    preserved += 1
        r2p = {r: p for p, r in p2r.items()}
        sat_breaks = 0
        for r, p in r2p.items():
            mol = left.mols[r[0]]
            atom = mol.atoms[r[1]]
            saturated = (
                atom.element == "C"
                and not atom.aromatic
                and all(mol.bonds[bi].order is BondOrder.SINGLE for _, bi in mol.neighbors(r[1]))
            )
            if not saturated:
                continue
            for q, _ in _neighbors(left, r):
                qp = r2p.get(q)
                if qp is None or qp[0] != p[0] or right.mols[p[0]].bond_index(p[1], qp[1]) is None:
                    sat_breaks += 1
        env = sum(_depth(left, r, right, p) for p, r in p2r.items())
        return (preserved, -sat_breaks, env)


def _orders(left: tuple[Molecule, ...]) -> list[tuple[int, ...]]:
    idx = tuple(range(len(left)))
    if len(left) <= _MAX_PERMUTED:
        return list(permutations(idx))
    return [tuple(sorted(idx, key=lambda i: -left[i].n_atoms))]


def map_reaction(
    rxn: Reaction, threshold: float = DEFAULT_COVERAGE_THRESHOLD
) -> tuple[Reaction, float]:
    """Assign atom maps to an unmapped reaction.

    Args:
        rxn: Reaction whose ``mapped`` flag is false. Existing partial map
            numbers are discarded.
        threshold: Minimum fraction of product atoms that must be mapped.

    Returns:
        The mapped reaction and its coverage (mapped product atoms over
        product atoms). Reactant molecules left without mapped atoms are
        demoted to reagents.

    Raises:
        MappingFailed: Coverage falls below ``threshold``.
    """
    if rxn.mapped:
        total = sum(m.n_atoms for m in rxn.products)
        mapped = sum(1 for m in rxn.products for a in m.atoms if a.map_number)
        return rxn, (mapped / total if total else 0.0)
    left_mols = tuple(m.without_maps() for m in rxn.reactants)
    right_mols = tuple(m.without_maps() for m in rxn.products)
    n_product = sum(m.n_atoms for m in right_mols)
    if not left_mols or n_product == 0:
        raise MappingFailed("nothing to map", 0.0)
    vocab: dict = {}
    left = _side(left_mols, vocab)
    right = _side(right_mols, vocab)
    aligner = _Aligner(left, right)

    best_key = None
    best_map: dict[Ref, Ref] = {}
    for order in _orders(left_mols):
        p2r = aligner.align(order)
        key = aligner.evaluate(p2r)
        if best_key is None or key > best_key:
            best_key, best_map = key, p2r
    coverage = len(best_map) / n_product
    if coverage < threshold:
        raise MappingFailed(
            f"mapped {len(best_map)} of {n_product} product atoms (coverage {coverage:.2f} < {threshold:.2f})",
            coverage,
        )

    left_maps = [[0] * m.n_atoms for m in left_mols]
    right_maps = [[0] * m.n_atoms for m in right_mols]
    number = 0
    for p in right.refs:
        r = best_map.get(p)
        if r is None:
            continue
        number += 1
        right_maps[p[0]][p[1]] = number
        left_maps[r[0]][r[1]] = number
    new_left = [m.with_map_numbers(mp) for m, mp in zip(left_mols, left_maps)]
    new_right = [m.with_map_numbers(mp) for m, mp in zip(right_mols, right_maps)]
    mapped_rxn = assemble_reaction(new_left, list(rxn.reagents), new_right, rxn.text)
    return mapped_rxn, coverage
