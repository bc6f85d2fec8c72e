"""Canonical atom ranking by iterative neighborhood refinement.

The refinement works on any labeled graph, so the same machinery ranks whole
molecules and the reaction-center subgraphs that become knowledge-base keys.
"""

from __future__ import annotations

from typing import Hashable, Sequence

from .elements import atomic_number
from .molecule import ChiralTag, Molecule

LabeledAdjacency = Sequence[Sequence[tuple[int, Hashable]]]


def _classes_from_keys(keys: Sequence) -> list[int]:
    order = {k: i for i, k in enumerate(sorted(set(keys)))}
    return [order[k] for k in keys]


def refine(invariants: Sequence, adj: LabeledAdjacency) -> list[int]:
    """Partition atoms into equivalence classes by neighborhood refinement.

    Classes are integers ordered by sorted invariant keys, so the result only
    depends on the labeled graph, never on atom numbering.
    """
    classes = _classes_from_keys(list(invariants))
    n_classes = len(set(classes))
    n = len(classes)
    while n_classes < n:
        keys = [
            (classes[i], tuple(sorted((classes[j], lab) for j, lab in adj[i])))
            for i in range(n)
        ]
        new = _classes_from_keys(keys)
        new_count = len(set(new))
        classes = new
        if new_count == n_classes:
            break
        n_classes = new_count
    return classes


def break_ties(classes: Sequence[int], adj: LabeledAdjacency) -> list[int]:
    """Turn a class partition into a total order (a permutation of 0..n-1).

    The lowest tied class is split by promoting its first member, then the
    partition is refined again; repeated until every class is a singleton.
    """
    cls = list(classes)
    n = len(cls)
    while len(set(cls)) < n:
        counts: dict[int, int] = {}
        for c in cls:
            counts[c] = counts.get(c, 0) + 1
        target = min(c for c, k in counts.items() if k > 1)
        chosen = cls.index(target)
        keys = [(c, 0 if (i == chosen or c != target) else 1) for i, c in enumerate(cls)]
        cls = refine(keys, adj)
    return cls


def permutation_parity(src: Sequence[int], dst: Sequence[int]) -> int:
    """Parity (0 even, 1 odd) of the permutation turning ``src`` into ``dst``."""
    pos = {v: i for i, v in enumerate(dst)}
    perm = [pos[v] for v in src]
    parity = 0
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, length = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            length += 1
        parity ^= (length - 1) & 1
    return parity


def chiral_label(mol: Molecule, idx: int, classes: Sequence[int]) -> int:
    """Chirality of ``idx`` relative to its neighbors sorted by class.

    Returns 0 when the atom is not chiral or two neighbors share a class,
    1 for anticlockwise, 2 for clockwise.
    """
    tag = mol.atoms[idx].chiral_tag
    order = mol.stereo_order.get(idx)
    if tag is ChiralTag.NONE or not order:
        return 0
    ranked = [(-1 if j < 0 else classes[j], j) for j in order]
    if len({r for r, _ in ranked}) != len(ranked):
        return 0
    sorted_order = [j for _, j in sorted(ranked)]
    if permutation_parity(list(order), sorted_order):
        tag = tag.inverted()
    return 1 if tag is ChiralTag.CCW else 2


def double_bond_label(mol: Molecule, bond_idx: int, classes: Sequence[int]) -> int:
    """Cis (1) / trans (2) relative to the highest-class neighbor on each end.

    Returns 0 when the bond has no stereo or an end has two equivalent
    substituents.
    """
    st = mol.bond_stereo.get(bond_idx)
    if st is None:
        return 0
    bond = mol.bonds[bond_idx]
    cis = st.cis
    for end, other, ref in ((bond.a, bond.b, st.ref_a), (bond.b, bond.a, st.ref_b)):
        subs = [j for j in mol.neighbor_indices(end) if j != other]
        if len(subs) == 2 and classes[subs[0]] == classes[subs[1]]:
            return 0
        best = max(subs, key=lambda j: classes[j])
        if best != ref:
            cis = not cis
    return 1 if cis else 2


def atom_invariant(mol: Molecule, idx: int) -> tuple:
    atom = mol.atoms[idx]
    return (
        atomic_number(atom.element),
        atom.element,
        atom.formal_charge,
        mol.degree(idx),
        atom.explicit_h,
        atom.aromatic,
        atom.in_ring,
        atom.isotope,
    )


def graph_classes(mol: Molecule) -> list[int]:
    """Stereo-free, map-free refined classes of a molecule's atoms."""
    adj = [[(j, int(mol.bonds[bi].order)) for j, bi in mol.neighbors(i)] for i in range(mol.n_atoms)]
    return refine([atom_invariant(mol, i) for i in range(mol.n_atoms)], adj)


def canonical_ranks(mol: Molecule, use_maps: bool = True) -> list[int]:
    """Canonical rank of every atom, a permutation of ``0..n-1``.

    Seeded by (element, charge, degree, hydrogens, aromatic, ring flag);
    stereo labels and (optionally) atom-map numbers act as final tie-break
    keys before symmetric atoms are split deterministically.
    """
    n = mol.n_atoms
    if n == 0:
        return []
    base_adj = [[(j, int(mol.bonds[bi].order)) for j, bi in mol.neighbors(i)] for i in range(n)]
    classes = refine([atom_invariant(mol, i) for i in range(n)], base_adj)
    has_stereo = bool(mol.stereo_order or mol.bond_stereo)
    has_maps = use_maps and any(a.map_number for a in mol.atoms)
    if has_stereo or has_maps:
        db_labels = {bi: double_bond_label(mol, bi, classes) for bi in mol.bond_stereo}
        adj = [
            [(j, (int(mol.bonds[bi].order), db_labels.get(bi, 0))) for j, bi in mol.neighbors(i)]
            for i in range(n)
        ]
        keys = [
            (classes[i], chiral_label(mol, i, classes), mol.atoms[i].map_number if has_maps else 0)
            for i in range(n)
        ]
        classes = refine(keys, adj)
    else:
        adj = base_adj
    return break_ties(classes, adj)
