"""Substructure matching of query patterns against molecules.

Backtracking in the spirit of VF2: pattern atoms are visited in a connected
order so every new atom is grown from an already-mapped neighbor, and bond
predicates are checked as soon as both ends are mapped.
"""

from __future__ import annotations

from .molecule import Molecule
from .smarts import QueryPattern


# rough element abundance in organic molecules; rarer atoms make better roots
_ABUNDANCE = {"C": 20, "H": 10, "O": 4, "N": 4}


def _search_plan(pattern: QueryPattern):
    """Visit order plus, per step, the mapped neighbors to check.

    The plan depends only on the pattern and is cached on it.
    """
    if pattern.plan is not None:
        return pattern.plan

    def selectivity(k: int) -> tuple:
        hint = pattern.atoms[k].elements
        freq = 50 if hint is None else sum(_ABUNDANCE.get(e, 1) for e in hint)
        return (freq, -len(pattern.adjacency[k]), k)

    n = len(pattern.atoms)
    first = min(range(n), key=selectivity)
    order = [first]
    placed = {first: 0}
    while len(order) < n:
        frontier = {
            v for u in order for v, _ in pattern.adjacency[u] if v not in placed
        }
        if not frontier:
            raise ValueError(f"pattern {pattern.smarts!r} is not connected")
        nxt = min(frontier, key=selectivity)
        placed[nxt] = len(order)
        order.append(nxt)

    steps = []
    for k, q in enumerate(order):
        links = [(placed[v], bi) for v, bi in pattern.adjacency[q] if placed[v] < k]
        links.sort()
        steps.append((q, tuple(links)))
    pattern.plan = (tuple(order), tuple(steps))
    return pattern.plan


def iter_matches(pattern: QueryPattern, mol: Molecule):
    """Yield every injective mapping as a tuple indexed by pattern atom."""
    n_q = len(pattern.atoms)
    if n_q == 0 or n_q > mol.n_atoms:
        return
    counts = mol.element_counts
    for el, need in pattern.required.items():
        if counts.get(el, 0) < need:
            return
    order, steps = _search_plan(pattern)
    qatoms = pattern.atoms
    qbonds = pattern.bonds
    bonds = mol.bonds
    assigned = [-1] * n_q  # by step index
    used = set()
    atom_ok: dict[tuple[int, int], bool] = {}

    def atom_matches(q: int, i: int) -> bool:
        key = (q, i)
        hit = atom_ok.get(key)
        if hit is None:
            hit = atom_ok[key] = bool(qatoms[q].test(mol, i))
        return hit

    def candidates(k: int):
        q, links = steps[k]
        if not links:
            hint = qatoms[q].elements
            if hint is None:
                pool = range(mol.n_atoms)
            else:
                by_el = mol.atoms_by_element
                pool = [i for e in hint for i in by_el.get(e, ())]
            return [i for i in pool if atom_matches(q, i)]
        anchor_step, anchor_bond = links[0]
        anchor = assigned[anchor_step]
        out = []
        btest = qbonds[anchor_bond].test
        for j, bi in mol.neighbors(anchor):
            if j in used or not btest(bonds[bi]) or not atom_matches(q, j):
                continue
            ok = True
            for st, qbi in links[1:]:
                mb = mol.bond_index(assigned[st], j)
                if mb is None or not qbonds[qbi].test(bonds[mb]):
                    ok = False
                    break
            if ok:
                out.append(j)
        return out

    stack = [iter(candidates(0))]
    k = 0
    while stack:
        try:
            i = next(stack[-1])
        except StopIteration:
            stack.pop()
            k -= 1
            if k >= 0:
                used.discard(assigned[k])
                assigned[k] = -1
            continue
        assigned[k] = i
        used.add(i)
        if k == n_q - 1:
            result = [0] * n_q
            for step, (q, _) in enumerate(steps):
                result[q] = assigned[step]
            yield tuple(result)
            used.discard(i)
            assigned[k] = -1
            continue
        k += 1
        stack.append(iter(candidates(k)))


def match_pattern(pattern: QueryPattern, mol: Molecule) -> list[tuple[int, ...]]:
    """All matches of ``pattern`` in ``mol``, one per distinct atom set.

    Each mapping is a tuple ``m`` with ``m[q]`` the molecule atom matched by
    pattern atom ``q``. Mappings covering the same atom set (pattern
    automorphisms) collapse to the lexicographically smallest one; the result
    is sorted.
    """
    best: dict[frozenset[int], tuple[int, ...]] = {}
    for m in iter_matches(pattern, mol):
        key = frozenset(m)
        cur = best.get(key)
        if cur is None or m < cur:
            best[key] = m
    return sorted(best.values())


def has_match(pattern: QueryPattern, mol: Molecule) -> bool:
    return next(iter_matches(pattern, mol), None) is not None
