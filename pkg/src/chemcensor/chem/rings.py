"""Ring perception: ring-bond flags and the smallest set of smallest rings."""

from __future__ import annotations

from collections import deque
from typing import TYPE_CHECKING, Sequence

if TYPE_CHECKING:
    from .molecule import Molecule

Adjacency = Sequence[Sequence[tuple[int, int]]]


def ring_bond_indices(n_atoms: int, adj: Adjacency) -> set[int]:
    """Bond indices lying on at least one cycle (every non-bridge bond)."""
    disc = [-1] * n_atoms
    low = [0] * n_atoms
    bridges: set[int] = set()
    n_bonds = 0
    timer = 0
    for root in range(n_atoms):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = timer
        timer += 1
        # (atom, bond used to enter it, neighbor iterator position)
        stack = [(root, -1, 0)]
        while stack:
            u, in_bond, pos = stack[-1]
            nbrs = adj[u]
            if pos < len(nbrs):
                stack[-1] = (u, in_bond, pos + 1)
                v, bi = nbrs[pos]
                n_bonds = max(n_bonds, bi + 1)
                if bi == in_bond:
                    continue
                if disc[v] == -1:
                    disc[v] = low[v] = timer
                    timer += 1
                    stack.append((v, bi, 0))
                elif disc[v] < low[u]:
                    low[u] = disc[v]
            else:
                stack.pop()
                if stack:
                    p = stack[-1][0]
                    if low[u] < low[p]:
                        low[p] = low[u]
                    if low[u] > disc[p]:
                        bridges.add(in_bond)
    all_bonds = {bi for nbrs in adj for _, bi in nbrs}
    return all_bonds - bridges


def _shortest_path(adj: Adjacency, allowed: set[int], src: int, dst: int, banned_bond: int):
    """BFS path src→dst over ``allowed`` bonds, excluding ``banned_bond``."""
    parent = {src: (-1, -1)}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        if u == dst:
            break
        for v, bi in adj[u]:
            if bi == banned_bond or bi not in allowed or v in parent:
                continue
            parent[v] = (u, bi)
            queue.append(v)
    if dst not in parent:
        return None
    atoms, bonds = [], []
    cur = dst
    while cur != src:
        atoms.append(cur)
        prev, bi = parent[cur]
        bonds.append(bi)
        cur = prev
    atoms.append(src)
    return atoms[::-1], bonds


def _bfs_tree(adj: Adjacency, allowed: set[int], root: int):
    parent = {root: (-1, -1)}
    depth = {root: 0}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v, bi in adj[u]:
            if bi in allowed and v not in parent:
                parent[v] = (u, bi)
                depth[v] = depth[u] + 1
                queue.append(v)
    return parent, depth


def _path_to_root(parent, node):
    atoms, bonds = [node], []
    while parent[node][0] != -1:
        node, bi = parent[node]
        bonds.append(bi)
        atoms.append(node)
    return atoms, bonds


def _cycle_order(atoms: set[int], bonds: list[int], bond_ends) -> tuple[int, ...]:
    """Walk a simple cycle given its bond set; start at the lowest atom."""
    nbrs: dict[int, list[int]] = {a: [] for a in atoms}
    for bi in bonds:
        a, b = bond_ends[bi]
        nbrs[a].append(b)
        nbrs[b].append(a)
    start = min(atoms)
    first, second = sorted(nbrs[start])[:2]
    order = [start, first]
    prev, cur = start, first
    while True:
        a, b = nbrs[cur]
        nxt = b if a == prev else a
        if nxt == start:
            break
        order.append(nxt)
        prev, cur = cur, nxt
    return tuple(order)


def _select_independent(candidates, needed: int) -> list:
    basis: dict[int, int] = {}  # pivot bit -> reduced vector
    chosen = []
    for mask, cycle in candidates:
        vec = mask
        while vec:
            pivot = vec.bit_length() - 1
            if pivot in basis:
                vec ^= basis[pivot]
            else:
                basis[pivot] = vec
                chosen.append(cycle)
                break
        if len(chosen) == needed:
            break
    return chosen


def smallest_set_of_smallest_rings(mol: "Molecule") -> tuple[tuple[int, ...], ...]:
    """Smallest set of smallest rings as atom-index cycles.

    Each ring starts at its lowest atom index. Rings are ordered by size, then
    by sorted atom indices.
    """
    adj = [mol.neighbors(i) for i in range(mol.n_atoms)]
    ring_bonds = {bi for bi, bond in enumerate(mol.bonds) if bond.in_ring}
    if not ring_bonds:
        return ()
    bond_ends = [(b.a, b.b) for b in mol.bonds]
    ring_atoms = {a for bi in ring_bonds for a in bond_ends[bi]}

    # cyclomatic number of the ring subgraph
    seen: set[int] = set()
    n_comp = 0
    for a in ring_atoms:
        if a in seen:
            continue
        n_comp += 1
        stack = [a]
        seen.add(a)
        while stack:
            u = stack.pop()
            for v, bi in adj[u]:
                if bi in ring_bonds and v not in seen:
                    seen.add(v)
                    stack.append(v)
    needed = len(ring_bonds) - len(ring_atoms) + n_comp

    def candidate(atoms_list, bonds_list):
        mask = 0
        for bi in bonds_list:
            mask |= 1 << bi
        atoms = set(atoms_list)
        return len(bonds_list), tuple(sorted(atoms)), mask, _cycle_order(atoms, bonds_list, bond_ends)

    cands = {}
    for bi in sorted(ring_bonds):
        a, b = bond_ends[bi]
        path = _shortest_path(adj, ring_bonds, a, b, bi)
        if path is None:
            continue
        c = candidate(path[0], path[1] + [bi])
        cands[c[2]] = c
    ordered = sorted(cands.values(), key=lambda c: (c[0], c[1]))
    rings = _select_independent([(c[2], c[3]) for c in ordered], needed)

    if len(rings) < needed:
        # Horton candidate set: complete for the minimum cycle basis.
        for x in sorted(ring_atoms):
            parent, _ = _bfs_tree(adj, ring_bonds, x)
            for bi in sorted(ring_bonds):
                u, v = bond_ends[bi]
                if u not in parent or v not in parent:
                    continue
                pu, bu = _path_to_root(parent, u)
                pv, bv = _path_to_root(parent, v)
                if set(pu) & set(pv) != {x} or bi in bu or bi in bv:
                    continue
                c = candidate(pu + pv, bu + bv + [bi])
                cands.setdefault(c[2], c)
        ordered = sorted(cands.values(), key=lambda c: (c[0], c[1]))
        rings = _select_independent([(c[2], c[3]) for c in ordered], needed)

    return tuple(sorted(rings, key=lambda r: (len(r), tuple(sorted(r)))))


def perceive_rings(mol: "Molecule") -> list[tuple[int, ...]]:
    """Smallest set of smallest rings of ``mol`` as atom-index cycles."""
    return list(mol.rings)
