"""Dynamic atoms, hierarchical reaction centers and their canonical keys.

Atoms are addressed as ``(molecule index, atom index)`` within one side of a
reaction: side 0 is the reactants, side 1 the products.

Reaction-center levels grow monotonically:

* L1: dynamic atoms, their distance-1 shell, and every library FG match that
  contains a dynamic atom.
* L2: adds the distance-2 shell, the rings holding a dynamic atom, and
  stereocenters bonded to L1.
* L3: adds the distance-3 shell and rings fused to the L2 rings.
* L4: adds the distance-4 shell and the first substituent atom of every
  aromatic ring already inside, widened to the FG matches that atom starts.
* L5: adds the distance-5 shell.

After every level, mapped atoms are mirrored onto the other side so both
sides describe the same set of mapped atoms.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Mapping

from ..chem.canon import break_ties, permutation_parity, refine
from ..chem.molecule import BondOrder, ChiralTag, Molecule
from ..chem.rings import ring_bond_indices
from ..chem.smiles import render, traverse
from ..exceptions import EmptyCenter
from .fg import FGLibrary, MoleculeFGs, static_signature
from .reaction import Reaction

LEVELS = (1, 2, 3, 4, 5)
CHANGE_KINDS = (
    "bond_formed",
    "bond_broken",
    "order_changed",
    "charge_changed",
    "h_changed",
    "appeared",
    "disappeared",
)

Ref = tuple[int, int]


@dataclass(frozen=True, slots=True)
class DynamicAtomSet:
    """Atoms that change between the reaction sides.

    Attributes:
        map_numbers: Map numbers of dynamic mapped atoms.
        change_kinds: For each member, the kinds of change observed.
        left_seeds: Reactant atoms seeding the reaction center: dynamic mapped
            atoms plus unmapped (disappearing) reactant atoms.
        right_seeds: Product atoms seeding the reaction center: dynamic mapped
            atoms plus unmapped (appearing) product atoms.
    """

    map_numbers: frozenset[int]
    change_kinds: Mapping[int, frozenset[str]]
    left_seeds: frozenset[Ref] = frozenset()
    right_seeds: frozenset[Ref] = frozenset()

    def __len__(self) -> int:
        return len(self.map_numbers)

    def seeds(self, side: int) -> frozenset[Ref]:
        return self.left_seeds if side == 0 else self.right_seeds


@dataclass(frozen=True, slots=True)
class RCPattern:
    """Reaction-center atoms at one level plus the canonical key.

    ``reaction`` and ``dynamic`` are kept so the key can be recomputed; they
    take no part in equality.
    """

    level: int
    left_atoms: frozenset[Ref]
    right_atoms: frozenset[Ref]
    canonical_key: str
    reaction: Reaction = field(repr=False, compare=False, default=None)
    dynamic: DynamicAtomSet = field(repr=False, compare=False, default=None)

    def atoms(self, side: int) -> frozenset[Ref]:
        return self.left_atoms if side == 0 else self.right_atoms


# ---------------------------------------------------------------------------
# dynamic atoms


def _map_index(mols: tuple[Molecule, ...]) -> dict[int, Ref]:
    out = {}
    for mi, mol in enumerate(mols):
        for ai, atom in enumerate(mol.atoms):
            if atom.map_number:
                out[atom.map_number] = (mi, ai)
    return out


def _neighbor_view(mol: Molecule, i: int) -> tuple[dict[int, BondOrder], int]:
    """Mapped neighbors (map number -> bond order) and the unmapped-neighbor count."""
    mapped: dict[int, BondOrder] = {}
    unmapped = 0
    for j, bi in mol.neighbors(i):
        m = mol.atoms[j].map_number
        if m:
            mapped[m] = mol.bonds[bi].order
        else:
            unmapped += 1
    return mapped, unmapped


def detect_dynamic_atoms(rxn: Reaction) -> DynamicAtomSet:
    """Find the atoms whose bonding, charge or hydrogen count changes.

    A mapped atom is dynamic when its mapped-neighbor set, any incident bond
    order, its aromatic flag, formal charge or hydrogen count differs across
    sides, when it has an unmapped neighbor (a leaving or incoming group), or
    when its map number occurs on one side only.

    Raises:
        ValueError: The reaction is not mapped.
        EmptyCenter: Nothing changes.
    """
    if not rxn.mapped:
        raise ValueError("detect_dynamic_atoms needs a mapped reaction")
    left = _map_index(rxn.reactants)
    right = _map_index(rxn.products)
    kinds_of: dict[int, frozenset[str]] = {}
    for m in sorted(left.keys() | right.keys()):
        if m not in right:
            kinds_of[m] = frozenset({"disappeared"})
            continue
        if m not in left:
            kinds_of[m] = frozenset({"appeared"})
            continue
        lm, li = left[m]
        rm, ri = right[m]
        lmol, rmol = rxn.reactants[lm], rxn.products[rm]
        la, ra = lmol.atoms[li], rmol.atoms[ri]
        l_nb, l_un = _neighbor_view(lmol, li)
        r_nb, r_un = _neighbor_view(rmol, ri)
        kinds = set()
        if l_un or l_nb.keys() - r_nb.keys():
            kinds.add("bond_broken")
        if r_un or r_nb.keys() - l_nb.keys():
            kinds.add("bond_formed")
        if la.aromatic != ra.aromatic or any(
            l_nb[k] is not r_nb[k] for k in l_nb.keys() & r_nb.keys()
        ):
            kinds.add("order_changed")
        if la.formal_charge != ra.formal_charge:
            kinds.add("charge_changed")
        if la.explicit_h != ra.explicit_h:
            kinds.add("h_changed")
        if kinds:
            kinds_of[m] = frozenset(kinds)
    if not kinds_of:
        raise EmptyCenter("no atom changes between reactants and products")

    def seeds(mols, index):
        out = {index[m] for m in kinds_of if m in index}
        for mi, mol in enumerate(mols):
            out.update((mi, ai) for ai, atom in enumerate(mol.atoms) if not atom.map_number)
        return frozenset(out)

    return DynamicAtomSet(
        frozenset(kinds_of),
        MappingProxyType(kinds_of),
        seeds(rxn.reactants, left),
        seeds(rxn.products, right),
    )


# ---------------------------------------------------------------------------
# level expansion


def _distances(mol: Molecule, sources: set[int], limit: int) -> dict[int, int]:
    dist = {s: 0 for s in sources}
    queue = deque(sources)
    while queue:
        u = queue.popleft()
        d = dist[u]
        if d == limit:
            continue
        for v, _ in mol.neighbors(u):
            if v not in dist:
                dist[v] = d + 1
                queue.append(v)
    return dist


@dataclass(slots=True)
class _SideState:
    mols: tuple[Molecule, ...]
    seeds: dict[int, set[int]]  # molecule -> seed atoms
    dist: dict[int, dict[int, int]]
    fgs: list[MoleculeFGs | None]
    atoms: dict[int, set[int]]  # molecule -> current RC atoms

    def add_shell(self, radius: int) -> None:
        for mi, d in self.dist.items():
            cur = self.atoms.setdefault(mi, set())
            cur.update(a for a, k in d.items() if k <= radius)

    def seed_rings(self, mi: int) -> list[tuple[int, ...]]:
        seeds = self.seeds.get(mi, ())
        return [r for r in self.mols[mi].rings if any(a in seeds for a in r)]

    def frozen(self) -> frozenset[Ref]:
        return frozenset((mi, a) for mi, s in self.atoms.items() for a in s)


def _make_side(mols: tuple[Molecule, ...], seed_refs: frozenset[Ref], library: FGLibrary | None) -> _SideState:
    seeds: dict[int, set[int]] = {}
    for mi, ai in seed_refs:
        seeds.setdefault(mi, set()).add(ai)
    dist = {mi: _distances(mols[mi], s, 5) for mi, s in seeds.items()}
    fgs = [library.find(m) if library is not None else None for m in mols]
    return _SideState(mols, seeds, dist, fgs, {})


def _mirror(sides: tuple[_SideState, _SideState]) -> None:
    """Add the other-side counterpart of every mapped RC atom."""
    index = [
        {a.map_number: (mi, ai) for mi, m in enumerate(s.mols) for ai, a in enumerate(m.atoms) if a.map_number}
        for s in sides
    ]
    for src, dst in ((0, 1), (1, 0)):
        s = sides[src]
        additions = []
        for mi, atoms in s.atoms.items():
            mol = s.mols[mi]
            for a in atoms:
                m = mol.atoms[a].map_number
                if m and m in index[dst]:
                    additions.append(index[dst][m])
        for mi, a in additions:
            sides[dst].atoms.setdefault(mi, set()).add(a)


def _expand_level(level: int, s: _SideState, l2_rings: dict[int, list]) -> None:
    s.add_shell(level)
    for mi in list(s.dist):
        mol = s.mols[mi]
        cur = s.atoms[mi]
        fgs = s.fgs[mi]
        seeds = s.seeds[mi]
        if level == 1 and fgs is not None:
            for k in fgs.containing(seeds):
                cur.update(fgs.matches[k][1])
        elif level == 2:
            rings = s.seed_rings(mi)
            l2_rings[mi] = rings
            for r in rings:
                cur.update(r)
            stereo = {i for i in range(mol.n_atoms) if mol.atoms[i].chiral_tag is not ChiralTag.NONE}
            for bi in mol.bond_stereo:
                stereo.update((mol.bonds[bi].a, mol.bonds[bi].b))
            cur.update(
                i for i in stereo if i not in cur and any(j in cur for j, _ in mol.neighbors(i))
            )
        elif level == 3:
            base = l2_rings.get(mi, [])
            for r in mol.rings:
                rs = set(r)
                if any(len(rs.intersection(b)) >= 2 and tuple(b) != tuple(r) for b in base):
                    cur.update(r)
        elif level == 4:
            for r in mol.rings:
                if not all(mol.atoms[a].aromatic for a in r) or not all(a in cur for a in r):
                    continue
                ring = set(r)
                for a in r:
                    for j, _ in mol.neighbors(a):
                        if j in ring or j in cur:
                            continue
                        cur.add(j)
                        if fgs is not None:
                            for k in fgs.by_atom.get(j, ()):
                                cur.update(fgs.matches[k][1])


def _level_atom_sets(
    rxn: Reaction, dyn: DynamicAtomSet, library: FGLibrary | None
) -> tuple[list[tuple[frozenset[Ref], frozenset[Ref]]], tuple[_SideState, _SideState]]:
    sides = (
        _make_side(rxn.reactants, dyn.left_seeds, library),
        _make_side(rxn.products, dyn.right_seeds, library),
    )
    l2_rings: tuple[dict, dict] = ({}, {})
    out = []
    for level in LEVELS:
        for k, s in enumerate(sides):
            _expand_level(level, s, l2_rings[k])
        _mirror(sides)
        out.append((sides[0].frozen(), sides[1].frozen()))
    return out, sides


# ---------------------------------------------------------------------------
# canonical keys


def _serialize(
    rxn: Reaction,
    left: frozenset[Ref],
    right: frozenset[Ref],
    seeds: tuple[frozenset[Ref], frozenset[Ref]],
    with_stereo: bool,
) -> str:
    nodes: list[tuple[int, int, int]] = [(0, mi, ai) for mi, ai in sorted(left)]
    nodes += [(1, mi, ai) for mi, ai in sorted(right)]
    pos = {node: k for k, node in enumerate(nodes)}
    n = len(nodes)
    adj: list[list[tuple[int, tuple]]] = [[] for _ in range(n)]
    bond_of: dict[tuple[int, int], tuple[Molecule, int]] = {}

    for k, (side, mi, ai) in enumerate(nodes):
        mol = rxn.side(side)[mi]
        for j, bi in mol.neighbors(ai):
            t = pos.get((side, mi, j))
            if t is not None:
                adj[k].append((t, ("b", int(mol.bonds[bi].order))))
                bond_of[(k, t)] = (mol, bi)

    # ring membership within the pattern subgraph
    pattern_adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    edge_ids: dict[tuple[int, int], int] = {}
    for k in range(n):
        for t, _ in adj[k]:
            key = (k, t) if k < t else (t, k)
            eid = edge_ids.setdefault(key, len(edge_ids))
            pattern_adj[k].append((t, eid))
    ring_edges = ring_bond_indices(n, pattern_adj)
    in_ring = [False] * n
    for (a, b), eid in edge_ids.items():
        if eid in ring_edges:
            in_ring[a] = in_ring[b] = True

    by_map: dict[int, list[int]] = {}
    labels = []
    for k, (side, mi, ai) in enumerate(nodes):
        atom = rxn.side(side)[mi].atoms[ai]
        dynamic = (mi, ai) in seeds[side]
        labels.append(
            (
                side,
                atom.element,
                atom.aromatic,
                atom.formal_charge,
                in_ring[k],
                dynamic,
                atom.explicit_h if dynamic else -1,
            )
        )
        if atom.map_number:
            by_map.setdefault(atom.map_number, []).append(k)
    partner = [-1] * n
    for ks in by_map.values():
        if len(ks) == 2:
            a, b = ks
            partner[a], partner[b] = b, a
            adj[a].append((b, ("m",)))
            adj[b].append((a, ("m",)))

    classes = refine(labels, adj)
    chiral = [0] * n
    if with_stereo:
        chiral, db = _stereo_labels(rxn, nodes, pos, classes)
        if any(chiral) or db:
            for k in range(n):
                adj[k] = [
                    (t, lab + (db.get((k, t), 0),)) if lab[0] == "b" else (t, lab) for t, lab in adj[k]
                ]
            classes = refine([(c, chiral[k]) for k, c in enumerate(classes)], adj)
        else:
            db = {}
    else:
        db = {}
    ranks = break_ties(classes, adj)

    local_map: dict[int, int] = {}
    pairs = sorted({(min(ranks[k], ranks[partner[k]]), min(k, partner[k])) for k in range(n) if partner[k] >= 0})
    for number, (_, k) in enumerate(pairs, 1):
        local_map[k] = local_map[partner[k]] = number

    def token(k: int) -> str:
        side, mi, ai = nodes[k]
        atom = rxn.side(side)[mi].atoms[ai]
        sym = atom.element.lower() if atom.aromatic else atom.element
        parts = [sym]
        if labels[k][5]:
            parts.append(f";H{atom.explicit_h};*")
        if atom.formal_charge:
            parts.append(f";{atom.formal_charge:+d}")
        if in_ring[k]:
            parts.append(";R")
        if chiral[k]:
            parts.append(";@" if chiral[k] == 1 else ";@@")
        if k in local_map:
            parts.append(f":{local_map[k]}")
        return "[" + "".join(parts) + "]"

    def bond_symbol(u: int, v: int) -> str:
        if partner[u] == v:
            raise AssertionError("mapping edges are not traversed")
        mol, bi = bond_of[(u, v)]
        sym = mol.bonds[bi].order.symbol
        label = db.get((u, v), 0)
        if label:
            sym += "@c" if label == 1 else "@t"
        return sym

    strings: list[list[str]] = [[], []]
    for side in (0, 1):
        members = [k for k in range(n) if nodes[k][0] == side]
        if not members:
            continue
        local_nbrs = {
            k: sorted((t for t, lab in adj[k] if lab[0] == "b"), key=ranks.__getitem__) for k in members
        }
        start = sorted(members, key=ranks.__getitem__)
        tr = traverse(n, lambda k: local_nbrs.get(k, ()), start)
        strings[side] = sorted(render(tr, token, bond_symbol))
    return ".".join(strings[0]) + ">>" + ".".join(strings[1])


def _stereo_labels(rxn: Reaction, nodes, pos, classes) -> tuple[list[int], dict[tuple[int, int], int]]:
    """Pattern-local chirality (1/2) and double-bond (1 cis / 2 trans) labels."""
    n = len(nodes)
    chiral = [0] * n
    db: dict[tuple[int, int], int] = {}

    def key_of(side: int, mi: int, j: int) -> tuple:
        if j < 0:
            return (-1,)
        t = pos.get((side, mi, j))
        return (-2,) if t is None else (0, classes[t])

    for k, (side, mi, ai) in enumerate(nodes):
        mol = rxn.side(side)[mi]
        tag = mol.atoms[ai].chiral_tag
        order = mol.stereo_order.get(ai)
        if tag is ChiralTag.NONE or not order:
            continue
        keys = [key_of(side, mi, j) for j in order]
        if len(set(keys)) != len(keys) or sum(1 for x in keys if x == (-2,)) > 1:
            continue
        ranked = [j for _, j in sorted(zip(keys, order))]
        if permutation_parity(list(order), ranked):
            tag = tag.inverted()
        chiral[k] = 1 if tag is ChiralTag.CCW else 2

    for k, (side, mi, ai) in enumerate(nodes):
        mol = rxn.side(side)[mi]
        for j, bi in mol.neighbors(ai):
            st = mol.bond_stereo.get(bi)
            t = pos.get((side, mi, j))
            if st is None or t is None:
                continue
            bond = mol.bonds[bi]
            cis = st.cis
            ok = True
            for end, other, ref in ((bond.a, bond.b, st.ref_a), (bond.b, bond.a, st.ref_b)):
                subs = [x for x in mol.neighbor_indices(end) if x != other]
                keys = [key_of(side, mi, x) for x in subs]
                if len(set(keys)) != len(keys):
                    ok = False
                    break
                best = subs[max(range(len(subs)), key=lambda q: keys[q])]
                if best != ref:
                    cis = not cis
            if ok:
                db[(k, t)] = 1 if cis else 2
    return chiral, db


# ---------------------------------------------------------------------------
# public API


@dataclass(frozen=True, slots=True)
class ReactionAnalysis:
    """Everything the knowledge base and scorer need from one mapped reaction.

    Attributes:
        dynamic: The dynamic-atom set.
        patterns: RC patterns for levels 1..5 (index 0 is level 1).
        signatures: FG signatures for levels 1..5.
    """

    dynamic: DynamicAtomSet
    patterns: tuple[RCPattern, ...]
    signatures: tuple[int, ...]

    def key(self, level: int) -> str:
        return self.patterns[level - 1].canonical_key

    def signature(self, level: int) -> int:
        return self.signatures[level - 1]


def _key_for(rxn, dyn, level, left, right, cache: dict) -> str:
    with_stereo = level >= 2
    memo = (left, right, with_stereo)
    body = cache.get(memo)
    if body is None:
        body = cache[memo] = _serialize(rxn, left, right, (dyn.left_seeds, dyn.right_seeds), with_stereo)
    return f"RC{level}|{body}"


def analyze_reaction(rxn: Reaction, library: FGLibrary | None) -> ReactionAnalysis:
    """Dynamic atoms, all five RC levels and their FG signatures.

    Raises:
        ValueError: The reaction is not mapped.
        EmptyCenter: The reaction has no dynamic atoms.
    """
    dyn = detect_dynamic_atoms(rxn)
    level_sets, sides = _level_atom_sets(rxn, dyn, library)
    cache: dict = {}
    patterns = []
    sigs = []
    for level, (left, right) in zip(LEVELS, level_sets):
        key = _key_for(rxn, dyn, level, left, right, cache)
        patterns.append(RCPattern(level, left, right, key, rxn, dyn))
        sig = 0
        if library is not None:
            for s, atoms in zip(sides, (left, right)):
                for mi, fgs in enumerate(s.fgs):
                    rc = {a for m, a in atoms if m == mi}
                    sig |= static_signature(fgs, rc)
        sigs.append(sig)
    return ReactionAnalysis(dyn, tuple(patterns), tuple(sigs))


def extract_rc(rxn: Reaction, level: int, library: FGLibrary | None = None) -> RCPattern:
    """Reaction-center pattern at ``level`` (1..5).

    Args:
        rxn: A mapped reaction.
        level: Context level.
        library: FG library used for the FG-based context rules (L1, L4);
            without one those rules add nothing.

    Raises:
        ValueError: Bad level or unmapped reaction.
        EmptyCenter: The reaction has no dynamic atoms.
    """
    if level not in LEVELS:
        raise ValueError(f"level must be in 1..5, got {level}")
    dyn = detect_dynamic_atoms(rxn)
    level_sets, _ = _level_atom_sets(rxn, dyn, library)
    left, right = level_sets[level - 1]
    key = _key_for(rxn, dyn, level, left, right, {})
    return RCPattern(level, left, right, key, rxn, dyn)


def rc_canonical_key(rc: RCPattern) -> str:
    """Recompute the canonical key of ``rc`` from its reaction and atom sets."""
    if rc.reaction is None or rc.dynamic is None:
        return rc.canonical_key
    return _key_for(rc.reaction, rc.dynamic, rc.level, rc.left_atoms, rc.right_atoms, {})


def compute_fg_signature(rxn: Reaction, rc: RCPattern, library: FGLibrary) -> int:
    """FG signature of ``rxn`` relative to the RC atoms of ``rc``.

    Bit ``f`` is set when library FG ``f`` has a match in a reactant or
    product molecule sharing no atom with the RC atoms of that side.
    Reagents are never inspected.
    """
    sig = 0
    for side in (0, 1):
        atoms = rc.atoms(side)
        for mi, mol in enumerate(rxn.side(side)):
            rc_atoms = {a for m, a in atoms if m == mi}
            sig |= static_signature(library.find(mol), rc_atoms)
    return sig
