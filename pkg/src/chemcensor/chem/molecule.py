"""Core molecular graph types.

Molecules are immutable after construction: atoms and bonds are frozen
dataclasses held in tuples, and derived data (adjacency, rings, components)
is computed once and cached.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum, IntEnum
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Sequence

from .elements import ELEMENTS


class BondOrder(IntEnum):
    SINGLE = 1
    DOUBLE = 2
    TRIPLE = 3
    AROMATIC = 4

    @property
    def valence_units(self) -> int:
        """Contribution to an atom's bond-order sum (aromatic counts as 1)."""
        return 1 if self is BondOrder.AROMATIC else int(self)

    @property
    def symbol(self) -> str:
        return _BOND_SYMBOLS[self]


_BOND_SYMBOLS = {
    BondOrder.SINGLE: "-",
    BondOrder.DOUBLE: "=",
    BondOrder.TRIPLE: "#",
    BondOrder.AROMATIC: ":",
}


class ChiralTag(str, Enum):
    NONE = "none"
    CW = "CW"  # '@@'
    CCW = "CCW"  # '@'

    def inverted(self) -> "ChiralTag":
        if self is ChiralTag.CW:
            return ChiralTag.CCW
        if self is ChiralTag.CCW:
            return ChiralTag.CW
        return self


@dataclass(frozen=True, slots=True)
class Atom:
    """A heavy atom with its hydrogens folded into ``explicit_h``.

    ``explicit_h`` is the total hydrogen count after organic-subset defaults
    have been resolved. ``map_number`` 0 means unmapped.
    """

    element: str
    formal_charge: int = 0
    aromatic: bool = False
    explicit_h: int = 0
    map_number: int = 0
    chiral_tag: ChiralTag = ChiralTag.NONE
    in_ring: bool = False
    isotope: int = 0


@dataclass(frozen=True, slots=True)
class Bond:
    a: int
    b: int
    order: BondOrder = BondOrder.SINGLE
    in_ring: bool = False

    def other(self, idx: int) -> int:
        return self.b if idx == self.a else self.a


@dataclass(frozen=True, slots=True)
class DoubleBondStereo:
    """Cis/trans configuration of a double bond.

    ``ref_a`` is a neighbor of bond atom ``a`` and ``ref_b`` a neighbor of
    bond atom ``b``; ``cis`` tells whether the two references sit on the same
    side.
    """

    ref_a: int
    ref_b: int
    cis: bool


class Molecule:
    """Attributed molecular graph.

    Args:
        atoms: Atoms in input order.
        bonds: Bonds between atom indices; at most one per atom pair.
        source_text: SMILES the molecule was parsed from, if any.
        stereo_order: For each chiral atom, the neighbor order its chiral tag
            refers to (``-1`` stands for the implicit hydrogen).
        bond_stereo: Double-bond configurations keyed by bond index.
    """

    def __init__(
        self,
        atoms: Sequence[Atom],
        bonds: Sequence[Bond],
        source_text: str = "",
        stereo_order: Mapping[int, tuple[int, ...]] | None = None,
        bond_stereo: Mapping[int, DoubleBondStereo] | None = None,
    ):
        self.atoms: tuple[Atom, ...] = tuple(atoms)
        self.bonds: tuple[Bond, ...] = tuple(bonds)
        self.source_text = source_text
        self.stereo_order: dict[int, tuple[int, ...]] = dict(stereo_order or {})
        self.bond_stereo: dict[int, DoubleBondStereo] = dict(bond_stereo or {})

        n = len(self.atoms)
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        index: dict[tuple[int, int], int] = {}
        for bi, bond in enumerate(self.bonds):
            a, b = bond.a, bond.b
            if a == b:
                raise ValueError(f"self-loop on atom {a}")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"bond {bi} references a missing atom")
            key = (a, b) if a < b else (b, a)
            if key in index:
                raise ValueError(f"parallel bond between atoms {a} and {b}")
            index[key] = bi
            adj[a].append((b, bi))
            adj[b].append((a, bi))
        self._adj = tuple(tuple(x) for x in adj)
        self._bond_index = index

    # -- basic access -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.atoms)

    def __repr__(self) -> str:
        text = self.source_text or f"{len(self.atoms)} atoms"
        return f"Molecule({text!r})"

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def neighbors(self, idx: int) -> tuple[tuple[int, int], ...]:
        """``(neighbor, bond_index)`` pairs in construction order."""
        return self._adj[idx]

    def neighbor_indices(self, idx: int) -> list[int]:
        return [j for j, _ in self._adj[idx]]

    def degree(self, idx: int) -> int:
        return len(self._adj[idx])

    def bond_between(self, a: int, b: int) -> Bond | None:
        bi = self._bond_index.get((a, b) if a < b else (b, a))
        return None if bi is None else self.bonds[bi]

    def bond_index(self, a: int, b: int) -> int | None:
        return self._bond_index.get((a, b) if a < b else (b, a))

    def bond_order_sum(self, idx: int) -> int:
        return sum(self.bonds[bi].order.valence_units for _, bi in self._adj[idx])

    @cached_property
    def elements(self) -> tuple[str, ...]:
        return tuple(a.element for a in self.atoms)

    @cached_property
    def element_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for atom in self.atoms:
            counts[atom.element] = counts.get(atom.element, 0) + 1
        return counts

    @cached_property
    def atoms_by_element(self) -> dict[str, tuple[int, ...]]:
        out: dict[str, list[int]] = {}
        for i, atom in enumerate(self.atoms):
            out.setdefault(atom.element, []).append(i)
        return {el: tuple(v) for el, v in out.items()}

    @cached_property
    def rings(self) -> tuple[tuple[int, ...], ...]:
        """Smallest set of smallest rings (see :func:`perceive_rings`)."""
        from .rings import smallest_set_of_smallest_rings

        return smallest_set_of_smallest_rings(self)

    @cached_property
    def ring_count(self) -> tuple[int, ...]:
        """Number of SSSR rings each atom belongs to."""
        counts = [0] * len(self.atoms)
        for ring in self.rings:
            for i in ring:
                counts[i] += 1
        return tuple(counts)

    @cached_property
    def components(self) -> tuple[tuple[int, ...], ...]:
        """Connected components as sorted atom-index tuples."""
        seen = [False] * len(self.atoms)
        comps = []
        for start in range(len(self.atoms)):
            if seen[start]:
                continue
            seen[start] = True
            stack = [start]
            comp = []
            while stack:
                u = stack.pop()
                comp.append(u)
                for v, _ in self._adj[u]:
                    if not seen[v]:
                        seen[v] = True
                        stack.append(v)
            comps.append(tuple(sorted(comp)))
        return tuple(comps)

    def iter_bonds(self) -> Iterator[tuple[int, Bond]]:
        return iter(enumerate(self.bonds))

    # -- derived molecules -------------------------------------------------

    def with_atoms(self, atoms: Iterable[Atom]) -> "Molecule":
        """Copy with replaced atom records (same graph and stereo)."""
        return Molecule(atoms, self.bonds, self.source_text, self.stereo_order, self.bond_stereo)

    def with_map_numbers(self, maps: Sequence[int]) -> "Molecule":
        return self.with_atoms(replace(a, map_number=m) for a, m in zip(self.atoms, maps))

    def without_maps(self) -> "Molecule":
        if not any(a.map_number for a in self.atoms):
            return self
        return self.with_map_numbers([0] * len(self.atoms))

    def permuted(self, order: Sequence[int]) -> "Molecule":
        """Renumber atoms so that new atom ``k`` is old atom ``order[k]``.

        The copy has no ``source_text``: the old text no longer lists atoms in
        the new order.
        """
        if sorted(order) != list(range(len(self.atoms))):
            raise ValueError("order must be a permutation of atom indices")
        new_of = {old: new for new, old in enumerate(order)}
        atoms = [self.atoms[old] for old in order]
        bonds = [replace(b, a=new_of[b.a], b=new_of[b.b]) for b in self.bonds]
        stereo_order = {
            new_of[i]: tuple(-1 if j < 0 else new_of[j] for j in nbrs)
            for i, nbrs in self.stereo_order.items()
        }
        bond_stereo = {
            bi: replace(st, ref_a=new_of[st.ref_a], ref_b=new_of[st.ref_b])
            for bi, st in self.bond_stereo.items()
        }
        return Molecule(atoms, bonds, "", stereo_order, bond_stereo)

    def validate(self) -> None:
        """Check structural invariants that parsing guarantees.

        Raises:
            ValueError: An invariant is violated.
        """
        for atom in self.atoms:
            if atom.element not in ELEMENTS and atom.element != "*":
                raise ValueError(f"unknown element {atom.element!r}")
        maps = [a.map_number for a in self.atoms if a.map_number]
        if len(maps) != len(set(maps)):
            raise ValueError("duplicate atom-map number")
        for bond in self.bonds:
            if bond.order is BondOrder.AROMATIC and not (
                self.atoms[bond.a].aromatic and self.atoms[bond.b].aromatic
            ):
                raise ValueError("aromatic bond between non-aromatic atoms")
