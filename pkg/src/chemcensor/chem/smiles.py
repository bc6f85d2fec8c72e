"""SMILES reading and writing.

Aromaticity is taken from the notation (lowercase atoms), never re-perceived;
it is only checked for ring membership. Tetrahedral and cis/trans stereo are
parsed, carried through canonicalization and written back.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from typing import Callable, Sequence

from ..exceptions import MapError, SmilesSyntaxError, ValenceError
from .canon import canonical_ranks, permutation_parity
from .elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ELEMENTS,
    ORGANIC_SUBSET,
    implicit_h_count,
)
from .molecule import Atom, Bond, BondOrder, ChiralTag, DoubleBondStereo, Molecule
from .rings import ring_bond_indices

_BRACKET_RE = re.compile(
    r"(?P<iso>\d+)?"
    r"(?P<sym>\*|[A-Z][a-z]?|[a-z][a-z]?)"
    r"(?P<chir>@@|@)?"
    r"(?:H(?P<h>\d*))?"
    r"(?P<chg>\+\+|--|[+-]\d*)?"
    r"(?::(?P<map>\d+))?$"
)

_BOND_CHARS = {
    "-": BondOrder.SINGLE,
    "=": BondOrder.DOUBLE,
    "#": BondOrder.TRIPLE,
    ":": BondOrder.AROMATIC,
    "/": BondOrder.SINGLE,
    "\\": BondOrder.SINGLE,
}


@dataclass(slots=True)
class _AtomDraft:
    element: str
    aromatic: bool
    bracket: bool
    charge: int = 0
    h: int = 0
    map_number: int = 0
    chiral: ChiralTag = ChiralTag.NONE
    isotope: int = 0
    order: list = field(default_factory=list)


@dataclass(slots=True)
class _BondDraft:
    a: int
    b: int
    char: str | None  # bond symbol as written, None when implicit
    first: int  # atom written before the bond symbol
    second: int


def _split_bracket_symbol(body: str, text: str, pos: int) -> tuple[str, bool]:
    if body == "*":
        return "*", False
    if body[0].islower():
        if body in AROMATIC_BRACKET:
            return body.capitalize(), True
        raise SmilesSyntaxError(f"unknown aromatic symbol {body!r}", text, pos)
    if body in ELEMENTS:
        return body, False
    raise SmilesSyntaxError(f"unknown element {body!r}", text, pos)


def _parse_bracket(content: str, text: str, pos: int) -> _AtomDraft:
    m = _BRACKET_RE.match(content)
    if m is None:
        raise SmilesSyntaxError(f"malformed bracket atom [{content}]", text, pos)
    sym = m.group("sym")
    if sym[0].islower() and len(sym) == 2 and sym not in AROMATIC_BRACKET:
        raise SmilesSyntaxError(f"unknown aromatic symbol {sym!r}", text, pos)
    if sym[0].isupper() and len(sym) == 2 and sym not in ELEMENTS:
        raise SmilesSyntaxError(f"unknown element {sym!r}", text, pos)
    element, aromatic = _split_bracket_symbol(sym, text, pos)
    chg = m.group("chg")
    charge = 0
    if chg:
        if chg in ("++", "--"):
            charge = 2 if chg == "++" else -2
        else:
            mag = int(chg[1:]) if len(chg) > 1 else 1
            charge = mag if chg[0] == "+" else -mag
    h = m.group("h")
    hcount = 0 if h is None else (int(h) if h else 1)
    chir = m.group("chir")
    tag = ChiralTag.NONE if not chir else (ChiralTag.CW if chir == "@@" else ChiralTag.CCW)
    return _AtomDraft(
        element=element,
        aromatic=aromatic,
        bracket=True,
        charge=charge,
        h=hcount,
        map_number=int(m.group("map") or 0),
        chiral=tag,
        isotope=int(m.group("iso") or 0),
    )


def parse_smiles(text: str) -> Molecule:
    """Parse a SMILES string into a :class:`Molecule`.

    Atoms keep input order; implicit hydrogens of organic-subset atoms are
    resolved from default valences, bracket atoms take their H count
    verbatim.

    Raises:
        SmilesSyntaxError: Malformed input (unbalanced branches or rings,
            unknown symbols, aromatic atoms outside rings).
        ValenceError: An organic-subset atom exceeds its allowed valence.
        MapError: An atom-map number is used twice.
    """
    if not isinstance(text, str):
        raise SmilesSyntaxError(f"expected a string, got {type(text).__name__}")
    s = text.strip()
    if not s:
        raise SmilesSyntaxError("empty SMILES", text)
    atoms: list[_AtomDraft] = []
    bonds: list[_BondDraft] = []
    pair_seen: set[tuple[int, int]] = set()
    branch_stack: list[int] = []
    rings: dict[int, tuple[int, str | None, int, int]] = {}
    prev = -1
    pending: str | None = None
    pending_pos = 0
    dot_pending = False
    i, n = 0, len(s)

    def add_bond(a: int, b: int, char: str | None, pos: int) -> None:
        key = (a, b) if a < b else (b, a)
        if a == b:
            raise SmilesSyntaxError("ring closure onto the same atom", text, pos)
        if key in pair_seen:
            raise SmilesSyntaxError("duplicate bond between the same atoms", text, pos)
        pair_seen.add(key)
        bonds.append(_BondDraft(a, b, char, a, b))

    def add_atom(draft: _AtomDraft, pos: int) -> None:
        nonlocal prev, pending, dot_pending
        idx = len(atoms)
        if prev >= 0 and not dot_pending:
            draft.order.append(prev)
            atoms[prev].order.append(idx)
            add_bond(prev, idx, pending, pos)
        elif pending is not None:
            raise SmilesSyntaxError("bond symbol without a preceding atom", text, pos)
        if draft.bracket and draft.h and draft.chiral is not ChiralTag.NONE:
            draft.order.append(-1)
        atoms.append(draft)
        prev = idx
        pending = None
        dot_pending = False

    while i < n:
        ch = s[i]
        if ch == "[":
            j = s.find("]", i + 1)
            if j < 0:
                raise SmilesSyntaxError("unclosed bracket atom", text, i)
            content = s[i + 1 : j]
            if not content:
                raise SmilesSyntaxError("empty bracket atom", text, i)
            add_atom(_parse_bracket(content, text, i), i)
            i = j + 1
        elif ch in "BCNOPSFI":
            if ch == "C" and s.startswith("Cl", i):
                sym, i = "Cl", i + 2
            elif ch == "B" and s.startswith("Br", i):
                sym, i = "Br", i + 2
            else:
                sym, i = ch, i + 1
            add_atom(_AtomDraft(sym, False, False), i)
        elif ch in "bcnops":
            add_atom(_AtomDraft(ch.upper(), True, False), i)
            i += 1
        elif ch == "*":
            add_atom(_AtomDraft("*", False, False), i)
            i += 1
        elif ch in _BOND_CHARS:
            if pending is not None:
                raise SmilesSyntaxError("two consecutive bond symbols", text, i)
            if prev < 0:
                raise SmilesSyntaxError("bond symbol without a preceding atom", text, i)
            pending, pending_pos = ch, i
            i += 1
        elif ch == "(":
            if prev < 0 or dot_pending:
                raise SmilesSyntaxError("branch without a preceding atom", text, i)
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before a branch", text, i)
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise SmilesSyntaxError("unbalanced closing parenthesis", text, i)
            if pending is not None:
                raise SmilesSyntaxError("dangling bond symbol", text, pending_pos)
            if i > 0 and s[i - 1] == "(":
                raise SmilesSyntaxError("empty branch", text, i)
            prev = branch_stack.pop()
            i += 1
        elif ch.isdigit() or ch == "%":
            if prev < 0 or dot_pending:
                raise SmilesSyntaxError("ring closure without a preceding atom", text, i)
            if ch == "%":
                digits = s[i + 1 : i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise SmilesSyntaxError("malformed %nn ring closure", text, i)
                num, i = int(digits), i + 3
            else:
                num, i = int(ch), i + 1
            if num in rings:
                other, char, slot, opos = rings.pop(num)
                if char and pending and char != pending:
                    raise SmilesSyntaxError("conflicting ring-closure bond symbols", text, i)
                bchar = pending or char
                add_bond(other, prev, bchar, i)
                if pending and not char:
                    bonds[-1].first, bonds[-1].second = prev, other
                atoms[other].order[slot] = prev
                atoms[prev].order.append(other)
            else:
                atoms[prev].order.append(None)
                rings[num] = (prev, pending, len(atoms[prev].order) - 1, i)
            pending = None
        elif ch == ".":
            if pending is not None:
                raise SmilesSyntaxError("bond symbol before '.'", text, i)
            if branch_stack:
                raise SmilesSyntaxError("'.' inside a branch", text, i)
            if prev < 0 or dot_pending:
                raise SmilesSyntaxError("empty component", text, i)
            dot_pending = True
            i += 1
        elif ch.isspace():
            raise SmilesSyntaxError("whitespace inside SMILES", text, i)
        else:
            raise SmilesSyntaxError(f"unexpected character {ch!r}", text, i)

    if branch_stack:
        raise SmilesSyntaxError("unclosed branch", text)
    if rings:
        raise SmilesSyntaxError(f"unclosed ring bond {min(rings)}", text)
    if pending is not None:
        raise SmilesSyntaxError("dangling bond symbol", text, pending_pos)
    if dot_pending:
        raise SmilesSyntaxError("trailing '.'", text)
    return _assemble(atoms, bonds, s, text)


def _assemble(atoms: list[_AtomDraft], drafts: list[_BondDraft], s: str, text: str) -> Molecule:
    n = len(atoms)
    orders: list[BondOrder] = []
    implicit_aromatic: list[bool] = []
    for bd in drafts:
        ar = atoms[bd.a].aromatic and atoms[bd.b].aromatic
        if bd.char is None:
            orders.append(BondOrder.AROMATIC if ar else BondOrder.SINGLE)
            implicit_aromatic.append(ar)
        else:
            order = _BOND_CHARS[bd.char]
            if order is BondOrder.AROMATIC and not ar:
                raise SmilesSyntaxError("aromatic bond between non-aromatic atoms", text)
            orders.append(order)
            implicit_aromatic.append(False)

    adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
    for bi, bd in enumerate(drafts):
        adj[bd.a].append((bd.b, bi))
        adj[bd.b].append((bd.a, bi))
    ring_bonds = ring_bond_indices(n, adj)
    for bi, bd in enumerate(drafts):
        if orders[bi] is BondOrder.AROMATIC and bi not in ring_bonds:
            if implicit_aromatic[bi]:
                orders[bi] = BondOrder.SINGLE
            else:
                raise SmilesSyntaxError("aromatic bond outside a ring", text)

    in_ring = [False] * n
    for bi in ring_bonds:
        in_ring[drafts[bi].a] = in_ring[drafts[bi].b] = True
    bond_sum = [0] * n
    for bi, bd in enumerate(drafts):
        units = orders[bi].valence_units
        bond_sum[bd.a] += units
        bond_sum[bd.b] += units

    final_atoms = []
    seen_maps: set[int] = set()
    for i, d in enumerate(atoms):
        if d.aromatic and not in_ring[i]:
            raise SmilesSyntaxError("aromatic atom outside a ring", text)
        h = d.h
        if not d.bracket and d.element in ORGANIC_SUBSET:
            try:
                h = implicit_h_count(d.element, d.aromatic, bond_sum[i])
            except ValueError as exc:
                raise ValenceError(f"{exc} in {text!r}") from None
        if d.map_number:
            if d.map_number in seen_maps:
                raise MapError(f"duplicate atom-map number {d.map_number} in {text!r}")
            seen_maps.add(d.map_number)
        final_atoms.append(
            Atom(
                element=d.element,
                formal_charge=d.charge,
                aromatic=d.aromatic,
                explicit_h=h,
                map_number=d.map_number,
                chiral_tag=d.chiral,
                in_ring=in_ring[i],
                isotope=d.isotope,
            )
        )

    bonds = [Bond(bd.a, bd.b, orders[bi], bi in ring_bonds) for bi, bd in enumerate(drafts)]
    stereo_order = {
        i: tuple(d.order) for i, d in enumerate(atoms) if d.chiral is not ChiralTag.NONE
    }
    bond_stereo = _double_bond_stereo(drafts, orders, adj)
    return Molecule(final_atoms, bonds, s, stereo_order, bond_stereo)


def _direction_side(bd: _BondDraft, atom: int) -> int | None:
    """+1/-1 side of the substituent relative to double-bond atom ``atom``."""
    if bd.char not in ("/", "\\"):
        return None
    second = bd.second == atom
    up = bd.char == "/"
    return 1 if (up and second) or (not up and not second) else -1


def _double_bond_stereo(drafts, orders, adj) -> dict[int, DoubleBondStereo]:
    result = {}
    for bi, bd in enumerate(drafts):
        if orders[bi] is not BondOrder.DOUBLE:
            continue
        ends = []
        for end, other in ((bd.a, bd.b), (bd.b, bd.a)):
            found = None
            for nbr, nbi in adj[end]:
                if nbr == other:
                    continue
                side = _direction_side(drafts[nbi], end)
                if side is not None:
                    found = (nbr, side)
                    break
            ends.append(found)
        if ends[0] and ends[1]:
            (xa, sa), (xb, sb) = ends
            result[bi] = DoubleBondStereo(xa, xb, sa == sb)
    return result


# ---------------------------------------------------------------------------
# writing


@dataclass(slots=True)
class Traversal:
    """Depth-first spanning structure used to emit a line notation."""

    roots: list[int]
    parent: list[int]
    children: list[list[int]]
    opens: list[list[int]]  # ring partners whose closure digit opens here
    closes: list[list[int]]  # ring partners whose closure digit closes here


def traverse(
    n: int,
    neighbors: Callable[[int], Sequence[int]],
    start_order: Sequence[int],
) -> Traversal:
    """Depth-first traversal visiting neighbors in the order given."""
    visited = [False] * n
    parent = [-1] * n
    children: list[list[int]] = [[] for _ in range(n)]
    opens: list[list[int]] = [[] for _ in range(n)]
    closes: list[list[int]] = [[] for _ in range(n)]
    edges_done: set[tuple[int, int]] = set()
    roots = []
    for root in start_order:
        if visited[root]:
            continue
        roots.append(root)
        visited[root] = True
        stack = [(root, iter(neighbors(root)))]
        while stack:
            u, it = stack[-1]
            advanced = False
            for v in it:
                key = (u, v) if u < v else (v, u)
                if key in edges_done:
                    continue
                edges_done.add(key)
                if visited[v]:
                    opens[v].append(u)
                    closes[u].append(v)
                    continue
                visited[v] = True
                parent[v] = u
                children[u].append(v)
                stack.append((v, iter(neighbors(v))))
                advanced = True
                break
            if not advanced:
                stack.pop()
    return Traversal(roots, parent, children, opens, closes)


def output_neighbor_order(tr: Traversal, u: int, with_h: bool) -> list[int]:
    """Neighbor order as read back from the emitted string."""
    order = []
    if tr.parent[u] >= 0:
        order.append(tr.parent[u])
    if with_h:
        order.append(-1)
    order.extend(tr.closes[u])
    order.extend(tr.opens[u])
    order.extend(tr.children[u])
    return order


def render(
    tr: Traversal,
    atom_token: Callable[[int], str],
    bond_symbol: Callable[[int, int], str],
) -> list[str]:
    """Emit one string per traversal root (connected component)."""
    out_parts = []
    for root in tr.roots:
        buf: list[str] = []
        free: list[int] = []
        next_digit = 1
        digit_of: dict[tuple[int, int], int] = {}

        def ring_label(d: int) -> str:
            return str(d) if d < 10 else f"%{d:02d}"

        # iterative emission: stack of actions
        stack: list = [("atom", root)]
        while stack:
            kind, val = stack.pop()
            if kind == "text":
                buf.append(val)
                continue
            u = val
            buf.append(atom_token(u))
            for v in tr.closes[u]:
                d = digit_of.pop((v, u))
                buf.append(bond_symbol(v, u) + ring_label(d))
                free.append(d)
                free.sort()
            for v in tr.opens[u]:
                if free:
                    d = free.pop(0)
                else:
                    d = next_digit
                    next_digit += 1
                digit_of[(u, v)] = d
                buf.append(ring_label(d))
            kids = tr.children[u]
            actions: list = []
            for k, c in enumerate(kids):
                last = k == len(kids) - 1
                if not last:
                    actions.append(("text", "("))
                actions.append(("text", bond_symbol(u, c)))
                actions.append(("atom", c))
                if not last:
                    actions.append(("text", ")"))
            stack.extend(reversed(actions))
        out_parts.append("".join(buf))
    return out_parts


def _default_h(mol: Molecule, i: int) -> int | None:
    atom = mol.atoms[i]
    if atom.element not in ORGANIC_SUBSET:
        return None
    if atom.aromatic and atom.element.lower() not in AROMATIC_ORGANIC:
        return None
    try:
        return implicit_h_count(atom.element, atom.aromatic, mol.bond_order_sum(i))
    except ValueError:
        return None


def _atom_token(mol: Molecule, i: int, chiral: ChiralTag, include_maps: bool) -> str:
    atom = mol.atoms[i]
    sym = atom.element.lower() if atom.aromatic else atom.element
    mapno = atom.map_number if include_maps else 0
    if (
        atom.formal_charge == 0
        and atom.isotope == 0
        and chiral is ChiralTag.NONE
        and mapno == 0
        and (atom.element == "*" and atom.explicit_h == 0 or _default_h(mol, i) == atom.explicit_h)
    ):
        return sym
    parts = ["["]
    if atom.isotope:
        parts.append(str(atom.isotope))
    parts.append(sym)
    if chiral is ChiralTag.CCW:
        parts.append("@")
    elif chiral is ChiralTag.CW:
        parts.append("@@")
    if atom.explicit_h:
        parts.append("H" if atom.explicit_h == 1 else f"H{atom.explicit_h}")
    c = atom.formal_charge
    if c:
        sign = "+" if c > 0 else "-"
        parts.append(sign if abs(c) == 1 else f"{sign}{abs(c)}")
    if mapno:
        parts.append(f":{mapno}")
    parts.append("]")
    return "".join(parts)


def _emit(mol: Molecule, nbr_rank: Sequence[int], start_order: Sequence[int], include_maps: bool) -> list[str]:
    """Write ``mol`` visiting neighbors by ascending ``nbr_rank``."""
    n = mol.n_atoms
    sorted_nbrs = [sorted(mol.neighbor_indices(i), key=nbr_rank.__getitem__) for i in range(n)]
    tr = traverse(n, sorted_nbrs.__getitem__, start_order)

    chiral_out: dict[int, ChiralTag] = {}
    for i, order in mol.stereo_order.items():
        tag = mol.atoms[i].chiral_tag
        with_h = -1 in order
        out = output_neighbor_order(tr, i, with_h)
        if sorted(out) != sorted(order):
            continue
        chiral_out[i] = tag.inverted() if permutation_parity(list(order), out) else tag

    directions = _assign_directions(mol, tr)

    def atom_token(i: int) -> str:
        return _atom_token(mol, i, chiral_out.get(i, ChiralTag.NONE), include_maps)

    def bond_symbol(u: int, v: int) -> str:
        bi = mol.bond_index(u, v)
        bond = mol.bonds[bi]
        if bi in directions:
            return directions[bi]
        if bond.order is BondOrder.SINGLE:
            if mol.atoms[u].aromatic and mol.atoms[v].aromatic:
                return "-"
            return ""
        if bond.order is BondOrder.AROMATIC:
            return ""
        return bond.order.symbol

    return render(tr, atom_token, bond_symbol)


def _assign_directions(mol: Molecule, tr: Traversal) -> dict[int, str]:
    """Directional '/' '\\' markers reproducing each stored cis/trans bond."""
    chars: dict[int, str] = {}
    # output position of each atom, so orientation never depends on input order
    pos: dict[int, int] = {}
    stack = list(reversed(tr.roots))
    while stack:
        i = stack.pop()
        pos[i] = len(pos)
        stack.extend(reversed(tr.children[i]))

    def tree_written(x: int, y: int) -> tuple[int, int] | None:
        if tr.parent[y] == x:
            return x, y
        if tr.parent[x] == y:
            return y, x
        return None

    def side(bi: int, first: int, atom: int) -> int:
        up = chars[bi] == "/"
        second = first != atom
        return 1 if (up and second) or (not up and not second) else -1

    def char_for(want: int, atom_is_second: bool) -> str:
        if want == 1:
            return "/" if atom_is_second else "\\"
        return "\\" if atom_is_second else "/"

    def first_end(bi: int) -> int:
        bond = mol.bonds[bi]
        return min(pos[bond.a], pos[bond.b])

    for bi in sorted(mol.bond_stereo, key=first_end):
        st = mol.bond_stereo[bi]
        bond = mol.bonds[bi]
        ends = [(bond.a, bond.b, st.ref_a), (bond.b, bond.a, st.ref_b)]
        ends.sort(key=lambda e: pos[e[0]])
        refs = []
        for end, other, ref in ends:
            cands = [j for j in mol.neighbor_indices(end) if j != other and tree_written(j, end)]
            if not cands:
                refs = None
                break
            # prefer the substituent written first
            pick = tr.parent[end] if tr.parent[end] in cands else min(cands, key=pos.__getitem__)
            refs.append((pick, end, pick == ref))
        if refs is None:
            continue
        cis = st.cis
        for _, _, same in refs:
            if not same:
                cis = not cis
        (xa, a, _), (xb, b, _) = refs
        bia, bib = mol.bond_index(xa, a), mol.bond_index(xb, b)
        fa, fb = tree_written(xa, a)[0], tree_written(xb, b)[0]
        if bia in chars:
            sa = side(bia, fa, a)
        else:
            sa = 1
            candidate = char_for(sa, fa != a)
        want_b = sa if cis else -sa
        if bib in chars:
            if side(bib, fb, b) != want_b:
                continue  # conflicting conjugated markers; drop this center
            if bia not in chars:
                chars[bia] = candidate
            continue
        if bia not in chars:
            chars[bia] = candidate
        chars[bib] = char_for(want_b, fb != b)
    return chars


def write_smiles(mol: Molecule, canonical: bool = True, include_maps: bool = True) -> str:
    """Serialize ``mol`` to SMILES.

    With ``canonical=True`` the output depends only on the molecular graph:
    traversal starts at the lowest canonical rank of each component and
    visits neighbors by ascending rank.
    """
    n = mol.n_atoms
    if n == 0:
        return ""
    if canonical:
        ranks = canonical_ranks(mol, use_maps=include_maps)
        start = sorted(range(n), key=ranks.__getitem__)
        parts = _emit(mol, ranks, start, include_maps)
        return ".".join(parts)
    return ".".join(_emit(mol, list(range(n)), list(range(n)), include_maps))


def randomize_traversal(mol: Molecule, seed: int, include_maps: bool = True) -> str:
    """Write ``mol`` with a random start atom and branch order.

    The traversal is fully determined by ``seed``; component order is
    shuffled as well.
    """
    n = mol.n_atoms
    rng = random.Random(seed)
    keys = list(range(n))
    rng.shuffle(keys)
    start = list(range(n))
    rng.shuffle(start)
    return ".".join(_emit(mol, keys, start, include_maps))
