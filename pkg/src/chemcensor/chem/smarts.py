"""SMARTS parsing into compiled query patterns.

Supported subset: element symbols (aliphatic and aromatic), ``[#n]``, ``*``,
``a``/``A``, charge, isotope, ``H``, ``D``, ``X``, ``R``, ``r``, ``x``, ``v``,
chirality (accepted, never matched), atom-map classes (ignored), the logical
operators ``! & , ;`` and the bonds ``- = # : ~ @ / \\``. Recursive SMARTS,
component grouping and disconnected patterns raise
:class:`~chemcensor.exceptions.UnsupportedFeature`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

from ..exceptions import SmilesSyntaxError, UnsupportedFeature
from .elements import ELEMENTS, SYMBOLS
from .molecule import Bond, BondOrder, Molecule

AtomTest = Callable[[Molecule, int], bool]
BondTest = Callable[[Bond], bool]

_AROMATIC_SYMBOLS = ("se", "as", "te", "b", "c", "n", "o", "p", "s")
_ORGANIC_UNBRACKETED = ("Cl", "Br", "B", "C", "N", "O", "P", "S", "F", "I")


@dataclass(slots=True)
class QueryAtom:
    expr: tuple
    test: AtomTest
    elements: frozenset[str] | None  # element hint when the query pins it down


@dataclass(slots=True)
class QueryBond:
    a: int
    b: int
    expr: tuple
    test: BondTest


@dataclass(slots=True)
class QueryPattern:
    """A connected SMARTS query graph with compiled predicates."""

    smarts: str
    atoms: list[QueryAtom]
    bonds: list[QueryBond]
    adjacency: list[list[tuple[int, int]]] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.atoms)

    required: dict[str, int] = field(default_factory=dict, repr=False, compare=False)
    plan: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        for qa in self.atoms:
            if qa.elements is not None and len(qa.elements) == 1:
                (el,) = qa.elements
                self.required[el] = self.required.get(el, 0) + 1

    @property
    def required_elements(self) -> dict[str, int]:
        """Minimum element counts any matching molecule must contain."""
        return self.required


# ---------------------------------------------------------------------------
# expression compilation


def _total_valence(mol: Molecule, i: int) -> int:
    atom = mol.atoms[i]
    return mol.bond_order_sum(i) + atom.explicit_h + (1 if atom.aromatic else 0)


def _compile_atom_prim(kind: str, value) -> AtomTest:
    if kind == "any":
        return lambda mol, i: True
    if kind == "elem":
        sym, aro = value
        if aro is None:
            return lambda mol, i: mol.atoms[i].element == sym
        return lambda mol, i: mol.atoms[i].element == sym and mol.atoms[i].aromatic is aro
    if kind == "aromatic":
        return lambda mol, i: mol.atoms[i].aromatic is value
    if kind == "H":
        return lambda mol, i: mol.atoms[i].explicit_h == value
    if kind == "D":
        return lambda mol, i: mol.degree(i) == value
    if kind == "X":
        return lambda mol, i: mol.degree(i) + mol.atoms[i].explicit_h == value
    if kind == "R":
        if value is None:
            return lambda mol, i: mol.atoms[i].in_ring
        if value == 0:
            return lambda mol, i: not mol.atoms[i].in_ring
        return lambda mol, i: mol.ring_count[i] == value
    if kind == "r":
        if value is None:
            return lambda mol, i: mol.atoms[i].in_ring
        return lambda mol, i: any(len(r) == value and i in r for r in mol.rings)
    if kind == "x":
        if value is None:
            return lambda mol, i: mol.atoms[i].in_ring
        return lambda mol, i: sum(1 for _, bi in mol.neighbors(i) if mol.bonds[bi].in_ring) == value
    if kind == "v":
        return lambda mol, i: _total_valence(mol, i) == value
    if kind == "charge":
        return lambda mol, i: mol.atoms[i].formal_charge == value
    if kind == "isotope":
        return lambda mol, i: mol.atoms[i].isotope == value
    raise AssertionError(kind)


def _compile(expr: tuple, prim: Callable) -> Callable:
    op = expr[0]
    if op == "prim":
        return prim(expr[1], expr[2])
    if op == "not":
        inner = _compile(expr[1], prim)
        return lambda *a: not inner(*a)
    parts = [_compile(e, prim) for e in expr[1]]
    if len(parts) == 1:
        return parts[0]
    if op == "and":
        if len(parts) == 2:
            p, q = parts
            return lambda *a: p(*a) and q(*a)
        return lambda *a: all(f(*a) for f in parts)
    if len(parts) == 2:
        p, q = parts
        return lambda *a: p(*a) or q(*a)
    return lambda *a: any(f(*a) for f in parts)


def _compile_bond_prim(kind: str, value) -> BondTest:
    if kind == "order":
        return lambda b: b.order is value
    if kind == "any":
        return lambda b: True
    if kind == "ring":
        return lambda b: b.in_ring
    if kind == "default":
        return lambda b: b.order is BondOrder.SINGLE or b.order is BondOrder.AROMATIC
    raise AssertionError(kind)


def _element_hint(expr: tuple) -> frozenset[str] | None:
    """Set of elements the expression restricts to, or None if unrestricted."""
    op = expr[0]
    if op == "prim":
        return frozenset({expr[2][0]}) if expr[1] == "elem" else None
    if op == "not":
        return None
    hints = [_element_hint(e) for e in expr[1]]
    if op == "and":
        known = [h for h in hints if h is not None]
        if not known:
            return None
        out = known[0]
        for h in known[1:]:
            out = out & h
        return out
    if any(h is None for h in hints):
        return None
    return frozenset().union(*hints)


# ---------------------------------------------------------------------------
# atom-expression parser


class _ExprParser:
    def __init__(self, text: str, whole: str, offset: int):
        self.s = text
        self.whole = whole
        self.offset = offset
        self.i = 0

    def error(self, msg: str) -> SmilesSyntaxError:
        return SmilesSyntaxError(msg, self.whole, self.offset + self.i)

    def peek(self) -> str:
        return self.s[self.i] if self.i < len(self.s) else ""

    def parse(self) -> tuple:
        expr = self.low_and()
        if self.i != len(self.s):
            raise self.error(f"unexpected {self.peek()!r} in bracket atom")
        return expr

    def low_and(self) -> tuple:
        parts = [self.or_()]
        while self.peek() == ";":
            self.i += 1
            parts.append(self.or_())
        return parts[0] if len(parts) == 1 else ("and", parts)

    def or_(self) -> tuple:
        parts = [self.high_and()]
        while self.peek() == ",":
            self.i += 1
            parts.append(self.high_and())
        return parts[0] if len(parts) == 1 else ("or", parts)

    def high_and(self) -> tuple:
        parts = [self.unary()]
        while True:
            c = self.peek()
            if c == "&":
                self.i += 1
                parts.append(self.unary())
            elif c and c not in ";,":
                parts.append(self.unary())
            else:
                break
        return parts[0] if len(parts) == 1 else ("and", parts)

    def unary(self) -> tuple:
        if self.peek() == "!":
            self.i += 1
            return ("not", self.unary())
        return self.primitive()

    def number(self) -> int | None:
        j = self.i
        while j < len(self.s) and self.s[j].isdigit():
            j += 1
        if j == self.i:
            return None
        val = int(self.s[self.i : j])
        self.i = j
        return val

    def primitive(self) -> tuple:
        s, i = self.s, self.i
        if i >= len(s):
            raise self.error("incomplete atom expression")
        c = s[i]
        if c == "$":
            raise UnsupportedFeature(f"recursive SMARTS is not supported: {self.whole!r}")
        if c == "*":
            self.i += 1
            return ("prim", "any", None)
        if c == "#":
            self.i += 1
            num = self.number()
            if num is None or not 1 <= num <= len(SYMBOLS):
                raise self.error("bad atomic number")
            return ("prim", "elem", (SYMBOLS[num - 1], None))
        if c.isdigit():
            return ("prim", "isotope", self.number())
        if c in "+-":
            sign = 1 if c == "+" else -1
            self.i += 1
            num = self.number()
            if num is None:
                num = 1
                while self.peek() == c:
                    self.i += 1
                    num += 1
            return ("prim", "charge", sign * num)
        if c == "@":
            self.i += 1
            while self.peek() in ("@", "?"):
                self.i += 1
            return ("prim", "any", None)
        if c == ":":
            self.i += 1
            if self.number() is None:
                raise self.error("bad atom-map class")
            return ("prim", "any", None)
        for sym in _AROMATIC_SYMBOLS:
            if s.startswith(sym, i):
                self.i += len(sym)
                return ("prim", "elem", (sym.capitalize(), True))
        if c.isupper():
            two = s[i : i + 2]
            if len(two) == 2 and two[1].islower() and two in ELEMENTS:
                self.i += 2
                return ("prim", "elem", (two, False))
            if c == "H":
                self.i += 1
                if self.i == len(s) and i == 0:
                    return ("prim", "elem", ("H", None))
                num = self.number()
                return ("prim", "H", 1 if num is None else num)
            if c in ("D", "X", "R"):
                self.i += 1
                num = self.number()
                if c == "R":
                    return ("prim", "R", num)
                return ("prim", c, 1 if num is None else num)
            if c == "A":
                self.i += 1
                return ("prim", "aromatic", False)
            if c in ELEMENTS:
                self.i += 1
                return ("prim", "elem", (c, False))
        if c == "a":
            self.i += 1
            return ("prim", "aromatic", True)
        if c in ("r", "x", "v"):
            self.i += 1
            num = self.number()
            if c == "v":
                return ("prim", "v", 1 if num is None else num)
            return ("prim", c, num)
        if c == "h":
            raise UnsupportedFeature(f"implicit-H primitive 'h' is not supported: {self.whole!r}")
        raise self.error(f"unknown SMARTS primitive {c!r}")


class _BondExprParser(_ExprParser):
    def high_and(self) -> tuple:
        parts = [self.unary()]
        while True:
            c = self.peek()
            if c == "&":
                self.i += 1
                parts.append(self.unary())
            elif c and c not in ";,":
                parts.append(self.unary())
            else:
                break
        return parts[0] if len(parts) == 1 else ("and", parts)

    def primitive(self) -> tuple:
        c = self.peek()
        self.i += 1
        if c == "-" or c in "/\\":
            return ("prim", "order", BondOrder.SINGLE)
        if c == "=":
            return ("prim", "order", BondOrder.DOUBLE)
        if c == "#":
            return ("prim", "order", BondOrder.TRIPLE)
        if c == ":":
            return ("prim", "order", BondOrder.AROMATIC)
        if c == "~":
            return ("prim", "any", None)
        if c == "@":
            return ("prim", "ring", None)
        raise self.error(f"unknown bond primitive {c!r}")


_BOND_EXPR_CHARS = set("-=#:~@/\\!&,;")


def parse_smarts(text: str) -> QueryPattern:
    """Compile a SMARTS string into a :class:`QueryPattern`.

    Raises:
        SmilesSyntaxError: Malformed pattern.
        UnsupportedFeature: Construct outside the supported subset.
    """
    if not isinstance(text, str) or not text.strip():
        raise SmilesSyntaxError("empty SMARTS", str(text))
    s = text.strip()
    if s.startswith("("):
        raise UnsupportedFeature(f"component-level grouping is not supported: {s!r}")
    if ">" in s:
        raise UnsupportedFeature(f"reaction SMARTS is not supported: {s!r}")
    if "$(" in s:
        raise UnsupportedFeature(f"recursive SMARTS is not supported: {s!r}")

    atoms: list[QueryAtom] = []
    bonds: list[QueryBond] = []
    pairs: set[tuple[int, int]] = set()
    branch: list[int] = []
    rings: dict[int, tuple[int, tuple | None]] = {}
    prev = -1
    pending: tuple | None = None
    i, n = 0, len(s)

    def add_bond(a: int, b: int, expr: tuple | None, pos: int) -> None:
        key = (min(a, b), max(a, b))
        if a == b or key in pairs:
            raise SmilesSyntaxError("invalid ring closure", s, pos)
        pairs.add(key)
        expr = expr or ("prim", "default", None)
        bonds.append(QueryBond(a, b, expr, _compile(expr, _compile_bond_prim)))

    def add_atom(expr: tuple, pos: int) -> None:
        nonlocal prev, pending
        idx = len(atoms)
        atoms.append(QueryAtom(expr, _compile(expr, _compile_atom_prim), _element_hint(expr)))
        if prev >= 0:
            add_bond(prev, idx, pending, pos)
        elif pending is not None:
            raise SmilesSyntaxError("bond without a preceding atom", s, pos)
        prev = idx
        pending = None

    while i < n:
        c = s[i]
        if c == "[":
            j = s.find("]", i + 1)
            if j < 0:
                raise SmilesSyntaxError("unclosed bracket atom", s, i)
            body = s[i + 1 : j]
            if not body:
                raise SmilesSyntaxError("empty bracket atom", s, i)
            add_atom(_ExprParser(body, s, i + 1).parse(), i)
            i = j + 1
        elif c in _BOND_EXPR_CHARS:
            if pending is not None or prev < 0:
                raise SmilesSyntaxError("misplaced bond expression", s, i)
            j = i
            while j < n and s[j] in _BOND_EXPR_CHARS:
                j += 1
            pending = _BondExprParser(s[i:j], s, i).parse()
            i = j
        elif c == "(":
            if prev < 0 or pending is not None:
                raise SmilesSyntaxError("misplaced branch", s, i)
            branch.append(prev)
            i += 1
        elif c == ")":
            if not branch or pending is not None:
                raise SmilesSyntaxError("unbalanced parenthesis", s, i)
            prev = branch.pop()
            i += 1
        elif c.isdigit() or c == "%":
            if prev < 0:
                raise SmilesSyntaxError("ring closure without an atom", s, i)
            if c == "%":
                digits = s[i + 1 : i + 3]
                if len(digits) != 2 or not digits.isdigit():
                    raise SmilesSyntaxError("malformed %nn ring closure", s, i)
                num, i = int(digits), i + 3
            else:
                num, i = int(c), i + 1
            if num in rings:
                other, expr = rings.pop(num)
                add_bond(other, prev, pending or expr, i)
            else:
                rings[num] = (prev, pending)
            pending = None
        elif c == ".":
            raise UnsupportedFeature(f"disconnected SMARTS patterns are not supported: {s!r}")
        else:
            matched = False
            for sym in _ORGANIC_UNBRACKETED:
                if s.startswith(sym, i):
                    add_atom(("prim", "elem", (sym, False)), i)
                    i += len(sym)
                    matched = True
                    break
            if not matched:
                for sym in ("b", "c", "n", "o", "p", "s"):
                    if c == sym:
                        add_atom(("prim", "elem", (sym.upper(), True)), i)
                        i += 1
                        matched = True
                        break
            if not matched:
                if c == "*":
                    add_atom(("prim", "any", None), i)
                elif c == "a":
                    add_atom(("prim", "aromatic", True), i)
                elif c == "A":
                    add_atom(("prim", "aromatic", False), i)
                else:
                    raise SmilesSyntaxError(f"unexpected character {c!r}", s, i)
                i += 1

    if branch:
        raise SmilesSyntaxError("unclosed branch", s)
    if rings:
        raise SmilesSyntaxError("unclosed ring bond", s)
    if pending is not None:
        raise SmilesSyntaxError("dangling bond expression", s)
    if not atoms:
        raise SmilesSyntaxError("SMARTS without atoms", s)

    adjacency: list[list[tuple[int, int]]] = [[] for _ in atoms]
    for bi, qb in enumerate(bonds):
        adjacency[qb.a].append((qb.b, bi))
        adjacency[qb.b].append((qb.a, bi))
    return QueryPattern(s, atoms, bonds, adjacency)


__all__ = ["QueryAtom", "QueryBond", "QueryPattern", "parse_smarts"]
