"""Functional-group library and FG signatures.

An FG signature is an ``int`` used as a bitset: bit ``f`` is set when some
match of library pattern ``f`` lies entirely outside the reaction-center atoms
of a reactant or product molecule.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass
from importlib import resources
from os import PathLike
from typing import Iterable, Sequence

from ..chem.match import match_pattern
from ..chem.molecule import Molecule
from ..chem.smarts import QueryPattern, parse_smarts
from ..exceptions import ConfigError

_MAP_SUFFIX = re.compile(r":\d+\]")
_CACHE_LIMIT = 200_000


@dataclass(frozen=True, slots=True)
class FGDefinition:
    fg_id: int
    name: str
    smarts: str


@dataclass(frozen=True, slots=True)
class MoleculeFGs:
    """All library matches in one molecule, as ``(fg_id, atom set)`` pairs."""

    matches: tuple[tuple[int, frozenset[int]], ...]
    by_atom: dict[int, tuple[int, ...]]  # atom -> indices into ``matches``

    def containing(self, atoms: Iterable[int]) -> set[int]:
        """Indices of matches that touch any of ``atoms``."""
        out: set[int] = set()
        for a in atoms:
            out.update(self.by_atom.get(a, ()))
        return out


class FGLibrary:
    """Ordered, densely numbered set of functional-group SMARTS patterns.

    Args:
        definitions: FG definitions with ids ``0..n-1`` in order.

    Raises:
        ConfigError: Ids are not dense, names repeat, or the library is empty.
        SmilesSyntaxError, UnsupportedFeature: A pattern does not parse.
    """

    def __init__(self, definitions: Sequence[FGDefinition]):
        defs = tuple(definitions)
        if not defs:
            raise ConfigError("functional-group library is empty")
        for expected, d in enumerate(defs):
            if d.fg_id != expected:
                raise ConfigError(f"fg ids must be dense 0..n-1; found {d.fg_id} at position {expected}")
        names = [d.name for d in defs]
        if len(set(names)) != len(names):
            raise ConfigError("functional-group names must be unique")
        self.definitions = defs
        self.patterns: tuple[QueryPattern, ...] = tuple(parse_smarts(d.smarts) for d in defs)
        payload = "".join(f"{d.fg_id}\t{d.name}\t{d.smarts}\n" for d in defs)
        self.digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()
        self._cache: dict[str, MoleculeFGs] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.definitions)

    def __repr__(self) -> str:
        return f"FGLibrary(size={len(self)}, digest={self.digest[:12]})"

    @property
    def size(self) -> int:
        return len(self.definitions)

    def name_of(self, fg_id: int) -> str:
        return self.definitions[fg_id].name

    def id_of(self, name: str) -> int:
        for d in self.definitions:
            if d.name == name:
                return d.fg_id
        raise KeyError(name)

    # -- construction ----------------------------------------------------

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "FGLibrary":
        """Parse ``fg_id<TAB>name<TAB>SMARTS`` records; '#' starts a comment line."""
        defs = []
        for lineno, raw in enumerate(lines, 1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise ConfigError(f"line {lineno}: expected 3 tab-separated fields, got {len(fields)}")
            try:
                fg_id = int(fields[0])
            except ValueError as exc:
                raise ConfigError(f"line {lineno}: fg_id {fields[0]!r} is not an integer") from exc
            defs.append(FGDefinition(fg_id, fields[1].strip(), fields[2].strip()))
        return cls(defs)

    @classmethod
    def from_file(cls, path: str | PathLike) -> "FGLibrary":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)

    @classmethod
    def default(cls) -> "FGLibrary":
        """The library shipped with the package."""
        text = resources.files("chemcensor.data").joinpath("fg_library.tsv").read_text("utf-8")
        return cls.from_lines(text.splitlines())

    def subset(self, names: Sequence[str]) -> "FGLibrary":
        """A new library holding the named definitions, renumbered densely."""
        picked = [self.definitions[self.id_of(n)] for n in names]
        return FGLibrary([FGDefinition(i, d.name, d.smarts) for i, d in enumerate(picked)])

    # -- matching --------------------------------------------------------

    def _compute(self, mol: Molecule) -> MoleculeFGs:
        matches: list[tuple[int, frozenset[int]]] = []
        for fg_id, pattern in enumerate(self.patterns):
            for m in match_pattern(pattern, mol):
                matches.append((fg_id, frozenset(m)))
        by_atom: dict[int, list[int]] = {}
        for k, (_, atoms) in enumerate(matches):
            for a in atoms:
                by_atom.setdefault(a, []).append(k)
        return MoleculeFGs(tuple(matches), {a: tuple(v) for a, v in by_atom.items()})

    def find(self, mol: Molecule) -> MoleculeFGs:
        """All library matches in ``mol``.

        Results are cached by the molecule's source SMILES with map numbers
        stripped; the same text always parses to the same atom order.
        """
        key = _MAP_SUFFIX.sub("]", mol.source_text) if mol.source_text else None
        if key is not None:
            hit = self._cache.get(key)
            if hit is not None:
                return hit
        result = self._compute(mol)
        if key is not None:
            with self._lock:
                if len(self._cache) >= _CACHE_LIMIT:
                    self._cache.clear()
                self._cache[key] = result
        return result

    def present(self, mol: Molecule) -> int:
        """Signature of every FG present anywhere in ``mol``."""
        bits = 0
        for fg_id, _ in self.find(mol).matches:
            bits |= 1 << fg_id
        return bits


def static_signature(fgs: MoleculeFGs, rc_atoms: frozenset[int] | set[int]) -> int:
    """Bits of FGs with at least one match disjoint from ``rc_atoms``."""
    bits = 0
    for fg_id, atoms in fgs.matches:
        if not (bits >> fg_id) & 1 and atoms.isdisjoint(rc_atoms):
            bits |= 1 << fg_id
    return bits


def signature_bits(signature: int) -> list[int]:
    """Set bit positions of a signature, ascending."""
    out = []
    k = 0
    while signature:
        if signature & 1:
            out.append(k)
        signature >>= 1
        k += 1
    return out


def signature_to_hex(signature: int, width: int) -> str:
    return format(signature, f"0{(width + 3) // 4}x")


def signature_from_hex(text: str) -> int:
    return int(text, 16)
