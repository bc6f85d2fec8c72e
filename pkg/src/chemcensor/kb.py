"""Precedent knowledge base: build, merge, persist and query.

Every mapped corpus reaction contributes one precedent per RC level. Entries
are keyed by canonical RC key within a level and aggregate FG signatures by
bitwise OR, so an FG is tolerated at a reaction center once any precedent
showed it there.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from typing import Iterable, Iterator

from .exceptions import (
    ChemCensorError,
    FatalError,
    FormatError,
    MetadataMismatch,
    VersionError,
)
from .reaction.center import LEVELS, ReactionAnalysis, analyze_reaction
from .reaction.fg import FGDefinition, FGLibrary, signature_from_hex, signature_to_hex
from .reaction.reaction import parse_reaction

logger = logging.getLogger(__name__)

KB_FORMAT_VERSION = 1
DEFAULT_DOC_REF_CAP = 5
_MAGIC = "#chemcensor-kb"
_END = "#end"
_MAX_ERROR_SAMPLES = 50


@dataclass(slots=True)
class PrecedentEntry:
    """Aggregated precedents sharing one RC key at one level."""

    canonical_key: str
    level: int
    aggregated_signature: int
    precedent_count: int
    doc_refs: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class KBMetadata:
    version: int
    library_digest: str
    library_size: int
    source: str = ""
    reaction_count: int = 0
    built_at: str = ""
    doc_ref_cap: int = DEFAULT_DOC_REF_CAP

    def compatible_with(self, other: "KBMetadata") -> bool:
        return (self.version, self.library_digest, self.library_size) == (
            other.version,
            other.library_digest,
            other.library_size,
        )

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "library_digest": self.library_digest,
            "library_size": self.library_size,
            "source": self.source,
            "reaction_count": self.reaction_count,
            "built_at": self.built_at,
            "doc_ref_cap": self.doc_ref_cap,
        }


@dataclass(slots=True)
class BuildStats:
    """Outcome counts of a knowledge-base build.

    Attributes:
        records: Corpus records read.
        added: Reactions that contributed precedents.
        skipped_unmapped: Records without an atom mapping.
        skipped_errors: Records that failed to parse or analyze.
        errors: Up to 50 ``(record number, reason)`` samples.
    """

    records: int = 0
    added: int = 0
    skipped_unmapped: int = 0
    skipped_errors: int = 0
    errors: list[tuple[int, str]] = field(default_factory=list)

    def merge(self, other: "BuildStats", offset: int = 0) -> None:
        self.records += other.records
        self.added += other.added
        self.skipped_unmapped += other.skipped_unmapped
        self.skipped_errors += other.skipped_errors
        room = _MAX_ERROR_SAMPLES - len(self.errors)
        self.errors.extend((n + offset, msg) for n, msg in other.errors[:room])

    def to_dict(self) -> dict:
        return {
            "records": self.records,
            "added": self.added,
            "skipped_unmapped": self.skipped_unmapped,
            "skipped_errors": self.skipped_errors,
            "errors": [list(e) for e in self.errors],
        }


class KnowledgeBase:
    """Per-level maps from canonical RC keys to precedent entries."""

    def __init__(self, metadata: KBMetadata):
        self.metadata = metadata
        self._levels: tuple[dict[str, PrecedentEntry], ...] = tuple({} for _ in LEVELS)

    @classmethod
    def empty(cls, library: FGLibrary, source: str = "", doc_ref_cap: int = DEFAULT_DOC_REF_CAP) -> "KnowledgeBase":
        return cls(
            KBMetadata(
                KB_FORMAT_VERSION,
                library.digest,
                library.size,
                source,
                0,
                _now(),
                doc_ref_cap,
            )
        )

    def __len__(self) -> int:
        return sum(len(d) for d in self._levels)

    def __repr__(self) -> str:
        sizes = ", ".join(f"L{lv}={len(d)}" for lv, d in zip(LEVELS, self._levels))
        return f"KnowledgeBase({sizes}, reactions={self.metadata.reaction_count})"

    def lookup(self, level: int, key: str) -> PrecedentEntry | None:
        """Exact-key lookup within one level; ``None`` when absent."""
        if level not in LEVELS:
            raise ValueError(f"level must be in 1..5, got {level}")
        return self._levels[level - 1].get(key)

    def entries(self, level: int) -> dict[str, PrecedentEntry]:
        return self._levels[level - 1]

    def iter_entries(self) -> Iterator[PrecedentEntry]:
        for d in self._levels:
            yield from (d[k] for k in sorted(d))

    def add(self, analysis: ReactionAnalysis, doc_ref: str | None = None) -> None:
        """Record one reaction as a precedent at every level."""
        cap = self.metadata.doc_ref_cap
        for level in LEVELS:
            key = analysis.key(level)
            sig = analysis.signature(level)
            table = self._levels[level - 1]
            entry = table.get(key)
            if entry is None:
                refs = (doc_ref,) if doc_ref and cap > 0 else ()
                table[key] = PrecedentEntry(key, level, sig, 1, refs)
            else:
                entry.aggregated_signature |= sig
                entry.precedent_count += 1
                if doc_ref and len(entry.doc_refs) < cap:
                    entry.doc_refs = entry.doc_refs + (doc_ref,)
        self.metadata = replace(self.metadata, reaction_count=self.metadata.reaction_count + 1)

    def content_digest(self) -> str:
        """SHA-256 over the entries and library digest (ignores build time)."""
        h = hashlib.sha256(self.metadata.library_digest.encode())
        for e in self.iter_entries():
            h.update(f"{e.level}\t{e.precedent_count}\t{e.aggregated_signature:x}\t{e.canonical_key}\n".encode())
        return h.hexdigest()

    def same_entries(self, other: "KnowledgeBase", compare_refs: bool = False) -> bool:
        """Lookup equivalence: identical keys, counts and signatures per level."""
        for mine, theirs in zip(self._levels, other._levels):
            if mine.keys() != theirs.keys():
                return False
            for k, e in mine.items():
                o = theirs[k]
                if (e.precedent_count, e.aggregated_signature) != (o.precedent_count, o.aggregated_signature):
                    return False
                if compare_refs and e.doc_refs != o.doc_refs:
                    return False
        return True


def _now() -> str:
    return datetime.now(timezone.utc).replace(microsecond=0).isoformat()


# ---------------------------------------------------------------------------
# building


def iter_corpus(lines: Iterable[str]) -> Iterator[tuple[int, str, str | None]]:
    """Yield ``(record number, reaction SMILES, doc ref)`` from corpus lines.

    Blank lines and lines starting with '#' are skipped; an optional second
    tab-separated column holds the document reference.
    """
    for n, raw in enumerate(lines, 1):
        line = raw.strip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        text, _, ref = line.partition("\t")
        ref = ref.split("\t")[0].strip()
        yield n, text.strip(), ref or None


def _build_records(
    records: Iterable[tuple[int, str, str | None]],
    library: FGLibrary,
    source: str,
    doc_ref_cap: int,
) -> tuple[KnowledgeBase, BuildStats]:
    kb = KnowledgeBase.empty(library, source, doc_ref_cap)
    stats = BuildStats()
    for n, text, ref in records:
        stats.records += 1
        try:
            rxn = parse_reaction(text)
            if not rxn.mapped:
                stats.skipped_unmapped += 1
                continue
            analysis = analyze_reaction(rxn, library)
        except (ChemCensorError, ValueError) as exc:
            stats.skipped_errors += 1
            if len(stats.errors) < _MAX_ERROR_SAMPLES:
                stats.errors.append((n, f"{type(exc).__name__}: {exc}"))
            logger.debug("record %d skipped: %s", n, exc)
            continue
        kb.add(analysis, ref)
        stats.added += 1
    return kb, stats


def _shard_worker(args) -> tuple[KnowledgeBase, BuildStats]:
    records, defs, source, cap = args
    library = FGLibrary([FGDefinition(*d) for d in defs])
    return _build_records(records, library, source, cap)


def build_kb(
    corpus: Iterable[str] | str | os.PathLike,
    library: FGLibrary,
    source: str = "",
    doc_ref_cap: int = DEFAULT_DOC_REF_CAP,
    jobs: int = 1,
) -> tuple[KnowledgeBase, BuildStats]:
    """Build a knowledge base from a mapped reaction corpus.

    Args:
        corpus: A path to a corpus file or an iterable of corpus lines
            (``reaction_smiles[<TAB>doc_ref]``).
        library: FG library; its digest is stored in the KB metadata.
        source: Corpus identifier recorded in the metadata. Defaults to the
            file name when ``corpus`` is a path.
        doc_ref_cap: Maximum document references kept per entry.
        jobs: Worker processes. The corpus is split into contiguous shards
            whose partial KBs are merged in order.

    Returns:
        The knowledge base and build statistics. Unmapped and malformed
        records are counted and skipped, never mapped heuristically.

    Raises:
        FatalError: The corpus file cannot be read.
    """
    if isinstance(corpus, (str, os.PathLike)):
        path = os.fspath(corpus)
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise FatalError(f"cannot read corpus {path!r}: {exc}") from exc
        source = source or os.path.basename(path)
    else:
        lines = corpus
    records = list(iter_corpus(lines))
    if jobs <= 1 or len(records) < 2 * jobs:
        return _build_records(records, library, source, doc_ref_cap)

    size = -(-len(records) // jobs)
    shards = [records[i : i + size] for i in range(0, len(records), size)]
    defs = [(d.fg_id, d.name, d.smarts) for d in library.definitions]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_shard_worker, [(s, defs, source, doc_ref_cap) for s in shards]))
    kb, stats = parts[0]
    for part_kb, part_stats in parts[1:]:
        kb = merge_kb(kb, part_kb)
        stats.merge(part_stats)
    return kb, stats


def merge_kb(a: KnowledgeBase, b: KnowledgeBase) -> KnowledgeBase:
    """Combine two knowledge bases built with the same library.

    Counts add, signatures OR, and document references concatenate (``a``
    first) up to the cap.

    Raises:
        MetadataMismatch: Format version, library digest or size differ.
    """
    if not a.metadata.compatible_with(b.metadata):
        raise MetadataMismatch(
            "cannot merge knowledge bases with different version or FG library "
            f"({a.metadata.library_digest[:12]}/{a.metadata.library_size} vs "
            f"{b.metadata.library_digest[:12]}/{b.metadata.library_size})"
        )
    cap = max(a.metadata.doc_ref_cap, b.metadata.doc_ref_cap)
    sources = [s for s in (a.metadata.source, b.metadata.source) if s]
    meta = replace(
        a.metadata,
        source=a.metadata.source if len(set(sources)) <= 1 else "+".join(sources),
        reaction_count=a.metadata.reaction_count + b.metadata.reaction_count,
        built_at=max(a.metadata.built_at, b.metadata.built_at),
        doc_ref_cap=cap,
    )
    out = KnowledgeBase(meta)
    for level in LEVELS:
        table = out.entries(level)
        for src in (a, b):
            for key, e in src.entries(level).items():
                cur = table.get(key)
                if cur is None:
                    table[key] = PrecedentEntry(key, level, e.aggregated_signature, e.precedent_count, e.doc_refs[:cap])
                else:
                    cur.aggregated_signature |= e.aggregated_signature
                    cur.precedent_count += e.precedent_count
                    cur.doc_refs = (cur.doc_refs + e.doc_refs)[:cap]
    return out


# ---------------------------------------------------------------------------
# persistence


def save_kb(kb: KnowledgeBase, path: str | os.PathLike) -> None:
    """Write ``kb`` as a versioned text record file (atomically replaced)."""
    width = kb.metadata.library_size
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".kb-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"{_MAGIC}\t{json.dumps(kb.metadata.to_dict(), sort_keys=True)}\n")
            n = 0
            for e in kb.iter_entries():
                refs = json.dumps(list(e.doc_refs))
                sig = signature_to_hex(e.aggregated_signature, width)
                fh.write(f"{e.level}\t{e.precedent_count}\t{sig}\t{refs}\t{e.canonical_key}\n")
                n += 1
            fh.write(f"{_END}\t{n}\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_kb(path: str | os.PathLike) -> KnowledgeBase:
    """Read a file written by :func:`save_kb`.

    Raises:
        OSError: The file cannot be opened.
        FormatError: Missing header or trailer, or a malformed record.
        VersionError: The file uses another format version.
    """
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].startswith(_MAGIC + "\t"):
        raise FormatError(f"{os.fspath(path)!r} is not a knowledge base file")
    try:
        header = json.loads(lines[0].split("\t", 1)[1])
    except json.JSONDecodeError as exc:
        raise FormatError(f"corrupt header: {exc}") from exc
    if header.get("version") != KB_FORMAT_VERSION:
        raise VersionError(f"unsupported knowledge base version {header.get('version')!r} (expected {KB_FORMAT_VERSION})")
    try:
        meta = KBMetadata(**header)
    except TypeError as exc:
        raise FormatError(f"corrupt header: {exc}") from exc
    if len(lines) < 2 or not lines[-1].startswith(_END + "\t"):
        raise FormatError("knowledge base file is truncated (missing end marker)")
    body = lines[1:-1]
    try:
        expected = int(lines[-1].split("\t", 1)[1])
    except ValueError as exc:
        raise FormatError("corrupt end marker") from exc
    if expected != len(body):
        raise FormatError(f"end marker announces {expected} records, found {len(body)}")
    kb = KnowledgeBase(meta)
    for lineno, line in enumerate(body, 2):
        fields = line.split("\t", 4)
        try:
            level, count, sig_hex, refs, key = fields
            level_i = int(level)
            entry = PrecedentEntry(key, level_i, signature_from_hex(sig_hex), int(count), tuple(json.loads(refs)))
        except (ValueError, json.JSONDecodeError) as exc:
            raise FormatError(f"line {lineno}: malformed record") from exc
        if level_i not in LEVELS or entry.precedent_count < 1:
            raise FormatError(f"line {lineno}: invalid level or count")
        if entry.aggregated_signature >> meta.library_size:
            raise FormatError(f"line {lineno}: signature wider than the library")
        kb.entries(level_i)[key] = entry
    return kb
