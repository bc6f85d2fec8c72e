"""ChemCensor scoring of candidate reactions against a knowledge base."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

from .exceptions import ChemCensorError, ConfigError, EmptyCenter, MappingFailed
from .kb import KnowledgeBase
from .reaction.center import LEVELS, ReactionAnalysis, analyze_reaction
from .reaction.fg import FGLibrary, signature_bits
from .reaction.mapping import DEFAULT_COVERAGE_THRESHOLD, map_reaction
from .reaction.reaction import Reaction, parse_reaction


class Category(str, Enum):
    PASS = "PASS"
    NO_RC_PRECEDENT = "NO_RC_PRECEDENT"
    FG_INCOMPATIBLE = "FG_INCOMPATIBLE"
    INVALID_INPUT = "INVALID_INPUT"
    MAPPING_FAILED = "MAPPING_FAILED"
    # sample-level buckets used when tallying benchmark answers
    DUPLICATE = "DUPLICATE"
    EMPTY = "EMPTY"


RESULT_CATEGORIES = (
    Category.PASS,
    Category.NO_RC_PRECEDENT,
    Category.FG_INCOMPATIBLE,
    Category.INVALID_INPUT,
    Category.MAPPING_FAILED,
)
SAMPLE_CATEGORIES = RESULT_CATEGORIES + (Category.DUPLICATE, Category.EMPTY)


@dataclass(frozen=True, slots=True)
class CCResult:
    """Score and diagnosis of one candidate reaction.

    Attributes:
        score: 0..5; positive only for PASS, where it equals ``matched_level``.
        category: Outcome category.
        matched_level: Level that passed, 0 otherwise.
        matched_key: Key of the passing level, or of the highest level whose
            key had precedents when FG-incompatible.
        violating_fgs: FG ids present in the candidate but never seen with
            the RC (FG_INCOMPATIBLE only).
        doc_refs: Document references of the matched entry.
        detail: Human-readable reason.
        keys: Extracted RC keys for levels 1..5 (empty when extraction failed).
        mapped_reaction: Mapped reaction SMILES that was scored.
    """

    score: int
    category: Category
    matched_level: int = 0
    matched_key: str | None = None
    violating_fgs: tuple[int, ...] = ()
    doc_refs: tuple[str, ...] = ()
    detail: str = ""
    keys: tuple[str, ...] = ()
    mapped_reaction: str = ""

    @property
    def passed(self) -> bool:
        return self.category is Category.PASS

    def to_dict(self) -> dict:
        return {
            "score": self.score,
            "category": self.category.value,
            "matched_level": self.matched_level,
            "matched_key": self.matched_key,
            "violating_fgs": list(self.violating_fgs),
            "doc_refs": list(self.doc_refs),
            "detail": self.detail,
            "keys": list(self.keys),
            "mapped_reaction": self.mapped_reaction,
        }


def _fail(category: Category, detail: str, **kw) -> CCResult:
    return CCResult(0, category, detail=detail, **kw)


class ChemCensorScorer:
    """Scores reactions against a knowledge base built with ``library``.

    Args:
        kb: Knowledge base.
        library: FG library; must be the one the KB was built with.
        mapping_threshold: Minimum product coverage for heuristic mapping.

    Raises:
        ConfigError: The library digest or size differs from the KB metadata.
    """

    def __init__(
        self,
        kb: KnowledgeBase,
        library: FGLibrary,
        mapping_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
    ):
        meta = kb.metadata
        if meta.library_digest != library.digest or meta.library_size != library.size:
            raise ConfigError(
                "FG library does not match the knowledge base "
                f"(library {library.digest[:12]}/{library.size}, "
                f"KB {meta.library_digest[:12]}/{meta.library_size})"
            )
        self.kb = kb
        self.library = library
        self.mapping_threshold = mapping_threshold

    def analyze(self, rxn: Reaction | str) -> tuple[Reaction, ReactionAnalysis]:
        """Parse, map when needed and analyze; exceptions propagate."""
        if isinstance(rxn, str):
            rxn = parse_reaction(rxn)
        if not rxn.mapped:
            rxn, _ = map_reaction(rxn, self.mapping_threshold)
        return rxn, analyze_reaction(rxn, self.library)

    def score(self, rxn: Reaction | str) -> CCResult:
        """Score one reaction; every input yields a result."""
        try:
            mapped, analysis = self.analyze(rxn)
        except MappingFailed as exc:
            return _fail(Category.MAPPING_FAILED, str(exc))
        except EmptyCenter as exc:
            return _fail(Category.INVALID_INPUT, f"empty reaction center: {exc}")
        except (ChemCensorError, ValueError) as exc:
            return _fail(Category.INVALID_INPUT, f"{type(exc).__name__}: {exc}")
        return self.score_analysis(analysis, mapped.to_smiles())

    def score_analysis(self, analysis: ReactionAnalysis, mapped_smiles: str = "") -> CCResult:
        """Highest level whose key has precedents and whose FGs are all covered."""
        keys = tuple(analysis.key(lv) for lv in LEVELS)
        best_present = None
        for level in reversed(LEVELS):
            entry = self.kb.lookup(level, keys[level - 1])
            if entry is None:
                continue
            sig = analysis.signature(level)
            if sig & ~entry.aggregated_signature == 0:
                return CCResult(
                    level,
                    Category.PASS,
                    level,
                    entry.canonical_key,
                    (),
                    entry.doc_refs,
                    f"precedented at RC{level} ({entry.precedent_count} precedents)",
                    keys,
                    mapped_smiles,
                )
            if best_present is None:
                best_present = (level, entry, sig & ~entry.aggregated_signature)
        if best_present is None:
            return _fail(
                Category.NO_RC_PRECEDENT,
                "no synthetic precedents for the reaction center at any level",
                keys=keys,
                mapped_reaction=mapped_smiles,
            )
        level, entry, missing = best_present
        fgs = tuple(signature_bits(missing))
        names = ", ".join(self.library.name_of(f) for f in fgs)
        return CCResult(
            0,
            Category.FG_INCOMPATIBLE,
            0,
            entry.canonical_key,
            fgs,
            entry.doc_refs,
            f"reaction center precedented up to RC{level}; unprecedented functional groups: {names}",
            keys,
            mapped_smiles,
        )

    def score_many(self, reactions: Iterable[Reaction | str]) -> list[CCResult]:
        return [self.score(r) for r in reactions]


def score_reaction(rxn_text: str, kb: KnowledgeBase, library: FGLibrary) -> CCResult:
    """Convenience wrapper building a :class:`ChemCensorScorer` for one call."""
    return ChemCensorScorer(kb, library).score(rxn_text)


def categorize_samples(
    results: Sequence[CCResult], duplicates: int = 0, empty: int = 0
) -> dict[str, int]:
    """Histogram over every sample category (zero counts included)."""
    hist = {c.value: 0 for c in SAMPLE_CATEGORIES}
    for r in results:
        hist[r.category.value] += 1
    hist[Category.DUPLICATE.value] += duplicates
    hist[Category.EMPTY.value] += empty
    return hist


def explain(result: CCResult, library: FGLibrary) -> str:
    """Text report of a scoring outcome."""
    lines = [f"ChemCensor score: {result.score} ({result.category.value})"]
    if result.mapped_reaction:
        lines.append(f"Mapped reaction: {result.mapped_reaction}")
    if result.category is Category.PASS:
        lines.append(f"Matched level: RC{result.matched_level}")
        lines.append(f"Reaction center: {result.matched_key}")
        lines.append(f"Precedent: {result.detail}")
        if result.doc_refs:
            lines.append("Documents: " + ", ".join(result.doc_refs))
    elif result.category is Category.FG_INCOMPATIBLE:
        lines.append(f"Reaction center: {result.matched_key}")
        lines.append("Functional groups never observed with this reaction center:")
        for f in result.violating_fgs:
            lines.append(f"  - {library.name_of(f)} (fg {f})")
        if result.doc_refs:
            lines.append("Reaction-center documents: " + ", ".join(result.doc_refs))
    elif result.category is Category.NO_RC_PRECEDENT:
        lines.append("No synthetic precedents found for this reaction center.")
        if result.keys:
            lines.append(f"Reaction center: {result.keys[0]}")
    else:
        lines.append(f"Reason: {result.detail}")
    return "\n".join(lines)
