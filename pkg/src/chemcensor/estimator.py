"""scikit-learn style front end: ``fit`` builds the KB, ``predict`` scores."""

from __future__ import annotations

import os
from typing import Iterable, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .exceptions import ChemCensorError
from .kb import DEFAULT_DOC_REF_CAP, KnowledgeBase, build_kb, load_kb, merge_kb
from .reaction.center import LEVELS, analyze_reaction
from .reaction.fg import FGLibrary, signature_bits
from .reaction.mapping import DEFAULT_COVERAGE_THRESHOLD, map_reaction
from .reaction.reaction import parse_reaction
from .scorer import CCResult, ChemCensorScorer, explain


def resolve_library(fg_library: FGLibrary | str | os.PathLike | None) -> FGLibrary:
    """Library instance from an instance, a TSV path or None (bundled)."""
    if fg_library is None:
        return FGLibrary.default()
    if isinstance(fg_library, FGLibrary):
        return fg_library
    return FGLibrary.from_file(fg_library)


def _corpus_lines(X: Iterable[str], doc_refs: Sequence[str] | None) -> list[str]:
    lines = [str(x) for x in X]
    if doc_refs is None:
        return lines
    if len(doc_refs) != len(lines):
        raise ValueError(f"{len(doc_refs)} doc_refs for {len(lines)} reactions")
    return [f"{x.split(chr(9), 1)[0]}\t{r}" for x, r in zip(lines, doc_refs)]


class ChemCensor(BaseEstimator):
    """Reaction plausibility scorer with a precedent knowledge base.

    Args:
        fg_library: FG library, path to a library TSV, or None for the
            bundled library.
        doc_ref_cap: Document references kept per KB entry.
        mapping_threshold: Minimum product coverage when mapping unmapped
            query reactions.
        n_jobs: Worker processes for KB building.

    Attributes:
        kb_: Knowledge base built by :meth:`fit`.
        library_: Resolved FG library.
        build_stats_: Statistics of the last build.
    """

    def __init__(
        self,
        fg_library=None,
        doc_ref_cap: int = DEFAULT_DOC_REF_CAP,
        mapping_threshold: float = DEFAULT_COVERAGE_THRESHOLD,
        n_jobs: int = 1,
    ):
        self.fg_library = fg_library
        self.doc_ref_cap = doc_ref_cap
        self.mapping_threshold = mapping_threshold
        self.n_jobs = n_jobs

    def fit(self, X: Iterable[str], y=None, doc_refs: Sequence[str] | None = None) -> "ChemCensor":
        """Build the knowledge base from mapped reactions.

        ``X`` holds reaction SMILES, optionally followed by a tab and a
        document reference. Unmapped or malformed reactions are skipped and
        counted in ``build_stats_``.
        """
        self.library_ = resolve_library(self.fg_library)
        kb, stats = build_kb(_corpus_lines(X, doc_refs), self.library_, "fit", self.doc_ref_cap, self.n_jobs)
        self._set_kb(kb)
        self.build_stats_ = stats
        return self

    def partial_fit(self, X: Iterable[str], y=None, doc_refs: Sequence[str] | None = None) -> "ChemCensor":
        """Add more precedents to an existing knowledge base."""
        if not hasattr(self, "kb_"):
            return self.fit(X, y, doc_refs)
        kb, stats = build_kb(_corpus_lines(X, doc_refs), self.library_, "fit", self.doc_ref_cap, self.n_jobs)
        self._set_kb(merge_kb(self.kb_, kb))
        self.build_stats_ = stats
        return self

    @classmethod
    def from_kb(cls, kb: KnowledgeBase | str | os.PathLike, fg_library=None, **params) -> "ChemCensor":
        """A fitted estimator around an existing (or saved) knowledge base."""
        est = cls(fg_library=fg_library, **params)
        est.library_ = resolve_library(fg_library)
        est._set_kb(kb if isinstance(kb, KnowledgeBase) else load_kb(kb))
        return est

    def _set_kb(self, kb: KnowledgeBase) -> None:
        self.kb_ = kb
        self.scorer_ = ChemCensorScorer(kb, self.library_, self.mapping_threshold)

    def score_details(self, X: Iterable[str]) -> list[CCResult]:
        check_is_fitted(self, "scorer_")
        return [self.scorer_.score(str(x)) for x in X]

    def predict(self, X: Iterable[str]) -> np.ndarray:
        """Integer scores 0..5, one per reaction."""
        return np.array([r.score for r in self.score_details(X)], dtype=np.int64)

    def score(self, X: Iterable[str], y=None) -> float:
        """Mean score over ``X`` (higher is better, as sklearn expects)."""
        scores = self.predict(X)
        return float(scores.mean()) if scores.size else 0.0

    def explain(self, reaction: str) -> str:
        check_is_fitted(self, "scorer_")
        return explain(self.scorer_.score(reaction), self.library_)


class FGSignatureTransformer(TransformerMixin, BaseEstimator):
    """Binary FG-signature features of reactions at one RC level.

    Rows of reactions that cannot be parsed, mapped or analyzed are all zero.

    Args:
        fg_library: As for :class:`ChemCensor`.
        level: RC level 1..5.
        mapping_threshold: Coverage threshold for unmapped input.
    """

    def __init__(self, fg_library=None, level: int = 1, mapping_threshold: float = DEFAULT_COVERAGE_THRESHOLD):
        self.fg_library = fg_library
        self.level = level
        self.mapping_threshold = mapping_threshold

    def fit(self, X=None, y=None) -> "FGSignatureTransformer":
        if self.level not in LEVELS:
            raise ValueError(f"level must be in 1..5, got {self.level}")
        self.library_ = resolve_library(self.fg_library)
        self.n_features_out_ = self.library_.size
        return self

    def transform(self, X: Iterable[str]) -> np.ndarray:
        check_is_fitted(self, "library_")
        rows = []
        for x in X:
            row = np.zeros(self.library_.size, dtype=np.uint8)
            try:
                rxn = parse_reaction(str(x))
                if not rxn.mapped:
                    rxn, _ = map_reaction(rxn, self.mapping_threshold)
                sig = analyze_reaction(rxn, self.library_).signature(self.level)
            except (ChemCensorError, ValueError):
                sig = 0
            row[signature_bits(sig)] = 1
            rows.append(row)
        return np.vstack(rows) if rows else np.zeros((0, self.library_.size), dtype=np.uint8)

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        check_is_fitted(self, "library_")
        return np.array([d.name for d in self.library_.definitions], dtype=object)
