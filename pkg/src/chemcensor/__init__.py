"""Precedent-based reaction plausibility scoring and retrosynthesis benchmarking."""

from .estimator import ChemCensor, FGSignatureTransformer
from .kb import KnowledgeBase, build_kb, load_kb, merge_kb, save_kb
from .reaction.fg import FGLibrary
from .scorer import Category, CCResult, ChemCensorScorer

__version__ = "0.1.0"

__all__ = [
    "CCResult",
    "Category",
    "ChemCensor",
    "ChemCensorScorer",
    "FGLibrary",
    "FGSignatureTransformer",
    "KnowledgeBase",
    "build_kb",
    "load_kb",
    "merge_kb",
    "save_kb",
]
