"""Reaction parsing, atom mapping, reaction centers and FG signatures."""

from .center import (
    LEVELS,
    DynamicAtomSet,
    RCPattern,
    ReactionAnalysis,
    analyze_reaction,
    compute_fg_signature,
    detect_dynamic_atoms,
    extract_rc,
    rc_canonical_key,
)
from .fg import FGDefinition, FGLibrary, signature_bits
from .mapping import DEFAULT_COVERAGE_THRESHOLD, map_reaction
from .reaction import Reaction, parse_reaction

__all__ = [
    "DEFAULT_COVERAGE_THRESHOLD",
    "DynamicAtomSet",
    "FGDefinition",
    "FGLibrary",
    "LEVELS",
    "RCPattern",
    "Reaction",
    "ReactionAnalysis",
    "analyze_reaction",
    "compute_fg_signature",
    "detect_dynamic_atoms",
    "extract_rc",
    "map_reaction",
    "parse_reaction",
    "rc_canonical_key",
    "signature_bits",
]
