"""Exception hierarchy shared by every chemcensor subsystem."""

from __future__ import annotations


class ChemCensorError(Exception):
    """Base class for all errors raised by this package."""


class SmilesSyntaxError(ChemCensorError, ValueError):
    """Malformed SMILES/SMARTS text (unbalanced brackets, rings, unknown symbols)."""

    def __init__(self, message: str, text: str = "", position: int | None = None):
        self.text = text
        self.position = position
        if position is not None:
            message = f"{message} at position {position} in {text!r}"
        elif text:
            message = f"{message} in {text!r}"
        super().__init__(message)


class ValenceError(ChemCensorError, ValueError):
    """Bond-order sum exceeds the allowed valence of an atom."""


class UnsupportedFeature(ChemCensorError, ValueError):
    """SMARTS construct outside the supported subset (e.g. recursive SMARTS)."""


class MapError(ChemCensorError, ValueError):
    """Inconsistent atom mapping in a reaction."""


class MappingFailed(ChemCensorError):
    """Heuristic atom mapping could not cover enough of the product."""

    def __init__(self, message: str, coverage: float = 0.0):
        self.coverage = coverage
        super().__init__(message)


class EmptyCenter(ChemCensorError):
    """A mapped reaction has no dynamic atoms (identity transformation)."""


class FormatError(ChemCensorError):
    """A persisted knowledge base file is truncated or malformed."""


class VersionError(FormatError):
    """A persisted knowledge base file has an unsupported format version."""


class MetadataMismatch(ChemCensorError):
    """Two knowledge bases (or a KB and a library) disagree on metadata."""


class ConfigError(ChemCensorError):
    """Invalid scorer or benchmark configuration."""


class FatalError(ChemCensorError):
    """Unrecoverable error during knowledge base construction."""


class EmptyBenchmark(ChemCensorError, ValueError):
    """Aggregation requested over zero targets."""


class PoolTooSmall(ChemCensorError, ValueError):
    """Few-shot pool has fewer examples than the prompt requires."""


class AuthError(ChemCensorError):
    """The model endpoint rejected the supplied credentials."""


class EndpointError(ChemCensorError):
    """The model endpoint kept failing after all retries."""
