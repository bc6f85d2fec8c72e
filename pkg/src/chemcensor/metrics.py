"""Benchmark metrics over deduplicated, scored predictions.

All averages are exact :class:`fractions.Fraction` values; callers convert
to floats only for display.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .chem.smiles import parse_smiles, write_smiles
from .exceptions import ChemCensorError, EmptyBenchmark
from .scorer import SAMPLE_CATEGORIES, CCResult, Category

INVALID_KEY = "<invalid>"
DEFAULT_K = (3, 5, 10)


@lru_cache(maxsize=65536)
def dedup_key(prediction: str) -> str:
    """Order-independent canonical form of a reactant set.

    Components are written as canonical SMILES without map numbers, sorted
    and joined with '.'. Anything that does not parse maps to
    :data:`INVALID_KEY`.
    """
    text = prediction.strip()
    if not text:
        return INVALID_KEY
    try:
        mol = parse_smiles(text)
    except (ChemCensorError, ValueError):
        return INVALID_KEY
    if mol.n_atoms == 0:
        return INVALID_KEY
    return ".".join(sorted(write_smiles(mol, include_maps=False).split(".")))


@dataclass(frozen=True, slots=True)
class TargetRecord:
    """Predictions for one target after extraction, dedup and scoring.

    Attributes:
        target_id: Identifier from the targets file.
        target_smiles: Product SMILES.
        samples: Raw predictions in sample order (None when nothing was
            extracted).
        unique_predictions: ``(dedup_key, result)`` for each distinct valid
            prediction, in first-occurrence order.
        n_samples: Number of samples requested for the target.
        n_valid: Samples whose prediction parsed, duplicates included.
    """

    target_id: str
    target_smiles: str
    samples: tuple[str | None, ...]
    unique_predictions: tuple[tuple[str, CCResult], ...]
    n_samples: int
    n_valid: int
    category_counts: dict[str, int] = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if not self.n_unique_valid <= self.n_valid <= self.n_samples:
            raise ValueError(
                f"inconsistent counts for {self.target_id}: "
                f"{self.n_unique_valid} unique, {self.n_valid} valid, {self.n_samples} samples"
            )

    @property
    def n_unique_valid(self) -> int:
        return len(self.unique_predictions)

    @property
    def scores(self) -> list[int]:
        return [r.score for _, r in self.unique_predictions]


def first_occurrences(predictions: Sequence[str | None]) -> list[tuple[str | None, bool]]:
    """Dedup key of each prediction and whether it is the first valid occurrence.

    Absent predictions get a ``None`` key; invalid ones get :data:`INVALID_KEY`
    and never count as first occurrences.
    """
    out: list[tuple[str | None, bool]] = []
    seen: set[str] = set()
    for pred in predictions:
        if pred is None:
            out.append((None, False))
            continue
        key = dedup_key(pred)
        first = key != INVALID_KEY and key not in seen
        seen.add(key)
        out.append((key, first))
    return out


def build_record(
    target_id: str,
    target_smiles: str,
    predictions: Sequence[str | None],
    results: Mapping[str, CCResult],
) -> tuple[TargetRecord, list[tuple[str | None, Category, int]]]:
    """Deduplicate one target's predictions and tally every sample.

    Args:
        target_id: Target identifier.
        target_smiles: Target product SMILES.
        predictions: Extracted prediction per sample slot (None when nothing
            was extracted); its length is the sample count.
        results: Scoring result for each valid dedup key.

    Returns:
        The record and, per sample, ``(dedup key, category, score)``.
        Categories partition the samples: EMPTY, INVALID_INPUT, DUPLICATE or
        the scoring category of a first occurrence.
    """
    counts = {c.value: 0 for c in SAMPLE_CATEGORIES}
    per_sample = []
    unique = []
    n_valid = 0
    for key, first in first_occurrences(predictions):
        if key is None:
            cat, score = Category.EMPTY, 0
        elif key == INVALID_KEY:
            cat, score = Category.INVALID_INPUT, 0
        elif not first:
            n_valid += 1
            cat, score = Category.DUPLICATE, 0
        else:
            n_valid += 1
            res = results[key]
            unique.append((key, res))
            cat, score = res.category, res.score
        counts[cat.value] += 1
        per_sample.append((key, cat, score))
    record = TargetRecord(
        target_id,
        target_smiles,
        tuple(predictions),
        tuple(unique),
        len(predictions),
        n_valid,
        counts,
    )
    return record, per_sample


def max_cc(record: TargetRecord) -> int:
    return max(record.scores, default=0)


def cc_at_k(record: TargetRecord, k: int) -> Fraction:
    """Mean of the first ``k`` unique scores, missing slots counting as 0."""
    if k < 1:
        raise ValueError("K must be a positive integer")
    return Fraction(sum(record.scores[:k]), k)


def _require(records: Sequence[TargetRecord]) -> None:
    if not records:
        raise EmptyBenchmark("no targets to aggregate")


def av_pt_max_cc(records: Sequence[TargetRecord]) -> Fraction:
    _require(records)
    return Fraction(sum(max_cc(r) for r in records), len(records))


def av_pt_top_k(records: Sequence[TargetRecord], k: int) -> Fraction:
    _require(records)
    return sum((cc_at_k(r, k) for r in records), Fraction(0)) / len(records)


def unique_fraction(records: Iterable[TargetRecord]) -> Fraction:
    """Unique valid predictions over all samples, pooled across targets."""
    records = list(records)
    total = sum(r.n_samples for r in records)
    if total == 0:
        return Fraction(0)
    return Fraction(sum(r.n_unique_valid for r in records), total)


def unique_fraction_macro(records: Iterable[TargetRecord]) -> Fraction:
    """Per-target unique fraction averaged over targets (0 without targets)."""
    parts = [Fraction(r.n_unique_valid, r.n_samples) for r in records if r.n_samples]
    if not parts:
        return Fraction(0)
    return sum(parts, Fraction(0)) / len(parts)


@dataclass(frozen=True, slots=True)
class BenchmarkAggregate:
    n_targets: int
    av_pt_max_cc: Fraction
    av_pt_top_k: dict[int, Fraction]
    unique_fraction: Fraction
    unique_fraction_macro: Fraction
    category_totals: dict[str, int]

    def to_dict(self) -> dict:
        def num(x: Fraction) -> dict:
            return {"value": round(float(x), 6), "exact": f"{x.numerator}/{x.denominator}"}

        return {
            "n_targets": self.n_targets,
            "unique_fraction": num(self.unique_fraction),
            "unique_fraction_macro": num(self.unique_fraction_macro),
            "av_pt_max_cc": num(self.av_pt_max_cc),
            "av_pt_top_k": {str(k): num(v) for k, v in sorted(self.av_pt_top_k.items())},
            "category_totals": dict(self.category_totals),
        }


def aggregate(records: Sequence[TargetRecord], k_list: Sequence[int] = DEFAULT_K) -> BenchmarkAggregate:
    """All benchmark metrics for one model.

    Raises:
        EmptyBenchmark: ``records`` is empty.
    """
    _require(records)
    totals: dict[str, int] = {}
    for r in records:
        for cat, n in r.category_counts.items():
            totals[cat] = totals.get(cat, 0) + n
    return BenchmarkAggregate(
        n_targets=len(records),
        av_pt_max_cc=av_pt_max_cc(records),
        av_pt_top_k={k: av_pt_top_k(records, k) for k in k_list},
        unique_fraction=unique_fraction(records),
        unique_fraction_macro=unique_fraction_macro(records),
        category_totals=totals,
    )
