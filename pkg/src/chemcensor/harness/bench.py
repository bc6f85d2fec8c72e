"""Benchmark runner: completions in, scored records and aggregates out.

Scoring never touches the network. Each sample is extracted, deduplicated in
sample order and, when new and valid, scored as ``prediction>>target``.
"""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

from ..exceptions import EmptyBenchmark
from ..kb import KnowledgeBase
from ..metrics import (
    DEFAULT_K,
    BenchmarkAggregate,
    TargetRecord,
    aggregate,
    build_record,
    cc_at_k,
    first_occurrences,
    max_cc,
)
from ..reaction.fg import FGLibrary
from ..reaction.mapping import DEFAULT_COVERAGE_THRESHOLD
from ..scorer import CCResult, Category, ChemCensorScorer
from .completions import CompletionRecord, Target
from .extract import extract_answer

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class BenchConfig:
    k_list: tuple[int, ...] = DEFAULT_K
    n_samples: int = 15
    seed: int | None = None
    mapping_threshold: float = DEFAULT_COVERAGE_THRESHOLD
    jobs: int = 1

    def __post_init__(self) -> None:
        if not self.k_list or any(k < 1 for k in self.k_list):
            raise ValueError("K values must be positive integers")
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")


@dataclass(frozen=True, slots=True)
class SampleOutcome:
    """What happened to one sample slot."""

    index: int
    prediction: str | None
    key: str | None
    category: Category
    score: int

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "prediction": self.prediction,
            "key": self.key,
            "category": self.category.value,
            "score": self.score,
        }


@dataclass(slots=True)
class ModelReport:
    model_id: str
    records: list[TargetRecord]
    outcomes: dict[str, list[SampleOutcome]]
    aggregate: BenchmarkAggregate
    fg_errors: list[int]


@dataclass(slots=True)
class BenchmarkReport:
    """Everything needed to render benchmark tables and figures' data."""

    models: dict[str, ModelReport]
    config: dict
    fg_names: list[str]
    issues: list[str] = field(default_factory=list)

    def fg_error_matrix(self) -> dict[str, list[int]]:
        return {m: list(r.fg_errors) for m, r in self.models.items()}

    def to_dict(self) -> dict:
        models = {}
        for model_id, mr in self.models.items():
            targets = []
            for rec in mr.records:
                targets.append(
                    {
                        "target_id": rec.target_id,
                        "target_smiles": rec.target_smiles,
                        "n_samples": rec.n_samples,
                        "n_valid": rec.n_valid,
                        "n_unique_valid": rec.n_unique_valid,
                        "max_cc": max_cc(rec),
                        "cc_at_k": {str(k): _frac(cc_at_k(rec, k)) for k in self.config["k_list"]},
                        "categories": dict(rec.category_counts),
                        "unique_predictions": [
                            {"key": key, **_result_dict(res)} for key, res in rec.unique_predictions
                        ],
                        "samples": [o.to_dict() for o in mr.outcomes[rec.target_id]],
                    }
                )
            models[model_id] = {
                "aggregate": mr.aggregate.to_dict(),
                "fg_errors": list(mr.fg_errors),
                "targets": targets,
            }
        return {
            "config": dict(self.config),
            "fg_names": list(self.fg_names),
            "issues": list(self.issues),
            "models": models,
        }


def _frac(x) -> dict:
    return {"value": round(float(x), 6), "exact": f"{x.numerator}/{x.denominator}"}


def _result_dict(res: CCResult) -> dict:
    d = res.to_dict()
    d.pop("keys")
    return d


# -- scoring ---------------------------------------------------------------

_worker: ChemCensorScorer | None = None


def _init_worker(kb: KnowledgeBase, library: FGLibrary, threshold: float) -> None:
    global _worker
    _worker = ChemCensorScorer(kb, library, threshold)


def _score_one(rxn: str) -> CCResult:
    return _worker.score(rxn)


def _score_all(reactions: list[str], scorer: ChemCensorScorer, jobs: int) -> dict[str, CCResult]:
    if jobs <= 1 or len(reactions) < 2:
        return {r: scorer.score(r) for r in reactions}
    with ProcessPoolExecutor(
        max_workers=jobs,
        initializer=_init_worker,
        initargs=(scorer.kb, scorer.library, scorer.mapping_threshold),
    ) as pool:
        return dict(zip(reactions, pool.map(_score_one, reactions, chunksize=8)))


def _reaction_text(key: str, target: str) -> str:
    return f"{key}>>{target}"


def _predictions(samples: Sequence[str | None], n_samples: int) -> list[str | None]:
    """Extracted answer per slot; missing slots are absent answers."""
    return [extract_answer(samples[i]) if i < len(samples) else None for i in range(n_samples)]


def _assemble(target: Target, predictions: list[str | None], scored: dict[str, CCResult]):
    results = {
        key: scored[_reaction_text(key, target.smiles)]
        for key, first in first_occurrences(predictions)
        if first
    }
    record, per_sample = build_record(target.target_id, target.smiles, predictions, results)
    outcomes = [
        SampleOutcome(i, pred, key, cat, score)
        for i, (pred, (key, cat, score)) in enumerate(zip(predictions, per_sample))
    ]
    return record, outcomes


def run_benchmark(
    targets: Sequence[Target] | None,
    completions: Sequence[CompletionRecord],
    kb: KnowledgeBase,
    library: FGLibrary,
    config: BenchConfig = BenchConfig(),
) -> BenchmarkReport:
    """Score every model's completions and aggregate the metrics.

    Args:
        targets: Benchmark targets; ``None`` takes them from the completions
            in first-appearance order.
        completions: Completion records of one or more models.
        kb: Knowledge base.
        library: FG library the KB was built with.
        config: Run parameters.

    Raises:
        ConfigError: The library does not match the KB.
        EmptyBenchmark: There are no targets.
    """
    scorer = ChemCensorScorer(kb, library, config.mapping_threshold)
    issues: list[str] = []
    if targets is None:
        order: dict[str, Target] = {}
        for c in completions:
            order.setdefault(c.target_id, Target(c.target_id, c.target_smiles))
        targets = list(order.values())
    if not targets:
        raise EmptyBenchmark("no targets to evaluate")
    by_id = {t.target_id: t for t in targets}
    if len(by_id) != len(targets):
        raise ValueError("duplicate target ids in the targets list")

    per_model: dict[str, dict[str, CompletionRecord]] = {}
    for c in completions:
        if c.target_id not in by_id:
            issues.append(f"{c.model_id}: completions for unknown target {c.target_id!r} ignored")
            continue
        table = per_model.setdefault(c.model_id, {})
        if c.target_id in table:
            issues.append(f"{c.model_id}: repeated record for target {c.target_id!r} ignored")
            continue
        if c.target_smiles and c.target_smiles != by_id[c.target_id].smiles:
            issues.append(f"{c.model_id}: target {c.target_id!r} SMILES differs from the targets file; using the targets file")
        table[c.target_id] = c

    n = config.n_samples
    prepared: dict[str, dict[str, list[str | None]]] = {}
    needed: dict[str, None] = {}
    for model_id in sorted(per_model):
        table = per_model[model_id]
        prepared[model_id] = {}
        for t in targets:
            rec = table.get(t.target_id)
            if rec is None:
                issues.append(f"{model_id}: no completions for target {t.target_id!r}")
                samples: tuple = ()
            else:
                samples = rec.samples
                if len(samples) != n:
                    issues.append(f"{model_id}: target {t.target_id!r} has {len(samples)} samples, expected {n}")
            preds = _predictions(samples, n)
            prepared[model_id][t.target_id] = preds
            for key, first in first_occurrences(preds):
                if first:
                    needed.setdefault(_reaction_text(key, t.smiles))

    scored = _score_all(list(needed), scorer, config.jobs)

    models = {}
    for model_id, slot_table in prepared.items():
        records, outcomes = [], {}
        fg_errors = [0] * library.size
        for t in targets:
            record, outs = _assemble(t, slot_table[t.target_id], scored)
            records.append(record)
            outcomes[t.target_id] = outs
            for _, res in record.unique_predictions:
                if res.category is Category.FG_INCOMPATIBLE:
                    for f in res.violating_fgs:
                        fg_errors[f] += 1
        models[model_id] = ModelReport(model_id, records, outcomes, aggregate(records, config.k_list), fg_errors)

    echo = {
        "k_list": list(config.k_list),
        "n_samples": n,
        "seed": config.seed,
        "mapping_threshold": config.mapping_threshold,
        "kb_digest": kb.content_digest(),
        "library_digest": library.digest,
        "library_size": library.size,
        "n_targets": len(targets),
    }
    return BenchmarkReport(models, echo, [d.name for d in library.definitions], issues)
