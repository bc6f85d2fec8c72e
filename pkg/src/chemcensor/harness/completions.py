"""Targets and completions files, and producing completions from an endpoint."""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..exceptions import FormatError
from .client import EndpointConfig, query_model
from .prompts import build_prompt


@dataclass(frozen=True, slots=True)
class Target:
    target_id: str
    smiles: str


@dataclass(frozen=True, slots=True)
class CompletionRecord:
    """Raw samples of one model for one target.

    ``None`` samples mark requests that failed after retries.
    """

    target_id: str
    target_smiles: str
    model_id: str
    samples: tuple[str | None, ...]
    provenance: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "target_id": self.target_id,
            "target_smiles": self.target_smiles,
            "model_id": self.model_id,
            "samples": list(self.samples),
            "provenance": dict(self.provenance),
        }


def load_targets(path: str | os.PathLike, delimiter: str = "\t", header: bool | None = None) -> list[Target]:
    """Read ``id<delim>smiles`` rows.

    Blank lines and '#' comments are ignored. With ``header=None`` a first row
    whose second field is literally "smiles" (any case) is treated as a header.

    Raises:
        FormatError: A row has fewer than two fields.
    """
    targets = []
    with open(path, encoding="utf-8", newline="") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and not r[0].startswith("#")]
    if rows and (header or (header is None and rows[0][1:2] and rows[0][1].strip().lower() == "smiles")):
        rows = rows[1:]
    for n, row in enumerate(rows, 1):
        if len(row) < 2:
            raise FormatError(f"targets row {n}: expected id and SMILES, got {row!r}")
        targets.append(Target(row[0].strip(), row[1].strip()))
    return targets


def parse_completion(obj: dict, source: str = "") -> CompletionRecord:
    try:
        samples = obj["samples"]
        if not isinstance(samples, list):
            raise TypeError("samples must be a list")
        return CompletionRecord(
            str(obj["target_id"]),
            str(obj.get("target_smiles", "")),
            str(obj.get("model_id", "model")),
            tuple(s if s is None else str(s) for s in samples),
            dict(obj.get("provenance") or {"file": source}),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad completion record: {exc}") from exc


def load_completions(path: str | os.PathLike) -> list[CompletionRecord]:
    """Read a JSONL completions file.

    Raises:
        FormatError: A line is not a JSON object with the expected fields.
    """
    out = []
    name = os.path.basename(os.fspath(path))
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{name}:{n}: {exc}") from exc
            if not isinstance(obj, dict):
                raise FormatError(f"{name}:{n}: expected an object")
            try:
                out.append(parse_completion(obj, name))
            except FormatError as exc:
                raise FormatError(f"{name}:{n}: {exc}") from exc
    return out


def write_completions(records: Iterable[CompletionRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in records:
            fh.write(json.dumps(r.to_dict(), sort_keys=True, ensure_ascii=False) + "\n")


def generate_completions(
    targets: Sequence[Target],
    fewshot_pool: Sequence[tuple[str, str]],
    config: EndpointConfig,
    n_samples: int = 15,
    seed: int = 0,
    model_id: str | None = None,
    transport=None,
    sleep=None,
) -> Iterable[CompletionRecord]:
    """Prompt the endpoint ``n_samples`` times per target, yielding records."""
    kw = {"transport": transport}
    if sleep is not None:
        kw["sleep"] = sleep
    for t in targets:
        prompt = build_prompt(t.smiles, fewshot_pool, seed)
        samples = query_model(config, prompt, n_samples, **kw)
        yield CompletionRecord(
            t.target_id,
            t.smiles,
            model_id or config.model,
            tuple(samples),
            {"endpoint": config.describe(), "template_id": prompt.template_id, "seed": seed},
        )
