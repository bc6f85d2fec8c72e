"""Render benchmark reports as JSON plus delimiter-separated tables.

Every writer works from the dictionary form of a report, so a saved
``report.json`` can be re-rendered without rescoring. Output bytes depend
only on the report contents.
"""

from __future__ import annotations

import csv
import io
import json
import os
from typing import Iterable

from ..scorer import SAMPLE_CATEGORIES
from .bench import BenchmarkReport

FORMATS = ("json", "tsv", "csv")
_DELIMITERS = {"tsv": "\t", "csv": ","}


def _num(x: dict) -> str:
    return f"{x['value']:.4f}"


def summary_rows(report: dict) -> list[list[str]]:
    ks = [str(k) for k in report["config"]["k_list"]]
    header = ["model", "n_targets", "unique", "unique_macro", "av_pt_max_cc"] + [f"av_pt_top_{k}_cc" for k in ks]
    rows = [header]
    for model_id in sorted(report["models"]):
        agg = report["models"][model_id]["aggregate"]
        rows.append(
            [model_id, str(agg["n_targets"]), _num(agg["unique_fraction"]), _num(agg["unique_fraction_macro"]), _num(agg["av_pt_max_cc"])]
            + [_num(agg["av_pt_top_k"][k]) for k in ks]
        )
    return rows


def category_rows(report: dict) -> list[list[str]]:
    cats = [c.value for c in SAMPLE_CATEGORIES]
    rows = [["model", "target_id"] + cats + ["total"]]
    for model_id in sorted(report["models"]):
        m = report["models"][model_id]
        for t in m["targets"]:
            counts = [t["categories"].get(c, 0) for c in cats]
            rows.append([model_id, t["target_id"]] + [str(v) for v in counts] + [str(sum(counts))])
        totals = [m["aggregate"]["category_totals"].get(c, 0) for c in cats]
        rows.append([model_id, "*"] + [str(v) for v in totals] + [str(sum(totals))])
    return rows


def fg_matrix_rows(report: dict) -> list[list[str]]:
    names = report["fg_names"]
    rows = [["model"] + [f"{i}:{n}" for i, n in enumerate(names)]]
    for model_id in sorted(report["models"]):
        rows.append([model_id] + [str(v) for v in report["models"][model_id]["fg_errors"]])
    return rows


def _table_text(rows: Iterable[list[str]], delimiter: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, delimiter=delimiter, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def report_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def emit_report(
    report: BenchmarkReport | dict,
    out_dir: str | os.PathLike,
    formats: Iterable[str] = ("json", "tsv"),
) -> list[str]:
    """Write the report files into ``out_dir`` and return their paths.

    ``json`` writes ``report.json``; ``tsv`` and ``csv`` each write
    ``summary``, ``categories`` and ``fg_matrix`` tables.

    Raises:
        ValueError: Unknown format name.
        OSError: The files cannot be written.
    """
    data = report.to_dict() if isinstance(report, BenchmarkReport) else report
    formats = list(dict.fromkeys(formats))
    unknown = [f for f in formats if f not in FORMATS]
    if unknown:
        raise ValueError(f"unknown report format(s): {', '.join(unknown)}")
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "json" in formats:
        path = os.path.join(out_dir, "report.json")
        _write(path, report_json(data))
        written.append(path)
    for fmt in formats:
        if fmt == "json":
            continue
        delim = _DELIMITERS[fmt]
        for name, rows in (
            ("summary", summary_rows(data)),
            ("categories", category_rows(data)),
            ("fg_matrix", fg_matrix_rows(data)),
        ):
            path = os.path.join(out_dir, f"{name}.{fmt}")
            _write(path, _table_text(rows, delim))
            written.append(path)
    return written
