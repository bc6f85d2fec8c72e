"""Command line interface: ``chemcensor <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from typing import Sequence

from .exceptions import ChemCensorError
from .kb import DEFAULT_DOC_REF_CAP, build_kb, load_kb, save_kb
from .metrics import DEFAULT_K
from .reaction.mapping import DEFAULT_COVERAGE_THRESHOLD

logger = logging.getLogger("chemcensor")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


def _k_list(text: str) -> tuple[int, ...]:
    try:
        ks = tuple(int(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ks or any(k < 1 for k in ks):
        raise argparse.ArgumentTypeError("K values must be positive integers")
    return ks


def _formats(text: str) -> list[str]:
    from .harness.report import FORMATS

    fmts = [p.strip() for p in text.split(",") if p.strip()]
    bad = [f for f in fmts if f not in FORMATS]
    if bad or not fmts:
        raise argparse.ArgumentTypeError(f"formats must be drawn from {', '.join(FORMATS)}")
    return fmts


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return value


def _delimiter(text: str) -> str:
    return {"tab": "\t", "\\t": "\t", "comma": ","}.get(text, text)


def _library(args):
    from .estimator import resolve_library

    return resolve_library(args.fg_library)


# -- subcommands -------------------------------------------------------------


def cmd_build_kb(args) -> int:
    library = _library(args)
    kb, stats = build_kb(args.corpus, library, args.source or "", args.doc_ref_cap, args.jobs)
    save_kb(kb, args.kb)
    logger.info("%r", kb)
    print(json.dumps({"kb": args.kb, "entries": len(kb), **stats.to_dict()}, sort_keys=True))
    return EXIT_OK


def cmd_score(args) -> int:
    from .scorer import ChemCensorScorer, explain

    library = _library(args)
    scorer = ChemCensorScorer(load_kb(args.kb), library, args.mapping_threshold)
    if args.reaction is not None:
        result = scorer.score(args.reaction)
        if args.format == "text":
            print(explain(result, library))
        print(json.dumps({"reaction": args.reaction, **result.to_dict()}, sort_keys=True))
        return EXIT_OK
    src = sys.stdin if args.input in (None, "-") else open(args.input, encoding="utf-8")
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", encoding="utf-8")
    try:
        for line in src:
            text = line.split("\t", 1)[0].strip()
            if not text or text.startswith("#"):
                continue
            result = scorer.score(text)
            if args.format == "text":
                out.write(f"{result.score}\t{result.category.value}\t{text}\n")
            else:
                out.write(json.dumps({"reaction": text, **result.to_dict()}, sort_keys=True) + "\n")
    finally:
        if src is not sys.stdin:
            src.close()
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _read_pool(path: str):
    from .harness.prompts import fewshot_pool_from_reactions

    with open(path, encoding="utf-8") as fh:
        return fewshot_pool_from_reactions(fh)


def cmd_prompts(args) -> int:
    from .harness.completions import load_targets
    from .harness.prompts import build_prompt

    pool = _read_pool(args.fewshot)
    targets = load_targets(args.targets, _delimiter(args.delimiter))
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w", encoding="utf-8")
    try:
        for t in targets:
            spec = build_prompt(t.smiles, pool, args.seed)
            out.write(json.dumps({"target_id": t.target_id, **spec.to_dict()}, sort_keys=True, ensure_ascii=False) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_generate(args) -> int:
    from .harness.client import EndpointConfig
    from .harness.completions import generate_completions, load_targets, write_completions

    params = {}
    if args.temperature is not None:
        params["temperature"] = args.temperature
    if args.max_tokens is not None:
        params["max_tokens"] = args.max_tokens
    config = EndpointConfig(
        base_url=args.base_url,
        model=args.model,
        api_key_env=args.api_key_env,
        params=params,
        timeout=args.timeout,
        retries=args.retries,
        concurrency=args.jobs,
    )
    pool = _read_pool(args.fewshot)
    targets = load_targets(args.targets, _delimiter(args.delimiter))
    records = generate_completions(targets, pool, config, args.samples, args.seed, args.model_id)
    write_completions(records, args.output)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .harness.bench import BenchConfig, run_benchmark
    from .harness.completions import load_completions, load_targets
    from .harness.report import emit_report, summary_rows

    library = _library(args)
    kb = load_kb(args.kb)
    targets = load_targets(args.targets, _delimiter(args.delimiter)) if args.targets else None
    config = BenchConfig(
        k_list=args.k,
        n_samples=args.samples,
        seed=args.seed,
        mapping_threshold=args.mapping_threshold,
        jobs=args.jobs,
    )
    report = run_benchmark(targets, load_completions(args.completions), kb, library, config)
    for issue in report.issues:
        logger.warning("%s", issue)
    for path in emit_report(report, args.output, args.format):
        logger.info("wrote %s", path)
    for row in summary_rows(report.to_dict()):
        print("\t".join(row))
    return EXIT_OK


def cmd_report(args) -> int:
    from .harness.report import emit_report, summary_rows

    with open(args.report, encoding="utf-8") as fh:
        data = json.load(fh)
    if args.output:
        for path in emit_report(data, args.output, args.format):
            logger.info("wrote %s", path)
    delim = "," if args.format == ["csv"] else "\t"
    for row in summary_rows(data):
        print(delim.join(row))
    return EXIT_OK


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="chemcensor", description="Reaction plausibility scoring and retrosynthesis benchmarking.")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more log output (repeatable)")
    sub = parser.add_subparsers(dest="command", required=True)

    def library_flag(p):
        p.add_argument("--fg-library", default=None, help="FG library TSV (default: bundled library)")

    p = sub.add_parser("build-kb", help="build a knowledge base from a mapped reaction corpus")
    p.add_argument("corpus", help="corpus file: reaction SMILES [TAB doc_ref] per line")
    p.add_argument("--kb", required=True, help="output knowledge base file")
    library_flag(p)
    p.add_argument("--jobs", type=_positive, default=1, help="worker processes")
    p.add_argument("--doc-ref-cap", type=int, default=DEFAULT_DOC_REF_CAP, help="document refs kept per entry")
    p.add_argument("--source", default=None, help="corpus name stored in the KB (default: file name)")
    p.set_defaults(func=cmd_build_kb)

    p = sub.add_parser("score", help="score one reaction or a file of reactions")
    p.add_argument("reaction", nargs="?", help="reaction SMILES; omit to read --input")
    p.add_argument("--input", default=None, help="file with one reaction per line ('-' for stdin)")
    p.add_argument("--output", default=None, help="batch output file (default: stdout)")
    p.add_argument("--kb", required=True)
    library_flag(p)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--mapping-threshold", type=float, default=DEFAULT_COVERAGE_THRESHOLD)
    p.set_defaults(func=cmd_score)

    def target_flags(p):
        p.add_argument("--targets", required=True, help="targets file: id and SMILES per row")
        p.add_argument("--delimiter", default="tab", help="targets field delimiter: tab, comma or a character")
        p.add_argument("--fewshot", required=True, help="reaction corpus to draw few-shot examples from")
        p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("prompts", help="render few-shot prompts for a target list")
    target_flags(p)
    p.add_argument("--output", default=None, help="JSONL output (default: stdout)")
    p.set_defaults(func=cmd_prompts)

    p = sub.add_parser("generate", help="sample completions from a chat-completion endpoint")
    target_flags(p)
    p.add_argument("--base-url", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--model-id", default=None, help="label stored in the completions (default: --model)")
    p.add_argument("--api-key-env", default="CHEMCENSOR_API_KEY", help="environment variable holding the API key")
    p.add_argument("--samples", type=_positive, default=15)
    p.add_argument("--jobs", type=_positive, default=4, help="concurrent requests")
    p.add_argument("--timeout", type=float, default=60.0)
    p.add_argument("--retries", type=int, default=3)
    p.add_argument("--temperature", type=float, default=None)
    p.add_argument("--max-tokens", type=int, default=None)
    p.add_argument("--output", required=True, help="completions JSONL to write")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("bench", help="score completions and write benchmark reports")
    p.add_argument("--completions", required=True, help="completions JSONL")
    p.add_argument("--targets", default=None, help="targets file (default: targets seen in the completions)")
    p.add_argument("--delimiter", default="tab")
    p.add_argument("--kb", required=True)
    library_flag(p)
    p.add_argument("--k", type=_k_list, default=DEFAULT_K, help="comma-separated K values (default 3,5,10)")
    p.add_argument("--samples", type=_positive, default=15, help="samples per target")
    p.add_argument("--seed", type=int, default=None, help="seed echoed into the report")
    p.add_argument("--jobs", type=_positive, default=1, help="scoring worker processes")
    p.add_argument("--mapping-threshold", type=float, default=DEFAULT_COVERAGE_THRESHOLD)
    p.add_argument("--format", type=_formats, default=["json", "tsv"], help="comma-separated: json, tsv, csv")
    p.add_argument("--output", required=True, help="output directory")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("report", help="re-render tables from a saved report.json")
    p.add_argument("report", help="report.json written by 'bench'")
    p.add_argument("--format", type=_formats, default=["tsv"])
    p.add_argument("--output", default=None, help="output directory (default: print the summary only)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ChemCensorError, OSError, ValueError) as exc:
        print(f"chemcensor {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
