"""Benchmark harness: prompts, model sampling, extraction, scoring, reports."""

from .bench import BenchConfig, BenchmarkReport, ModelReport, SampleOutcome, run_benchmark
from .client import EndpointConfig, query_model
from .completions import (
    CompletionRecord,
    Target,
    generate_completions,
    load_completions,
    load_targets,
    write_completions,
)
from .extract import extract_answer
from .prompts import TEMPLATES, PromptSpec, build_prompt, fewshot_pool_from_reactions
from .report import emit_report

__all__ = [
    "BenchConfig",
    "BenchmarkReport",
    "CompletionRecord",
    "EndpointConfig",
    "ModelReport",
    "PromptSpec",
    "SampleOutcome",
    "TEMPLATES",
    "Target",
    "build_prompt",
    "emit_report",
    "extract_answer",
    "fewshot_pool_from_reactions",
    "generate_completions",
    "load_completions",
    "load_targets",
    "query_model",
    "run_benchmark",
    "write_completions",
]
