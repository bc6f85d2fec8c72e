from __future__ import annotations

import json
import time

import httpx
import pytest

from chemcensor.exceptions import AuthError, EmptyBenchmark, FormatError, PoolTooSmall
from chemcensor.harness import (
    TEMPLATES,
    BenchConfig,
    CompletionRecord,
    EndpointConfig,
    Target,
    build_prompt,
    emit_report,
    extract_answer,
    fewshot_pool_from_reactions,
    generate_completions,
    load_completions,
    load_targets,
    query_model,
    run_benchmark,
    write_completions,
)
from chemcensor.harness.prompts import render_template
from chemcensor.harness.report import category_rows, fg_matrix_rows, summary_rows
from conftest import data_path

POOL = [(f"C{'C' * i}O", f"C{'C' * i}Br.O") for i in range(12)]


# -- prompts -----------------------------------------------------------------


def test_template_set():
    assert len(TEMPLATES) == 15
    assert len(set(TEMPLATES)) == 15
    for i in range(1, 16):
        text = render_template(i, "CCO")
        assert "<smiles>CCO</smiles>" in text and "{{" not in text


def test_prompt_is_deterministic():
    a = build_prompt("c1ccccc1O", POOL, seed=7)
    b = build_prompt("c1ccccc1O", POOL, seed=7)
    assert a == b and a.rendered == b.rendered
    assert len({build_prompt("c1ccccc1O", POOL, seed=s).rendered for s in range(10)}) > 1


def test_prompt_contents():
    spec = build_prompt("CCN", POOL, seed=1)
    assert len(spec.fewshot) == 5
    assert spec.rendered.endswith(render_template(spec.template_id, "CCN") + "\nAnswer:")
    for question, answer in spec.fewshot:
        assert answer in spec.rendered and question in spec.rendered
    assert spec.to_dict()["target_smiles"] == "CCN"


def test_pool_of_exactly_five():
    pool = POOL[:5]
    spec = build_prompt("CCN", pool, seed=3)
    assert sorted(a for _, a in spec.fewshot) == sorted(a for _, a in pool)
    assert spec == build_prompt("CCN", pool, seed=3)


def test_pool_too_small():
    with pytest.raises(PoolTooSmall):
        build_prompt("CCN", POOL[:4])


def test_templates_are_spread_over_targets():
    ids = {build_prompt("C" * (i + 1), POOL, seed=0).template_id for i in range(100)}
    assert len(ids) > 1


def test_pool_from_reactions_strips_maps():
    pool = fewshot_pool_from_reactions(
        ["# c", "[CH3:1][OH:2].[CH3:5][C:3](=[O:4])O>>[CH3:1][O:2][C:3](=[O:4])[CH3:5]\tdoc", "C(>>C"]
    )
    assert len(pool) == 1
    product, reactants = pool[0]
    assert ":" not in product + reactants and "." in reactants


# -- extraction --------------------------------------------------------------


@pytest.mark.parametrize(
    "text, expected",
    [
        ("reasoning...\n<smiles>CCO.CBr</smiles>", "CCO.CBr"),
        ("<smiles>CCO</smiles> or <smiles>CCN.CBr</smiles>", "CCN.CBr"),
        ("<smiles> CC(=O)Cl .\n NCc1ccccc1 </smiles>", "CC(=O)Cl.NCc1ccccc1"),
        ("< SMILES >CCO< / SMILES >", "CCO"),
        ("<reactants>CC(=O)O.OCC</reactants>", "CC(=O)O.OCC"),
        ("I think the answer is CC(=O)O.OCC.", "CC(=O)O.OCC"),
        ("Answer: `CCO.CBr>>CCOC`", "CCO.CBr"),
        ("Answer:\nCC(=O)Cl.NCc1ccccc1\nHope this helps", "CC(=O)Cl.NCc1ccccc1"),
        ("<smiles>C(</smiles>", "C("),
        ("<smiles></smiles>", None),
        ("I cannot answer that.", None),
        ("", None),
        (None, None),
    ],
)
def test_extract_answer(text, expected):
    assert extract_answer(text) == expected


# -- client --------------------------------------------------------------------


def _config(**kw) -> EndpointConfig:
    base = dict(base_url="http://mock/v1", model="m", retries=2, backoff=0.0, concurrency=4)
    base.update(kw)
    return EndpointConfig(**base)


def _reply(text: str) -> httpx.Response:
    return httpx.Response(200, json={"choices": [{"message": {"role": "assistant", "content": text}}]})


def test_echo_endpoint():
    seen = []

    def handler(request):
        body = json.loads(request.content)
        seen.append(body)
        return _reply("<smiles>CCO</smiles>")

    out = query_model(_config(params={"temperature": 0.7}), "prompt", 15, httpx.MockTransport(handler), sleep=lambda s: None)
    assert out == ["<smiles>CCO</smiles>"] * 15
    assert len(seen) == 15 and seen[0]["temperature"] == 0.7 and seen[0]["model"] == "m"
    assert seen[0]["messages"][0]["content"] == "prompt"


def test_server_errors_become_markers():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500, text="boom")

    out = query_model(_config(), "p", 15, httpx.MockTransport(handler), sleep=lambda s: None)
    assert out == [None] * 15
    assert len(calls) == 15 * 3


def test_transient_then_success():
    state = {"n": 0}

    def handler(request):
        state["n"] += 1
        return httpx.Response(503) if state["n"] == 1 else _reply("ok")

    delays = []
    out = query_model(_config(concurrency=1, backoff=0.5), "p", 1, httpx.MockTransport(handler), sleep=delays.append)
    assert out == ["ok"] and delays == [0.5]


def test_auth_error_stops_run(monkeypatch):
    monkeypatch.setenv("CC_TEST_KEY", "secret")
    seen = []

    def handler(request):
        seen.append(request.headers.get("authorization"))
        return httpx.Response(401)

    with pytest.raises(AuthError):
        query_model(_config(api_key_env="CC_TEST_KEY", concurrency=1), "p", 3, httpx.MockTransport(handler))
    assert seen[0] == "Bearer secret"


def test_no_key_no_header(monkeypatch):
    monkeypatch.delenv("CC_UNSET_KEY", raising=False)
    assert "Authorization" not in _config(api_key_env="CC_UNSET_KEY").headers()
    assert "secret" not in _config().describe()


def test_latency_bounded_by_concurrency():
    delay = 0.05

    def handler(request):
        time.sleep(delay)
        return _reply("x")

    n, conc = 12, 4
    start = time.perf_counter()
    out = query_model(_config(concurrency=conc, timeout=delay * 4), "p", n, httpx.MockTransport(handler))
    elapsed = time.perf_counter() - start
    assert out == ["x"] * n
    assert elapsed <= (n / conc) * (delay * 4)


def test_generate_and_round_trip(tmp_path):
    def handler(request):
        return _reply("<smiles>CCO</smiles>")

    targets = [Target("a", "CCOC"), Target("b", "CCN")]
    records = list(
        generate_completions(targets, POOL, _config(), n_samples=3, seed=5, model_id="mock", transport=httpx.MockTransport(handler))
    )
    assert [r.target_id for r in records] == ["a", "b"]
    assert records[0].provenance["endpoint"] == "http://mock/v1#m"
    path = tmp_path / "c.jsonl"
    write_completions(records, path)
    back = load_completions(path)
    assert back == records


def test_bad_completions_file(tmp_path):
    path = tmp_path / "c.jsonl"
    path.write_text('{"target_id": "a", "samples": []}\nnot json\n')
    with pytest.raises(FormatError):
        load_completions(path)
    path.write_text('{"target_id": "a", "samples": "x"}\n')
    with pytest.raises(FormatError):
        load_completions(path)


def test_load_targets_shapes(tmp_path):
    tsv = tmp_path / "t.tsv"
    tsv.write_text("id\tsmiles\nT1\tCCO\n# skip\nT2\tCCN\n")
    assert load_targets(tsv) == [Target("T1", "CCO"), Target("T2", "CCN")]
    csv_file = tmp_path / "t.csv"
    csv_file.write_text("ID,SMILES\n1,c1ccccc1\n")
    assert load_targets(csv_file, ",") == [Target("1", "c1ccccc1")]
    bad = tmp_path / "b.tsv"
    bad.write_text("T1\n")
    with pytest.raises(FormatError):
        load_targets(bad)


# -- benchmark -----------------------------------------------------------------


@pytest.fixture(scope="module")
def golden_report(fixture_kb, library):
    return run_benchmark(
        load_targets(data_path("golden_targets.tsv")),
        load_completions(data_path("golden_completions.jsonl")),
        fixture_kb,
        library,
    )


@pytest.fixture(scope="module")
def golden_expected():
    with open(data_path("golden_expected.json"), encoding="utf-8") as fh:
        return json.load(fh)


def _exact(text: str) -> str:
    return text if "/" in text else f"{text}/1"


def test_golden_per_target(golden_report, golden_expected):
    d = golden_report.to_dict()
    for model_id, exp in golden_expected["models"].items():
        targets = {t["target_id"]: t for t in d["models"][model_id]["targets"]}
        for tid, te in exp["targets"].items():
            t = targets[tid]
            assert t["n_valid"] == te["n_valid"]
            assert t["n_unique_valid"] == te["n_unique_valid"]
            assert [u["score"] for u in t["unique_predictions"]] == te["scores"]
            assert t["max_cc"] == max(te["scores"], default=0)
            assert {k: v["exact"] for k, v in t["cc_at_k"].items()} == {k: _exact(v) for k, v in te["cc_at_k"].items()}
            if "categories" in te:
                assert [s["category"] for s in t["samples"]] == te["categories"]


def test_golden_no_issues(golden_report):
    assert golden_report.issues == []
    assert golden_report.config["n_targets"] == 3


def test_parallel_scoring_matches(golden_report, fixture_kb, library):
    again = run_benchmark(
        None,
        load_completions(data_path("golden_completions.jsonl")),
        fixture_kb,
        library,
        BenchConfig(jobs=2),
    )
    assert again.to_dict() == golden_report.to_dict()


def test_empty_benchmark(fixture_kb, library):
    with pytest.raises(EmptyBenchmark):
        run_benchmark([], [], fixture_kb, library)


def test_gaps_are_flagged(fixture_kb, library):
    completions = [
        CompletionRecord("T1", "CC(=O)NCc1ccccc1", "m", ("<smiles>CC(=O)Cl.NCc1ccccc1</smiles>",)),
        CompletionRecord("T9", "CCO", "m", ("x",)),
        CompletionRecord("T1", "CC(=O)NCc1ccccc1", "m", ("y",)),
    ]
    targets = [Target("T1", "CC(=O)NCc1ccccc1"), Target("T2", "CCO")]
    report = run_benchmark(targets, completions, fixture_kb, library, BenchConfig(n_samples=3))
    issues = "\n".join(report.issues)
    assert "unknown target 'T9'" in issues
    assert "repeated record for target 'T1'" in issues
    assert "no completions for target 'T2'" in issues
    assert "has 1 samples, expected 3" in issues
    rec = {r.target_id: r for r in report.models["m"].records}
    assert rec["T1"].category_counts["PASS"] == 1 and rec["T1"].category_counts["EMPTY"] == 2
    assert rec["T2"].category_counts["EMPTY"] == 3


def test_all_invalid_target_contributes_zero(fixture_kb, library):
    good = ["<smiles>CC(=O)Cl.NCc1ccccc1</smiles>"] * 2
    completions = [
        CompletionRecord("A", "CC(=O)NCc1ccccc1", "m", tuple(good)),
        CompletionRecord("B", "CCO", "m", ("<smiles>C(</smiles>", "nothing")),
    ]
    report = run_benchmark(None, completions, fixture_kb, library, BenchConfig(k_list=(1, 3), n_samples=2))
    agg = report.models["m"].aggregate
    assert str(agg.av_pt_max_cc) == "5/2"
    assert str(agg.av_pt_top_k[1]) == "5/2"
    assert str(agg.av_pt_top_k[3]) == "5/6"


def test_report_files_are_byte_stable(golden_report, tmp_path):
    first = emit_report(golden_report, tmp_path / "a", ["json", "tsv", "csv"])
    second = emit_report(golden_report, tmp_path / "b", ["json", "tsv", "csv"])
    assert [p.split("/")[-1] for p in first] == [p.split("/")[-1] for p in second]
    assert len(first) == 7
    for a, b in zip(first, second):
        with open(a, "rb") as fa, open(b, "rb") as fb:
            assert fa.read() == fb.read()


def test_report_json_rerenders(golden_report, tmp_path):
    emit_report(golden_report, tmp_path / "a", ["json", "tsv"])
    with open(tmp_path / "a" / "report.json", encoding="utf-8") as fh:
        data = json.load(fh)
    emit_report(data, tmp_path / "b", ["tsv"])
    for name in ("summary.tsv", "categories.tsv", "fg_matrix.tsv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_report_tables(golden_report, library):
    d = golden_report.to_dict()
    summary = summary_rows(d)
    assert len(summary) == 1 + len(d["models"])
    assert summary[0][-3:] == ["av_pt_top_3_cc", "av_pt_top_5_cc", "av_pt_top_10_cc"]
    cats = category_rows(d)
    assert cats[-1][:2] == ["model-b", "*"] and cats[-1][-1] == "45"
    matrix = fg_matrix_rows(d)
    assert len(matrix[0]) == 1 + library.size
    assert all(len(r) == len(matrix[0]) for r in matrix)


def test_zero_matrix_is_emitted(fixture_kb, library, tmp_path):
    completions = [CompletionRecord("A", "CC(=O)NCc1ccccc1", "m", ("<smiles>CC(=O)Cl.NCc1ccccc1</smiles>",))]
    report = run_benchmark(None, completions, fixture_kb, library, BenchConfig(n_samples=1))
    emit_report(report, tmp_path, ["csv"])
    rows = (tmp_path / "fg_matrix.csv").read_text().splitlines()
    assert len(rows) == 2
    assert set(rows[1].split(",")[1:]) == {"0"}


def test_unknown_format(golden_report, tmp_path):
    with pytest.raises(ValueError):
        emit_report(golden_report, tmp_path, ["xml"])
