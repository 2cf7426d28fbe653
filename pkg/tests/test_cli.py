import json

import pytest
import yaml

from echoscope import __version__, pipeline
from echoscope.cli import main
from echoscope.errors import NumericalError
from echoscope.pipeline import load_config, params_of

FAST = {"stats": {"B_null": 199, "B_boot": 200}, "similarity": {"reps": 5}, "rank": {"top_k": 20}}


def write_config(path):
    path.write_text(yaml.safe_dump(FAST))
    return str(path)


@pytest.fixture(scope="module")
def period(tmp_path_factory):
    root = tmp_path_factory.mktemp("period")
    cfg = write_config(root / "cfg.yaml")
    assert main(["synth", "-c", cfg, "-o", str(root / "gen"), "--users", "800", "--influencers", "12",
                 "--epsilon", "0.1", "--seed", "5"]) == 0
    corpus = root / "gen" / "synth" / "corpus.jsonl"
    assert main(["run-all", "-c", cfg, "-o", str(root / "run"), "--input", str(corpus), "--seed", "1"]) == 0
    return root, cfg, corpus


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0 and __version__ in capsys.readouterr().out


def test_config_layering(tmp_path):
    (tmp_path / "c.yaml").write_text("paths:\n  corpus: data/x.jsonl\nrank:\n  radius: 3\n")
    cfg = load_config(tmp_path / "c.yaml", {"rank": {"top_k": 7}})
    assert cfg["rank"] == {**load_config()["rank"], "radius": 3, "top_k": 7}
    assert cfg["paths"]["corpus"] == [str(tmp_path / "data" / "x.jsonl")]


def test_flags_override_config(tmp_path, period):
    root, cfg, corpus = period
    out = tmp_path / "o"
    assert main(["ingest", "-c", cfg, "-o", str(out), "--input", str(corpus), "--seed", "9"]) == 0
    manifest = json.loads((out / "ingest" / "manifest.json").read_text())
    assert manifest["seed"] == 9 and manifest["params"]["seed"] == 9


def test_params_hash_ignores_threads():
    a, b = load_config(None, {"threads": 1}), load_config(None, {"threads": 8})
    assert params_of(a, "stats") == params_of(b, "stats")
    assert params_of(a, "stats") != params_of(load_config(None, {"seed": 2}), "stats")


@pytest.mark.parametrize("argv", [
    ["ingest"],
    ["ingest", "--input", "/nonexistent/corpus.jsonl"],
])
def test_input_errors_exit_2(tmp_path, argv, capsys):
    assert main(argv + ["-o", str(tmp_path)]) == 2
    assert "error" in capsys.readouterr().err


def test_bad_config_section_exits_2(tmp_path):
    (tmp_path / "c.yaml").write_text("bogus:\n  x: 1\n")
    assert main(["ingest", "-c", str(tmp_path / "c.yaml"), "-o", str(tmp_path)]) == 2


def test_rank_without_graph_names_missing_file(tmp_path, capsys):
    assert main(["rank", "-o", str(tmp_path)]) == 3
    assert "graph" in capsys.readouterr().err


def test_numerical_failure_exits_4(tmp_path, monkeypatch, capsys):
    def boom(ctx):
        raise NumericalError("solver diverged")
    monkeypatch.setitem(pipeline.STAGE_FUNCS, "ideology", boom)
    assert main(["ideology", "-o", str(tmp_path)]) == 4
    assert "solver diverged" in capsys.readouterr().err


def test_disjoint_audiences_are_a_numerical_failure(tmp_path):
    lines = []
    for k, (user, src) in enumerate([("u1", "a"), ("u2", "b")] * 3):
        lines.append(json.dumps({"tweet_id": f"t{k}", "user_id": user, "timestamp": 1600000000 + k,
                                 "kind": "retweet", "source_user_id": src, "urls": ["https://cnn.com/x"],
                                 "client": "Twitter Web App"}))
    (tmp_path / "c.jsonl").write_text("\n".join(lines) + "\n")
    argv = ["-o", str(tmp_path / "o"), "--input", str(tmp_path / "c.jsonl")]
    for stage in ("ingest", "classify", "graph", "rank"):
        assert main([stage] + argv) == 0
    assert main(["similarity"] + argv) == 4


def test_manifests(period):
    root, _, _ = period
    for stage in pipeline.PERIOD_STAGES:
        m = json.loads((root / "run" / stage / "manifest.json").read_text())
        assert m["stage"] == stage and m["seed"] == 1 and len(m["params_hash"]) == 64
        assert set(m["versions"]) >= {"echoscope", "python", "numpy", "backend"}
        for name, digest in m["outputs"].items():
            assert pipeline.sha256(root / "run" / stage / name) == digest
    rank = json.loads((root / "run" / "rank" / "manifest.json").read_text())
    assert any("graph" in p for p in rank["inputs"])


def test_rerun_is_byte_identical(tmp_path, period):
    root, cfg, corpus = period
    assert main(["run-all", "-c", cfg, "-o", str(tmp_path), "--input", str(corpus), "--seed", "1"]) == 0
    for stage in pipeline.PERIOD_STAGES:
        for f in (root / "run" / stage).iterdir():
            other = tmp_path / stage / f.name
            if f.name == "manifest.json":
                a, b = json.loads(f.read_text()), json.loads(other.read_text())
                assert a["outputs"] == b["outputs"] and a["params_hash"] == b["params_hash"]
            else:
                assert f.read_bytes() == other.read_bytes(), f"{stage}/{f.name}"


def test_identical_periods_report_zero_deltas(tmp_path, period):
    root, cfg, _ = period
    run = str(root / "run")
    assert main(["report", "-c", cfg, "-o", str(tmp_path), "--period-a", run, "--period-b", run]) == 0
    rep = json.loads((tmp_path / "report" / "report.json").read_text())
    for name, ch in rep["changes"].items():
        if ch["a"] is not None:
            assert ch["delta"] == 0 and ch["direction"] == "unchanged", name
    assert rep["rank_shifts"]["new_entrant_fraction"] == 0.0
    assert (tmp_path / "report" / "report.md").read_text().startswith("#")


def test_report_needs_both_periods(tmp_path, period):
    root, cfg, _ = period
    assert main(["report", "-c", cfg, "-o", str(tmp_path), "--period-a", str(root / "run")]) == 2
    assert main(["report", "-c", cfg, "-o", str(tmp_path), "--period-a", str(root / "run"),
                 "--period-b", str(tmp_path / "nothing")]) == 3


def test_empty_period_is_an_error(tmp_path, period):
    root, cfg, _ = period
    (tmp_path / "empty.jsonl").write_text("")
    assert main(["ingest", "-c", cfg, "-o", str(tmp_path / "e"), "--input", str(tmp_path / "empty.jsonl")]) == 0
    empty = tmp_path / "e"
    for stage in ("stats", "similarity", "rank", "classify"):
        (empty / stage).mkdir()
    assert main(["report", "-c", cfg, "-o", str(tmp_path / "r"), "--period-a", str(root / "run"),
                 "--period-b", str(empty)]) == 2


def test_shifts_with_labels(tmp_path, period):
    root, cfg, _ = period
    labels = root / "gen" / "synth" / "labels.tsv"
    run = str(root / "run")
    assert main(["shifts", "-c", cfg, "-o", str(tmp_path), "--period-a", run, "--period-b", run,
                 "--labels", str(labels)]) == 0
    out = tmp_path / "shifts"
    assert (out / "type_shares_a.tsv").read_bytes() == (out / "type_shares_b.tsv").read_bytes()
    summary = json.loads((out / "summary.json").read_text())
    assert summary["new_entrant_fraction"] == 0.0
