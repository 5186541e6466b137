"""CLI subcommands, output shapes, and exit codes."""

from __future__ import annotations

import json
import sys

import pytest

from lyristics.cli import main

from test_pipeline import QUICK, make_corpus_file


def run_cli(argv, monkeypatch, capsys):
    monkeypatch.setattr(sys, "argv", ["lyristics", *argv])
    code = 0
    try:
        main()
    except SystemExit as exc:
        code = exc.code or 0
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    return str(make_corpus_file(tmp_path_factory.mktemp("corpus") / "corpus.jsonl"))


@pytest.fixture(scope="module")
def config_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("config") / "quick.json"
    path.write_text(json.dumps(QUICK.to_dict()))
    return str(path)


class TestUsageErrors:
    def test_unknown_subcommand(self, monkeypatch, capsys):
        code, _, err = run_cli(["mystery"], monkeypatch, capsys)
        assert code == 1
        assert "mystery" in err

    def test_missing_required_option(self, monkeypatch, capsys):
        code, _, err = run_cli(["sample", "corpus.jsonl"], monkeypatch, capsys)
        assert code == 1
        assert "--mode" in err

    def test_no_wait_needs_server(self, corpus_path, monkeypatch, capsys):
        code, _, err = run_cli(["experiment", corpus_path, "--no-wait"], monkeypatch, capsys)
        assert code == 1
        assert "--server" in err

    def test_bad_choice_value(self, monkeypatch, capsys):
        code, _, err = run_cli(
            ["group", "corpus.jsonl", "--method", "ward"], monkeypatch, capsys
        )
        assert code == 1

    def test_train_rejects_plugin_classifier(self, corpus_path, monkeypatch, capsys):
        code, _, err = run_cli(
            ["--classifier", "plugin:whatever", "train", corpus_path, "ds.json"],
            monkeypatch,
            capsys,
        )
        assert code == 1
        assert "experiment" in err

    def test_evaluate_rejects_plugin_classifier(self, corpus_path, monkeypatch, capsys):
        code, _, err = run_cli(
            ["--classifier", "plugin:whatever", "evaluate", corpus_path, "ds.json", "m.npz"],
            monkeypatch,
            capsys,
        )
        assert code == 1
        assert "experiment" in err


class TestDataErrors:
    def test_missing_corpus_exits_2(self, monkeypatch, capsys, tmp_path):
        code, _, err = run_cli(["entropy", str(tmp_path / "absent.jsonl")], monkeypatch, capsys)
        assert code == 2
        assert "error:" in err and "not found" in err

    def test_synth_without_source_exits_2(self, monkeypatch, capsys, tmp_path):
        code, _, err = run_cli(["synth", str(tmp_path / "out.jsonl")], monkeypatch, capsys)
        assert code == 2


class TestPluginExitCode:
    def test_502_body_maps_to_exit_3(self, monkeypatch, capsys):
        import httpx

        real_client = httpx.Client

        def fake_client(**kwargs):
            transport = httpx.MockTransport(
                lambda request: httpx.Response(
                    502,
                    json={"kind": "plugin", "type": "HandshakeError", "error": "plugin fell over"},
                )
            )
            return real_client(transport=transport, base_url=kwargs.get("base_url", ""))

        monkeypatch.setattr(httpx, "Client", fake_client)
        code, _, err = run_cli(
            ["--server", "http://stub", "entropy", "corpus.jsonl"], monkeypatch, capsys
        )
        assert code == 3
        assert "plugin fell over" in err


class TestServerMode:
    def test_remote_calls_hit_the_given_base_url(self, monkeypatch, capsys):
        import httpx

        seen = {}
        real_client = httpx.Client

        def fake_client(**kwargs):
            def handler(request):
                seen["url"] = str(request.url)
                seen["json"] = json.loads(request.content)
                return httpx.Response(
                    200, json={"base": "natural", "stats": [], "histogram": None}
                )

            return real_client(
                transport=httpx.MockTransport(handler), base_url=kwargs.get("base_url", "")
            )

        monkeypatch.setattr(httpx, "Client", fake_client)
        code, out, _ = run_cli(
            ["--server", "http://svc:9000", "entropy", "c.jsonl", "--min-songs", "5"],
            monkeypatch,
            capsys,
        )
        assert code == 0
        assert seen["url"] == "http://svc:9000/entropy"
        assert seen["json"]["min_songs"] == 5
        assert "0 lyricists" in out

    def test_unreachable_server_exits_1(self, monkeypatch, capsys):
        import httpx

        real_client = httpx.Client

        def fake_client(**kwargs):
            def handler(request):
                raise httpx.ConnectError("connection refused")

            return real_client(
                transport=httpx.MockTransport(handler), base_url=kwargs.get("base_url", "")
            )

        monkeypatch.setattr(httpx, "Client", fake_client)
        code, _, err = run_cli(
            ["--server", "http://svc:9000", "entropy", "c.jsonl"], monkeypatch, capsys
        )
        assert code == 1
        assert "cannot reach http://svc:9000" in err


class TestSynthIngest:
    def test_synth_from_params_file(self, monkeypatch, capsys, tmp_path):
        params = tmp_path / "params.json"
        params.write_text(
            json.dumps({"n_lyricists": 4, "songs_per_lyricist": [3, 3], "seed": 2})
        )
        out_path = tmp_path / "synth.jsonl"
        code, out, _ = run_cli(
            ["synth", str(out_path), "--params", str(params)], monkeypatch, capsys
        )
        assert code == 0
        assert f"wrote {out_path}: 12 songs, 4 lyricists" in out
        assert out_path.exists()

    def test_ingest_converts_to_csv(self, corpus_path, monkeypatch, capsys, tmp_path):
        out_path = tmp_path / "corpus.csv"
        code, out, _ = run_cli(["ingest", corpus_path, str(out_path)], monkeypatch, capsys)
        assert code == 0
        assert "600 songs, 50 lyricists" in out
        assert out_path.read_text().startswith("song_id,")


class TestEntropyGroup:
    def test_entropy_summary_and_histogram(self, corpus_path, monkeypatch, capsys):
        code, out, _ = run_cli(
            ["entropy", corpus_path, "--histogram-bin", "1.0"], monkeypatch, capsys
        )
        assert code == 0
        assert "50 lyricists, 10 with zero entropy (base=natural)" in out
        assert "[ 0.000, +1)" in out

    def test_entropy_csv(self, corpus_path, monkeypatch, capsys, tmp_path):
        csv_path = tmp_path / "stats.csv"
        code, out, _ = run_cli(
            ["entropy", corpus_path, "--csv", str(csv_path)], monkeypatch, capsys
        )
        assert code == 0
        lines = csv_path.read_text().splitlines()
        assert lines[0] == "lyricist_id,song_count,n_singers,entropy"
        assert lines[1] == "L000,12,1,0.000000"
        assert len(lines) == 51

    def test_log_base_flag_propagates(self, corpus_path, monkeypatch, capsys):
        code, out, _ = run_cli(["--log-base", "2", "entropy", corpus_path], monkeypatch, capsys)
        assert code == 0
        assert "(base=2)" in out

    def test_group_table(self, corpus_path, monkeypatch, capsys, tmp_path):
        json_path = tmp_path / "groups.json"
        code, out, _ = run_cli(
            ["group", corpus_path, "--json", str(json_path)], monkeypatch, capsys
        )
        assert code == 0
        assert "quantile grouping:" in out
        assert "kmeans grouping:" in out
        assert "  A0" in out and "  B4" in out
        groupings = json.loads(json_path.read_text())
        assert [g["method"] for g in groupings] == ["quantile", "kmeans"]


class TestWorkflow:
    def test_sample_train_evaluate(self, corpus_path, config_path, monkeypatch, capsys, tmp_path):
        datasets = tmp_path / "datasets"
        code, out, _ = run_cli(
            ["--out", str(datasets), "sample", corpus_path, "--mode", "homogenous", "--reps", "1"],
            monkeypatch,
            capsys,
        )
        assert code == 0
        assert f"wrote 5 datasets to {datasets}/" in out
        dataset_path = datasets / "homogenous-quantile-g0-r00.json"
        assert dataset_path.exists()

        model_path = tmp_path / "model.npz"
        code, out, _ = run_cli(
            [
                "train",
                corpus_path,
                str(dataset_path),
                "--config",
                config_path,
                "--model-out",
                str(model_path),
            ],
            monkeypatch,
            capsys,
        )
        assert code == 0
        assert "trained homogenous-quantile-g0-r00:" in out
        assert model_path.exists()

        code, out, _ = run_cli(
            ["evaluate", corpus_path, str(dataset_path), str(model_path)], monkeypatch, capsys
        )
        assert code == 0
        assert "accuracy" in out
        assert len([line for line in out.splitlines() if line.startswith("  L")]) == 10

    def test_seed_flag_changes_sampling(self, corpus_path, monkeypatch, capsys, tmp_path):
        a, b, c = (tmp_path / name for name in ("a", "b", "c"))
        for out_dir, seed in ((a, "0"), (b, "1"), (c, "1")):
            code, _, _ = run_cli(
                [
                    "--out",
                    str(out_dir),
                    "--seed",
                    seed,
                    "sample",
                    corpus_path,
                    "--mode",
                    "heterogenous",
                    "--reps",
                    "1",
                ],
                monkeypatch,
                capsys,
            )
            assert code == 0
        name = "heterogenous-quantile-r00.json"
        assert (b / name).read_bytes() == (c / name).read_bytes()
        seed0 = json.loads((a / name).read_text())
        seed1 = json.loads((b / name).read_text())
        assert seed0["provenance"]["rng_seed"] == 0
        assert seed1["provenance"]["rng_seed"] == 1
        assert seed0["candidate_lyricists"] != seed1["candidate_lyricists"]


class TestExperimentReport:
    def test_full_experiment_then_report(self, corpus_path, monkeypatch, capsys, tmp_path):
        config = tmp_path / "experiment.json"
        config.write_text(
            json.dumps(
                {
                    "homogenous_reps": 1,
                    "heterogenous_reps": 1,
                    "classifier_config": QUICK.to_dict(),
                }
            )
        )
        out_dir = tmp_path / "run"
        code, out, _ = run_cli(
            ["--out", str(out_dir), "experiment", corpus_path, "--config", str(config)],
            monkeypatch,
            capsys,
        )
        assert code == 0
        assert "run run-" in out
        assert "datasets: 12 scored, 0 failed" in out
        assert "quantile-homogenous: pearson" in out
        assert f"reports in {out_dir}/reports/" in out

        code, out, _ = run_cli(["report", str(out_dir)], monkeypatch, capsys)
        assert code == 0
        printed = out.splitlines()
        assert f"{out_dir}/reports/summary.json" in printed
        assert len(printed) == 21

    def test_experiment_failure_exits_2(self, corpus_path, monkeypatch, capsys, tmp_path):
        config = tmp_path / "bad.json"
        # classifier config with an invalid field value fails inside the run
        config.write_text(json.dumps({"classifier_config": {"learning_rate": -1.0}}))
        code, _, err = run_cli(
            ["--out", str(tmp_path / "run"), "experiment", corpus_path, "--config", str(config)],
            monkeypatch,
            capsys,
        )
        assert code == 2
        assert "error:" in err

    def test_experiment_dataset_failures_exit_3(self, corpus_path, monkeypatch, capsys, tmp_path):
        config = tmp_path / "quick.json"
        config.write_text(json.dumps({"modes": ["homogenous"], "homogenous_reps": 1}))
        code, out, err = run_cli(
            [
                "--out", str(tmp_path / "run"),
                "--classifier", "plugin:false",
                "experiment", corpus_path, "--config", str(config),
            ],
            monkeypatch,
            capsys,
        )
        assert code == 3
        assert "0 scored" in out
        assert "HandshakeError" in err
        manifest = json.loads((tmp_path / "run" / "manifest.json").read_text())
        assert all(e["kind"] == "plugin" for e in manifest["datasets"].values())
