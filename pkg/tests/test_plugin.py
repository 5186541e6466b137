"""External classifier protocol: framing, conformance, failure handling."""

from __future__ import annotations

import io
import json
import sys
from pathlib import Path

import numpy as np
import pytest

from lyristics.classifier import ClassifierConfig, train
from lyristics.errors import (
    HandshakeError,
    PluginExitError,
    PluginTimeoutError,
    ProtocolViolationError,
)
from lyristics.plugin import (
    PluginProcess,
    _has_wildcard,
    _matches,
    decode_message,
    encode_message,
    external_classifier,
    run_transcript,
)
from lyristics.plugin_server import serve
from lyristics.sampling import ExperimentDataset, SplitSongs

from conftest import marker_corpus

DATA = Path(__file__).parent / "data"
TRANSCRIPTS = sorted((DATA / "transcripts").glob("*.jsonl"))
SERVER_CMD = [sys.executable, "-m", "lyristics.plugin_server"]


def fake(name):
    return [sys.executable, str(DATA / "fake_plugins" / f"{name}.py")]


def manual_dataset():
    corpus = marker_corpus(n_lyricists=10, n_songs=10)
    splits = {}
    for i in range(10):
        ids = [f"m{i:02d}-{t:02d}" for t in range(10)]
        splits[f"lyr{i:02d}"] = SplitSongs(
            train=tuple(ids[:6]), val=tuple(ids[6:8]), test=tuple(ids[8:])
        )
    dataset = ExperimentDataset(
        dataset_id="manual",
        candidate_lyricists=tuple(f"lyr{i:02d}" for i in range(10)),
        splits=splits,
        provenance={},
    )
    return corpus, dataset


QUICK = ClassifierConfig(max_epochs=10, char_ngrams=(), learning_rate=0.5)


class TestEncoding:
    def test_canonical_form(self):
        line = encode_message({"b": 1, "a": "é", "nested": {"y": [2, 1], "x": None}})
        assert line == '{"a":"é","b":1,"nested":{"x":null,"y":[2,1]}}\n'

    def test_round_trip(self):
        message = {"cmd": "train", "candidates": ["a", "b"], "config": {"lr": 0.5}}
        assert decode_message(encode_message(message)) == message

    def test_decode_rejects_bad_json(self):
        with pytest.raises(ProtocolViolationError, match="malformed"):
            decode_message("{oops\n")

    def test_decode_rejects_non_object(self):
        with pytest.raises(ProtocolViolationError, match="not a JSON object"):
            decode_message("[1,2,3]\n")


class TestMatching:
    def test_wildcard_positions(self):
        assert _matches("*", {"anything": [1]})
        assert _matches({"ok": True, "name": "*"}, {"ok": True, "name": "zed"})
        assert _matches({"probs": "*"}, {"probs": [[0.5, 0.5]]})
        assert _matches([1, "*", 3], [1, 99, 3])

    def test_exact_key_set_required(self):
        assert not _matches({"ok": True}, {"ok": True, "extra": 1})
        assert not _matches({"ok": True, "name": "*"}, {"ok": True})

    def test_list_length_required(self):
        assert not _matches([1, "*"], [1, 2, 3])

    def test_scalar_equality(self):
        assert _matches(3, 3)
        assert not _matches(3, 3.5)

    def test_wildcard_detection(self):
        assert _has_wildcard({"a": ["*"]})
        assert _has_wildcard("*")
        assert not _has_wildcard({"a": [1, "x"], "b": {"c": None}})


@pytest.mark.parametrize("path", TRANSCRIPTS, ids=lambda p: p.stem)
class TestTranscripts:
    def test_reference_server_conforms(self, path):
        run_transcript(SERVER_CMD, path, timeout=60.0)


class TestServeDirect:
    def _serve(self, *messages, raw=None):
        lines = "".join(encode_message(m) for m in messages)
        if raw is not None:
            lines += raw
        out = io.StringIO()
        code = serve(stdin=io.StringIO(lines), stdout=out)
        replies = [json.loads(line) for line in out.getvalue().splitlines()]
        return code, replies

    def test_malformed_line_exits_3(self):
        code, replies = self._serve(raw="{nope\n")
        assert code == 3
        assert replies[-1]["ok"] is False

    def test_non_object_line_exits_3(self):
        code, replies = self._serve(raw="[1,2]\n")
        assert code == 3
        assert "not a JSON object" in replies[-1]["error"]

    def test_wrong_protocol_exits_3(self):
        code, replies = self._serve({"cmd": "handshake", "protocol": 9})
        assert code == 3
        assert "unsupported protocol" in replies[-1]["error"]

    def test_unknown_cmd_recoverable(self):
        code, replies = self._serve(
            {"cmd": "handshake", "protocol": 1},
            {"cmd": "mystery"},
            {"cmd": "shutdown"},
        )
        assert code == 0
        assert replies[0]["ok"] is True
        assert "unknown cmd" in replies[1]["error"]

    def test_predict_before_train(self):
        code, replies = self._serve(
            {"cmd": "handshake", "protocol": 1},
            {"cmd": "predict", "texts": ["x"]},
            {"cmd": "shutdown"},
        )
        assert code == 0
        assert replies[1] == {"ok": False, "error": "predict before train"}

    def test_predict_needs_text_list(self):
        train_message = {
            "cmd": "train",
            "candidates": ["a", "b"],
            "train": [{"label": 0, "text": "aa aa"}, {"label": 1, "text": "bb bb"}],
            "val": [{"label": 0, "text": "aa"}, {"label": 1, "text": "bb"}],
            "config": {"max_epochs": 2},
        }
        code, replies = self._serve(
            {"cmd": "handshake", "protocol": 1},
            train_message,
            {"cmd": "predict", "texts": "not a list"},
            {"cmd": "shutdown"},
        )
        assert code == 0
        assert "list of texts" in replies[2]["error"]

    def test_blank_lines_skipped_and_eof_clean(self):
        out = io.StringIO()
        stdin = io.StringIO("\n" + encode_message({"cmd": "handshake", "protocol": 1}) + "\n")
        assert serve(stdin=stdin, stdout=out) == 0

    def test_bad_train_payload_recoverable(self):
        code, replies = self._serve(
            {"cmd": "handshake", "protocol": 1},
            {"cmd": "train", "candidates": ["a"], "train": [{"no_text": 1}], "val": []},
            {"cmd": "shutdown"},
        )
        assert code == 0
        assert "bad train message" in replies[1]["error"]


class TestProcessFailures:
    def test_timeout_kills_plugin(self):
        process = PluginProcess(fake("slow"), timeout=1.0)
        process.handshake()
        with pytest.raises(PluginTimeoutError, match="no reply within"):
            process.request({"cmd": "train"})
        assert process.proc.poll() is not None

    def test_exit_mid_protocol(self):
        process = PluginProcess(fake("dies"))
        process.handshake()
        with pytest.raises(PluginExitError, match="code 7"):
            process.request({"cmd": "train"})

    def test_request_after_exit(self):
        process = PluginProcess(fake("dies"))
        process.handshake()
        with pytest.raises(PluginExitError):
            process.request({"cmd": "train"})
        with pytest.raises(PluginExitError, match="already exited"):
            process.request({"cmd": "predict", "texts": []})

    def test_wrong_protocol_version(self):
        process = PluginProcess(fake("wrong_protocol"))
        with pytest.raises(HandshakeError, match="protocol 2"):
            process.handshake()
        process.close(force=True)

    def test_handshake_refused(self):
        process = PluginProcess(fake("refuses"))
        with pytest.raises(HandshakeError, match="no seats left"):
            process.handshake()
        process.close(force=True)

    def test_garbage_reply(self):
        process = PluginProcess(fake("garbage"))
        process.handshake()
        with pytest.raises(ProtocolViolationError, match="malformed JSON"):
            process.request({"cmd": "train"})
        process.close(force=True)

    def test_reply_without_ok(self):
        process = PluginProcess(fake("missing_ok"))
        process.handshake()
        with pytest.raises(ProtocolViolationError, match="lacks 'ok'"):
            process.request({"cmd": "train"})
        process.close(force=True)

    def test_unspawnable_command(self):
        with pytest.raises(HandshakeError, match="cannot spawn"):
            PluginProcess(["/nonexistent/plugin-binary"])

    def test_nonzero_shutdown_reported(self):
        process = PluginProcess(fake("dies"))
        process.handshake()
        with pytest.raises(PluginExitError, match="on shutdown"):
            process.shutdown()


class TestExternalModel:
    def test_bad_probability_sum_rejected(self):
        corpus, dataset = manual_dataset()
        model = external_classifier(fake("bad_probs"), dataset, corpus, QUICK)
        with model:
            with pytest.raises(ProtocolViolationError, match="sums to"):
                model.predict_batch(["whatever"])

    def test_short_rows_rejected(self):
        corpus, dataset = manual_dataset()
        model = external_classifier(fake("short_rows"), dataset, corpus, QUICK)
        with model:
            with pytest.raises(ProtocolViolationError, match="row 0"):
                model.predict_batch(["whatever"])

    def test_failed_train_cleans_up_child(self):
        corpus, dataset = manual_dataset()
        with pytest.raises(PluginExitError):
            external_classifier(fake("dies"), dataset, corpus, QUICK)


class TestReferencePluginEquivalence:
    def test_matches_builtin_predictions(self):
        corpus, dataset = manual_dataset()
        local = train(dataset, corpus, QUICK)
        texts = [
            corpus.song(song_id).lyrics
            for lid in dataset.candidate_lyricists
            for song_id in dataset.splits[lid].test
        ]
        remote = external_classifier(SERVER_CMD, dataset, corpus, QUICK)
        try:
            np.testing.assert_allclose(
                remote.predict_batch(texts), local.predict_batch(texts), rtol=0, atol=1e-12
            )
        finally:
            remote.close()  # clean shutdown; nonzero exit would raise
