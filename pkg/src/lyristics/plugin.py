"""Host side of the external-classifier plug-in protocol.

Plug-ins are child processes speaking line-delimited JSON on stdin/stdout,
protocol version 1. Every request is one line; every reply is one line.

    -> {"cmd":"handshake","protocol":1}     <- {"ok":true,"name":...}
    -> {"cmd":"train","candidates":[...],
        "train":[{"label":0,"text":...}],
        "val":[...],"config":{...}}          <- {"ok":true}
    -> {"cmd":"predict","texts":[...]}       <- {"ok":true,"probs":[[...],...]}
    -> {"cmd":"shutdown"}                    <- (child exits 0)

Lines are canonical JSON: keys sorted, no whitespace, one trailing newline.
A reply with "ok" false carries an "error" message. Anything else on stdout
is a protocol violation. Child stderr passes through for logging.
"""

from __future__ import annotations

import json
import math
import queue
import shlex
import subprocess
import threading

import numpy as np

from .classifier import ClassifierConfig, _dataset_texts
from .errors import (
    HandshakeError,
    PluginError,
    PluginExitError,
    PluginTimeoutError,
    ProtocolViolationError,
)

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT = 600.0  # seconds per command


def encode_message(message: dict) -> str:
    """Canonical wire encoding: sorted keys, compact separators, one line."""
    return json.dumps(message, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def decode_message(line: str) -> dict:
    try:
        value = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolViolationError(f"malformed JSON line from plugin: {exc}")
    if not isinstance(value, dict):
        raise ProtocolViolationError(f"plugin line is not a JSON object: {line.strip()[:80]!r}")
    return value


class PluginProcess:
    """One plug-in child process plus a reader thread for timeouts."""

    def __init__(self, command, timeout: float = DEFAULT_TIMEOUT):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        self.timeout = timeout
        self.name: str | None = None
        try:
            self.proc = subprocess.Popen(
                self.argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=None,  # inherit: plugin logs go to our stderr
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise HandshakeError(f"cannot spawn plugin {self.argv[0]!r}: {exc}")
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()

    def _pump(self):
        for line in self.proc.stdout:
            self._lines.put(line)
        self._lines.put(None)  # EOF sentinel

    def _read_reply(self, timeout: float | None) -> dict:
        try:
            line = self._lines.get(timeout=timeout if timeout else self.timeout)
        except queue.Empty:
            self.close(force=True)
            raise PluginTimeoutError(
                f"plugin {self.argv[0]!r} gave no reply within {timeout or self.timeout:.0f}s"
            )
        if line is None:
            code = self.proc.wait()
            raise PluginExitError(f"plugin {self.argv[0]!r} exited with code {code} mid-protocol")
        return decode_message(line)

    def request(self, message: dict, timeout: float | None = None) -> dict:
        """Send one command line and wait for its reply line."""
        if self.proc.poll() is not None:
            raise PluginExitError(
                f"plugin {self.argv[0]!r} already exited with code {self.proc.returncode}"
            )
        try:
            self.proc.stdin.write(encode_message(message))
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            code = self.proc.wait()
            raise PluginExitError(f"plugin {self.argv[0]!r} closed stdin (exit code {code})")
        reply = self._read_reply(timeout)
        if "ok" not in reply:
            raise ProtocolViolationError(f"plugin reply lacks 'ok' field: {reply!r}")
        if reply["ok"] is not True:
            raise PluginError(str(reply.get("error", "plugin reported failure")))
        return reply

    def handshake(self) -> dict:
        try:
            reply = self.request({"cmd": "handshake", "protocol": PROTOCOL_VERSION})
        except (PluginError, ProtocolViolationError) as exc:
            raise HandshakeError(f"handshake failed: {exc}")
        if "protocol" in reply and reply["protocol"] != PROTOCOL_VERSION:
            raise HandshakeError(f"plugin speaks protocol {reply['protocol']}, need {PROTOCOL_VERSION}")
        self.name = reply.get("name")
        return reply

    def shutdown(self, timeout: float = 30.0) -> int:
        """Ask the child to exit; returns its exit code."""
        if self.proc.poll() is None:
            try:
                self.proc.stdin.write(encode_message({"cmd": "shutdown"}))
                self.proc.stdin.flush()
                self.proc.stdin.close()
            except (BrokenPipeError, OSError):
                pass
            try:
                self.proc.wait(timeout=timeout)
            except subprocess.TimeoutExpired:
                self.close(force=True)
                raise PluginTimeoutError(f"plugin {self.argv[0]!r} ignored shutdown for {timeout:.0f}s")
        if self.proc.returncode != 0:
            raise PluginExitError(
                f"plugin {self.argv[0]!r} exited with code {self.proc.returncode} on shutdown"
            )
        return self.proc.returncode

    def close(self, force: bool = False) -> None:
        if self.proc.poll() is None:
            if force:
                self.proc.kill()
            else:
                self.proc.terminate()
            try:
                self.proc.wait(timeout=5)
            except subprocess.TimeoutExpired:
                self.proc.kill()
                self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close(force=True)


class ExternalModel:
    """Handle over a trained plug-in; drop-in for TrainedModel prediction."""

    def __init__(self, process: PluginProcess, candidates):
        self.process = process
        self.candidates = tuple(candidates)

    def predict_batch(self, texts) -> np.ndarray:
        texts = list(texts)
        reply = self.process.request({"cmd": "predict", "texts": texts})
        probs = reply.get("probs")
        if not isinstance(probs, list) or len(probs) != len(texts):
            raise ProtocolViolationError(
                f"predict reply needs {len(texts)} probability rows, got {type(probs).__name__}"
            )
        k = len(self.candidates)
        for i, row in enumerate(probs):
            if not isinstance(row, list) or len(row) != k:
                raise ProtocolViolationError(f"probability row {i} is not a list of {k} floats")
            total = 0.0
            for p in row:
                if not isinstance(p, (int, float)) or not math.isfinite(p) or p < 0:
                    raise ProtocolViolationError(f"probability row {i} has invalid entry {p!r}")
                total += p
            if abs(total - 1.0) > 1e-6:
                raise ProtocolViolationError(f"probability row {i} sums to {total!r}, not 1")
        return np.asarray(probs, dtype=np.float64)

    def predict(self, lyrics: str) -> np.ndarray:
        return self.predict_batch([lyrics])[0]

    def close(self) -> None:
        self.process.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.process.close(force=True)


def external_classifier(
    command,
    dataset,
    corpus,
    config: ClassifierConfig | dict | None = None,
    timeout: float = DEFAULT_TIMEOUT,
) -> ExternalModel:
    """Spawn a plug-in, train it on the dataset, return a prediction handle.

    The config dict is passed through opaquely; plug-ins apply their own
    optimizer settings but must honor max_tokens and patience_events.
    """
    if isinstance(config, ClassifierConfig):
        config = config.to_dict()
    config = config or ClassifierConfig().to_dict()
    train_texts, train_labels = _dataset_texts(dataset, corpus, "train")
    val_texts, val_labels = _dataset_texts(dataset, corpus, "val")
    process = PluginProcess(command, timeout=timeout)
    try:
        process.handshake()
        process.request(
            {
                "cmd": "train",
                "candidates": list(dataset.candidate_lyricists),
                "train": [
                    {"label": lab, "text": txt} for lab, txt in zip(train_labels, train_texts)
                ],
                "val": [{"label": lab, "text": txt} for lab, txt in zip(val_labels, val_texts)],
                "config": config,
            }
        )
    except Exception:
        process.close(force=True)
        raise
    return ExternalModel(process, dataset.candidate_lyricists)


def _has_wildcard(value) -> bool:
    if value == "*":
        return True
    if isinstance(value, dict):
        return any(_has_wildcard(v) for v in value.values())
    if isinstance(value, list):
        return any(_has_wildcard(v) for v in value)
    return False


def _matches(expected, actual) -> bool:
    if expected == "*":
        return True
    if isinstance(expected, dict):
        return (
            isinstance(actual, dict)
            and expected.keys() == actual.keys()
            and all(_matches(v, actual[k]) for k, v in expected.items())
        )
    if isinstance(expected, list):
        return (
            isinstance(actual, list)
            and len(expected) == len(actual)
            and all(_matches(e, a) for e, a in zip(expected, actual))
        )
    return expected == actual


def run_transcript(command, transcript_path, timeout: float = 60.0) -> None:
    """Drive a plug-in through a golden transcript; AssertionError on drift.

    Transcript files hold one JSON step per line:
      {"send": {...}}        write this command
      {"expect": {...}}      read one reply; "*" values match anything;
                             wildcard-free expectations must match byte-wise
      {"expect_exit": 0}     child must exit with this code

    Every reply line must equal the canonical encoding of its own parsed
    value, so conforming plug-ins are byte-compatible, not just JSON-equal.
    """
    with open(transcript_path, "r", encoding="utf-8") as fh:
        steps = [json.loads(line) for line in fh if line.strip()]
    process = PluginProcess(command, timeout=timeout)
    try:
        for step in steps:
            if "send" in step:
                process.proc.stdin.write(encode_message(step["send"]))
                process.proc.stdin.flush()
            elif "expect" in step:
                expected = step["expect"]
                try:
                    line = process._lines.get(timeout=timeout)
                except queue.Empty:
                    raise AssertionError(f"no reply within {timeout:.0f}s; expected {expected!r}")
                if line is None:
                    raise AssertionError(f"plugin exited; expected reply {expected!r}")
                actual = decode_message(line)
                if line != encode_message(actual):
                    raise AssertionError(f"reply is not canonical JSON: {line!r}")
                if _has_wildcard(expected):
                    if not _matches(expected, actual):
                        raise AssertionError(f"reply {actual!r} does not match {expected!r}")
                elif line != encode_message(expected):
                    raise AssertionError(f"reply {line!r} != expected bytes {encode_message(expected)!r}")
            elif "expect_exit" in step:
                try:
                    process.proc.stdin.close()
                except OSError:
                    pass
                try:
                    code = process.proc.wait(timeout=timeout)
                except subprocess.TimeoutExpired:
                    raise AssertionError(f"plugin did not exit within {timeout:.0f}s")
                if code != step["expect_exit"]:
                    raise AssertionError(f"plugin exited {code}, expected {step['expect_exit']}")
            else:
                raise ValueError(f"bad transcript step: {step!r}")
    finally:
        process.close(force=True)
