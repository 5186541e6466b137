"""Reference plug-in: serves the built-in classifier over protocol v1.

Run as `python -m lyristics.plugin_server`. Intended both as a working
`--classifier plugin:...` target and as the conformance baseline for the
golden transcripts: replies are canonical JSON lines.
"""

from __future__ import annotations

import json
import sys

from .classifier import ClassifierConfig, TrainedModel, train_texts_labels
from .errors import LyristicsError

SERVER_NAME = "lyristics-builtin"

# config keys the built-in model understands; the rest of the opaque
# pass-through config is ignored rather than rejected
_KNOWN_CONFIG_KEYS = {
    "max_tokens",
    "max_epochs",
    "patience_events",
    "patience_mode",
    "learning_rate",
    "l2_penalty",
    "word_unigrams",
    "char_ngrams",
    "rng_seed",
    "halve_lr_on_increase",
}


def _emit(stream, message: dict) -> None:
    stream.write(json.dumps(message, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n")
    stream.flush()


def _config_from(message: dict) -> ClassifierConfig:
    raw = message.get("config") or {}
    kwargs = {k: v for k, v in raw.items() if k in _KNOWN_CONFIG_KEYS}
    if "char_ngrams" in kwargs:
        kwargs["char_ngrams"] = tuple(kwargs["char_ngrams"])
    return ClassifierConfig(**kwargs)


def serve(stdin=None, stdout=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    model: TrainedModel | None = None
    for line in stdin:
        if not line.strip():
            continue
        try:
            message = json.loads(line)
        except json.JSONDecodeError:
            _emit(stdout, {"ok": False, "error": "malformed JSON line"})
            return 3
        if not isinstance(message, dict):
            _emit(stdout, {"ok": False, "error": "message is not a JSON object"})
            return 3
        cmd = message.get("cmd")
        if cmd == "handshake":
            if message.get("protocol") != 1:
                _emit(stdout, {"ok": False, "error": f"unsupported protocol {message.get('protocol')!r}"})
                return 3
            _emit(stdout, {"name": SERVER_NAME, "ok": True})
        elif cmd == "train":
            try:
                candidates = message["candidates"]
                train_pairs = message["train"]
                val_pairs = message["val"]
                model = train_texts_labels(
                    candidates,
                    [p["text"] for p in train_pairs],
                    [p["label"] for p in train_pairs],
                    [p["text"] for p in val_pairs],
                    [p["label"] for p in val_pairs],
                    _config_from(message),
                )
            except (KeyError, TypeError) as exc:
                _emit(stdout, {"ok": False, "error": f"bad train message: {exc}"})
                continue
            except LyristicsError as exc:
                _emit(stdout, {"ok": False, "error": str(exc)})
                continue
            _emit(stdout, {"ok": True})
        elif cmd == "predict":
            if model is None:
                _emit(stdout, {"ok": False, "error": "predict before train"})
                continue
            texts = message.get("texts")
            if not isinstance(texts, list):
                _emit(stdout, {"ok": False, "error": "predict needs a list of texts"})
                continue
            probs = model.predict_batch(texts)
            _emit(stdout, {"ok": True, "probs": [[float(p) for p in row] for row in probs]})
        elif cmd == "shutdown":
            return 0
        else:
            _emit(stdout, {"ok": False, "error": f"unknown cmd {cmd!r}"})
    return 0


if __name__ == "__main__":
    sys.exit(serve())
