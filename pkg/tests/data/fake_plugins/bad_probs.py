"""Fake plugin: well-formed protocol but probability rows that sum short."""

import json
import sys


def emit(message):
    sys.stdout.write(json.dumps(message, sort_keys=True, separators=(",", ":")) + "\n")
    sys.stdout.flush()


k = 2
for line in sys.stdin:
    message = json.loads(line)
    cmd = message.get("cmd")
    if cmd == "handshake":
        emit({"name": "bad-probs", "ok": True})
    elif cmd == "train":
        k = len(message["candidates"])
        emit({"ok": True})
    elif cmd == "predict":
        rows = [[1.0 / (k + 1)] * k for _ in message["texts"]]
        emit({"ok": True, "probs": rows})
    elif cmd == "shutdown":
        sys.exit(0)
