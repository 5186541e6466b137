"""Fake plugin: replies lack the mandatory ok field after the handshake."""

import json
import sys


def emit(message):
    sys.stdout.write(json.dumps(message, sort_keys=True, separators=(",", ":")) + "\n")
    sys.stdout.flush()


for line in sys.stdin:
    message = json.loads(line)
    cmd = message.get("cmd")
    if cmd == "handshake":
        emit({"name": "missing-ok", "ok": True})
    elif cmd == "shutdown":
        sys.exit(0)
    else:
        emit({"done": True})
