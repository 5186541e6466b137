"""Fake plugin: claims an incompatible protocol version in the handshake."""

import json
import sys

for line in sys.stdin:
    message = json.loads(line)
    if message.get("cmd") == "handshake":
        reply = {"name": "wrong-protocol", "ok": True, "protocol": 2}
        sys.stdout.write(json.dumps(reply, sort_keys=True, separators=(",", ":")) + "\n")
        sys.stdout.flush()
    else:
        sys.exit(0)
