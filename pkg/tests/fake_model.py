"""A tiny chat-completions server for tests.

Answers from a fixture directory keyed like FixtureBackend, and can be told to
fail the first few requests or to report truncation.
"""

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from decomp_refine.backend import request_hash


class FakeModel:
    def __init__(self, fixtures_dir=None, fail_first=0, fail_status=503, finish_reason="stop", reply="ok"):
        self.fixtures_dir = Path(fixtures_dir) if fixtures_dir else None
        self.fail_first = fail_first
        self.fail_status = fail_status
        self.finish_reason = finish_reason
        self.reply = reply
        self.requests: list[dict] = []
        self.headers: list[dict] = []
        self._lock = threading.Lock()
        owner = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *a):
                pass

            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                with owner._lock:
                    owner.requests.append(body)
                    owner.headers.append(dict(self.headers))
                    n = len(owner.requests)
                if n <= owner.fail_first:
                    self._send(owner.fail_status, {"error": "busy"})
                    return
                user = body["messages"][-1]["content"]
                text = owner.reply
                if owner.fixtures_dir is not None:
                    path = owner.fixtures_dir / f"{request_hash(user)}.txt"
                    if not path.exists():
                        self._send(404, {"error": "unknown prompt"})
                        return
                    text = path.read_text()
                self._send(200, {"choices": [{"message": {"role": "assistant", "content": text},
                                              "finish_reason": owner.finish_reason}]})

            def _send(self, status, obj):
                data = json.dumps(obj).encode()
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        self.server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self.server.server_address[1]}/v1/chat/completions"
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()
