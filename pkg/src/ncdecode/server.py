"""Mock scorer server: serves the wire protocol backed by local model files.

Used for protocol conformance testing without any external scorer process.
Each connection is one session; requests are answered strictly in order, and
concurrent sessions are isolated (thread per connection).
"""

import json
import logging
import socketserver
import threading

from .errors import RemoteScorerError
from .scorers import load_model
from .wire import evaluate_request

log = logging.getLogger(__name__)


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            line = raw.decode("utf-8", errors="replace").strip()
            if not line:
                continue
            response = self._answer(line)
            self.wfile.write(json.dumps(response, sort_keys=True).encode("utf-8"))
            self.wfile.write(b"\n")
            self.wfile.flush()

    def _answer(self, line):
        request_id = None
        try:
            obj = json.loads(line)
            if isinstance(obj, dict):
                rid = obj.get("id")
                request_id = rid if isinstance(rid, str) else None
            else:
                raise ValueError("request must be a JSON object")
            return evaluate_request(obj, self.server.scorers)
        except RemoteScorerError as exc:
            return {"id": exc.request_id or request_id, "error": str(exc)}
        except Exception as exc:
            return {"id": request_id, "error": "%s: %s" % (type(exc).__name__, exc)}


class ScorerServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, scorers):
        super().__init__(address, _Handler)
        self.scorers = scorers


def serve_models(model_paths, host="127.0.0.1", port=0, vocab=None):
    """Load model files (role read from each) and return a bound server."""
    scorers = {}
    for path in model_paths:
        scorer = load_model(path, vocab)
        scorers[scorer.role] = scorer
    server = ScorerServer((host, port), scorers)
    return server


def start_in_thread(server):
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return thread
