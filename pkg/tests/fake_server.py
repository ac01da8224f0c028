"""Local OpenAI-compatible endpoint for client tests."""

import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


class FakeEndpoint:
    """Echoes ``reply`` (or ``reply_fn(prompt)``) as a chat completion.

    ``fail_first`` makes each distinct prompt fail that many times with 503
    before succeeding. Tracks attempts per prompt and peak concurrency.
    """

    def __init__(self, reply="{}", reply_fn=None, fail_first=0, delay=0.0, status=None):
        self.reply = reply
        self.reply_fn = reply_fn
        self.fail_first = fail_first
        self.delay = delay
        self.status = status
        self.attempts = {}
        self.in_flight = 0
        self.peak = 0
        self.requests = 0
        self.bodies = []
        self._lock = threading.Lock()
        self.server = ThreadingHTTPServer(("127.0.0.1", 0), self._handler())
        self.server.daemon_threads = True
        self.thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def url(self):
        return f"http://127.0.0.1:{self.server.server_address[1]}/v1"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.server.shutdown()
        self.server.server_close()

    def _handler(self):
        fake = self

        class Handler(BaseHTTPRequestHandler):
            def log_message(self, *args):
                pass

            def do_POST(self):
                body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
                prompt = body["messages"][0]["content"]
                with fake._lock:
                    fake.requests += 1
                    fake.bodies.append(body)
                    fake.in_flight += 1
                    fake.peak = max(fake.peak, fake.in_flight)
                    n = fake.attempts[prompt] = fake.attempts.get(prompt, 0) + 1
                try:
                    if fake.delay:
                        time.sleep(fake.delay)
                    if fake.status is not None:
                        return self._send(fake.status, {"error": "nope"})
                    if n <= fake.fail_first:
                        return self._send(503, {"error": "overloaded"})
                    text = fake.reply_fn(prompt) if fake.reply_fn else fake.reply
                    self._send(200, {"choices": [{"index": 0, "message": {"role": "assistant", "content": text}}]})
                finally:
                    with fake._lock:
                        fake.in_flight -= 1

            def _send(self, code, payload):
                data = json.dumps(payload).encode()
                self.send_response(code)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

        return Handler
