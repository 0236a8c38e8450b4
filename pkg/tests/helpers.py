"""Fixture builders shared by the test modules."""

from __future__ import annotations

import json
import re
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from cascade_st.audio import CANONICAL_RATE, AudioClip, save_wav, tone

GOLDEN = Path(__file__).parent / "data" / "golden"


def tone_silence(pattern, rate=CANONICAL_RATE, freq=440.0, amplitude=0.5) -> AudioClip:
    """``pattern`` is a list of ("tone" | "silence", seconds)."""
    parts = []
    for kind, secs in pattern:
        if kind == "tone":
            parts.append(tone(freq, secs, rate, amplitude))
        else:
            parts.append(np.zeros(int(round(secs * rate))))
    return AudioClip(np.concatenate(parts), rate)


def write_tone_silence(path, pattern, **kw) -> Path:
    save_wav(path, tone_silence(pattern, **kw))
    return Path(path)


def write_jsonl(path, rows) -> Path:
    Path(path).write_text("".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows), encoding="utf-8")
    return Path(path)


# tone/silence layout of the golden fixture; alignment rows line up with the tones
GOLDEN_PATTERN = [("tone", 1.5), ("silence", 1.0), ("tone", 1.5), ("silence", 1.0), ("tone", 2.0),
                  ("silence", 1.0), ("tone", 1.0), ("silence", 1.0), ("tone", 1.0), ("silence", 0.5)]


def dominant_frequency(samples: np.ndarray, rate: int) -> tuple[float, float]:
    """Peak rFFT bin frequency and the bin width."""
    spec = np.abs(np.fft.rfft(samples))
    k = int(np.argmax(spec))
    return k * rate / len(samples), rate / len(samples)


# ------------------------------------------------------------- mock HTTP server

CANDIDATE_RE = re.compile(r"Candidate text:\n(.*?)\n\nDecide", re.DOTALL)


def chat_reply(content: str) -> tuple[int, str, bytes]:
    body = {"choices": [{"index": 0, "message": {"role": "assistant", "content": content}}]}
    return 200, "application/json", json.dumps(body).encode()


class MockModelServer:
    """Threaded HTTP server; ``routes[path]`` maps a parsed JSON body to (status, content-type, bytes)."""

    def __init__(self):
        self.routes = {}
        self.calls = []
        self.delay_s = 0.0
        server = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                n = int(self.headers.get("Content-Length", 0))
                raw = self.rfile.read(n)
                try:
                    body = json.loads(raw)
                except ValueError:
                    body = None
                server.calls.append((self.path, body))
                if server.delay_s:
                    time.sleep(server.delay_s)
                handler = server.routes.get(self.path)
                if handler is None:
                    status, ctype, payload = 404, "text/plain", b"no route"
                else:
                    status, ctype, payload = handler(body)
                try:
                    self.send_response(status)
                    self.send_header("Content-Type", ctype)
                    self.send_header("Content-Length", str(len(payload)))
                    self.end_headers()
                    self.wfile.write(payload)
                except (BrokenPipeError, ConnectionResetError):
                    pass

            def log_message(self, *args):
                pass

        self.httpd = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.httpd.daemon_threads = True
        self.thread = threading.Thread(target=self.httpd.serve_forever, kwargs={"poll_interval": 0.02},
                                       daemon=True)

    @property
    def url(self) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self.thread.start()
        return self

    def __exit__(self, *exc):
        self.httpd.shutdown()
        self.httpd.server_close()
