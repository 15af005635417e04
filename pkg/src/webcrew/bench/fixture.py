"""Deterministic static HTTP server for the shipped fixture corpus.

Serves files under a corpus directory with stable bytes and content-hash
ETags, so integration runs see identical responses every time.  A file
named ``<path>.302`` holds a redirect target for that path, which lets the
corpus exercise redirect-following deterministically.
"""

from __future__ import annotations

import hashlib
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from ..errors import BindError

_CONTENT_TYPES = {
    ".html": "text/html",
    ".htm": "text/html",
    ".json": "application/json",
    ".csv": "text/csv",
    ".txt": "text/plain",
    ".bib": "text/plain",
    ".pdf": "application/pdf",
    ".js": "text/javascript",
    ".css": "text/css",
}


def _make_handler(corpus_dir: Path):
    corpus_dir = corpus_dir.resolve()

    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"

        def log_message(self, *args):  # keep test output quiet
            pass

        def _resolve(self, url_path: str) -> Path | None:
            path = url_path.split("?", 1)[0].split("#", 1)[0]
            path = path.lstrip("/")
            if not path:
                path = "index.html"
            candidate = (corpus_dir / path).resolve()
            if corpus_dir not in candidate.parents and candidate != corpus_dir:
                return None  # traversal attempt
            if candidate.is_dir():
                candidate = candidate / "index.html"
            return candidate

        def _respond(self, include_body: bool) -> None:
            candidate = self._resolve(self.path)
            redirect = None
            if candidate is not None:
                marker = candidate.with_name(candidate.name + ".302")
                if marker.is_file():
                    redirect = marker.read_text(encoding="utf-8").strip()
            if redirect:
                self.send_response_only(302)
                self.send_header("Location", redirect)
                self.send_header("Content-Length", "0")
                self.end_headers()
                return
            if candidate is None or not candidate.is_file():
                body = b"not found\n"
                self.send_response_only(404)
                self.send_header("Content-Type", "text/plain")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                if include_body:
                    self.wfile.write(body)
                return
            data = candidate.read_bytes()
            etag = '"' + hashlib.sha256(data).hexdigest()[:16] + '"'
            self.send_response_only(200)
            self.send_header(
                "Content-Type", _CONTENT_TYPES.get(candidate.suffix, "application/octet-stream")
            )
            self.send_header("Content-Length", str(len(data)))
            self.send_header("ETag", etag)
            self.end_headers()
            if include_body:
                self.wfile.write(data)

        def do_GET(self):
            self._respond(include_body=True)

        def do_HEAD(self):
            self._respond(include_body=False)

    return Handler


class FixtureServer:
    """Threaded static server handle: ``start()``, ``stop()``, ``base_url``."""

    def __init__(self, corpus_dir: str | Path, port: int = 0, host: str = "127.0.0.1"):
        self.corpus_dir = Path(corpus_dir)
        if not self.corpus_dir.is_dir():
            raise BindError(f"corpus directory not found: {self.corpus_dir}")
        try:
            self._server = ThreadingHTTPServer((host, port), _make_handler(self.corpus_dir))
        except OSError as exc:
            raise BindError(f"cannot bind {host}:{port}: {exc}") from exc
        self._thread: threading.Thread | None = None

    @property
    def host(self) -> str:
        return self._server.server_address[0]

    @property
    def port(self) -> int:
        return self._server.server_address[1]

    @property
    def base_url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self) -> "FixtureServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)
            self._thread = None

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def __enter__(self) -> "FixtureServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve_fixture(corpus_dir: str | Path, port: int = 0, host: str = "127.0.0.1") -> FixtureServer:
    """Start the fixture server in a background thread and return its handle."""
    return FixtureServer(corpus_dir, port=port, host=host).start()


def free_port(host: str = "127.0.0.1") -> int:
    with socket.socket() as s:
        s.bind((host, 0))
        return s.getsockname()[1]
