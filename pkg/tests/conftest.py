from __future__ import annotations

import http.server
import threading

import pytest


class _CannedHandler(http.server.BaseHTTPRequestHandler):
    """Serves the routes dict placed on the server instance.

    Route values: (status, headers, body_bytes). POST bodies are recorded
    on server.posts for assertions.
    """

    def _respond(self):
        routes = self.server.routes  # type: ignore[attr-defined]
        entry = routes.get(self.path)
        if entry is None:
            self.send_response(404)
            self.end_headers()
            return
        status, headers, body = entry
        self.send_response(status)
        for key, value in headers.items():
            self.send_header(key, value)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        self._respond()

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        self.server.posts.append(self.rfile.read(length))  # type: ignore[attr-defined]
        self._respond()

    def log_message(self, *args):
        pass


class LocalServer:
    def __init__(self):
        self.httpd = http.server.ThreadingHTTPServer(("127.0.0.1", 0), _CannedHandler)
        self.httpd.routes = {}
        self.httpd.posts = []
        self.thread = threading.Thread(target=self.httpd.serve_forever, daemon=True)
        self.thread.start()

    @property
    def routes(self) -> dict:
        return self.httpd.routes

    @property
    def posts(self) -> list:
        return self.httpd.posts

    def url(self, path: str) -> str:
        host, port = self.httpd.server_address
        return f"http://{host}:{port}{path}"

    def close(self):
        self.httpd.shutdown()
        self.httpd.server_close()


@pytest.fixture
def local_server():
    server = LocalServer()
    yield server
    server.close()
