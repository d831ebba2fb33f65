import pathlib
import socket
import threading
from contextlib import contextmanager

import pytest

from rentspan.formcodec import build_schema
from rentspan.ruleset import load_ruleset
from rentspan.server import Server, ServerConfig

SAMPLE_RULESET = (
    pathlib.Path(__file__).resolve().parents[1]
    / "src" / "rentspan" / "data" / "ruleset.sample.json"
)


@pytest.fixture(scope="session")
def rs():
    return load_ruleset(str(SAMPLE_RULESET))


@pytest.fixture(scope="session")
def schema(rs):
    return build_schema(rs)


@contextmanager
def running_server(ruleset, **cfg_kwargs):
    """A live server on an ephemeral port, shut down on exit."""
    cfg_kwargs.setdefault("port", 0)
    cfg = ServerConfig(**cfg_kwargs)
    server = Server(cfg, ruleset)
    port = server.bind()
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield server, port
    finally:
        server.stop()
        thread.join(timeout=10)


def raw_exchange(port, payload: bytes, timeout: float = 5.0, linger: float = 0.0) -> bytes:
    """Send bytes to the server, return whatever comes back until EOF."""
    with socket.create_connection(("127.0.0.1", port), timeout=timeout) as sock:
        if payload:
            sock.sendall(payload)
        if linger:
            import time

            time.sleep(linger)
        sock.settimeout(timeout)
        chunks = []
        while True:
            try:
                chunk = sock.recv(65536)
            except socket.timeout:
                break
            except OSError:
                break
            if not chunk:
                break
            chunks.append(chunk)
        return b"".join(chunks)


def post_body(port, body: bytes, headers: str = "", timeout: float = 5.0) -> bytes:
    request = (
        f"POST / HTTP/1.0\r\n"
        f"Content-Type: application/x-www-form-urlencoded\r\n"
        f"Content-Length: {len(body)}\r\n"
        f"{headers}"
        f"\r\n"
    ).encode("latin-1") + body
    return raw_exchange(port, request, timeout=timeout)
