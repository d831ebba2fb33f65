"""Minimal single-connection HTTP service over raw TCP sockets.

One accept loop, one request per connection, HTTP/1.0 semantics with
Connection: close.  The header and the body are read under separate
deadlines so the two timeout classes stay distinguishable in the request
log.  Whatever arrives, the loop answers (or times the connection out),
writes exactly one log record, and keeps serving: a failing request must
never take the server down.

By default every error is answered with a generic hints page and status
200, matching the original service's behaviour; ``modern_status`` switches
to proper 4xx codes.
"""

from __future__ import annotations

import json
import socket
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Dict, Optional, Tuple

from .formcodec import FormSyntaxError, bind_fields, build_schema, decode_body
from .model import EstimateError, estimate
from .pages import form_page, render_error, render_result
from .ruleset import Ruleset
from .tables import NoMatchingFact

OUTCOMES = ("ok", "wrong_request", "timeout_header", "timeout_body", "syntax_error")

_MAX_HEADER = 16384
LOG_FIELD_COUNT = 5


@dataclass
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 4322
    header_timeout: float = 10.0
    body_timeout: float = 30.0
    max_body: int = 65536
    log_path: Optional[str] = None
    modern_status: bool = False
    districts_route: bool = False  # GET /districts for form front ends
    form_route: bool = False       # GET / serves the built-in questionnaire

    def __post_init__(self) -> None:
        if self.header_timeout <= 0 or self.body_timeout <= 0:
            raise ValueError("timeouts must be positive")
        if self.max_body < 1:
            raise ValueError("max_body must be at least 1")
        if not (0 <= self.port <= 65535):
            raise ValueError(f"invalid port {self.port}")


@dataclass
class RequestRecord:
    timestamp: datetime
    outcome: str
    peer: str = "anonymous"
    user_agent: str = "-"
    language: str = "-"

    def __post_init__(self) -> None:
        if self.outcome not in OUTCOMES:
            raise ValueError(f"unknown outcome {self.outcome!r}")

    def to_line(self) -> str:
        def clean(text: str) -> str:
            return " ".join(str(text or "-").split()) or "-"

        stamp = self.timestamp.isoformat(timespec="seconds")
        return "\t".join(
            (stamp, self.outcome, clean(self.peer), clean(self.user_agent), clean(self.language))
        )

    @classmethod
    def from_line(cls, line: str) -> "RequestRecord":
        parts = line.rstrip("\n").split("\t")
        if len(parts) != LOG_FIELD_COUNT:
            raise ValueError(f"expected {LOG_FIELD_COUNT} tab-separated fields")
        stamp, outcome, peer, user_agent, language = parts
        return cls(
            timestamp=datetime.fromisoformat(stamp),
            outcome=outcome,
            peer=peer,
            user_agent=user_agent,
            language=language,
        )


@dataclass
class HandleResult:
    status: int
    body: bytes
    outcome: str
    content_type: str = "text/html; charset=iso-8859-1"
    language: str = "-"
    user_agent: str = "-"


def _split_request(raw: bytes) -> Optional[Tuple[str, str, Dict[str, str], bytes]]:
    """Parse method, target, headers, body; None when not even HTTP-shaped."""
    for sep in (b"\r\n\r\n", b"\n\n"):
        if sep in raw:
            head, body = raw.split(sep, 1)
            break
    else:
        head, body = raw, b""
    lines = head.replace(b"\r\n", b"\n").split(b"\n")
    request_line = lines[0].decode("latin-1")
    parts = request_line.split()
    if len(parts) != 3 or not parts[2].startswith("HTTP/"):
        return None
    method, target = parts[0], parts[1]
    headers: Dict[str, str] = {}
    for line in lines[1:]:
        name, sep_, value = line.partition(b":")
        if not sep_:
            continue
        headers[name.decode("latin-1").strip().lower()] = value.decode("latin-1").strip()
    return method, target, headers, body


def handle(raw: bytes, rs: Ruleset, cfg: ServerConfig) -> HandleResult:
    """Process one complete request; never raises.

    Every failure maps to an outcome and the generic error page; the page
    carries status 200 unless ``modern_status`` is set.
    """
    error_status = 400 if cfg.modern_status else 200

    parsed = _split_request(raw)
    if parsed is None:
        return HandleResult(error_status, _latin(render_error()), "wrong_request")
    method, target, headers, body = parsed
    user_agent = headers.get("user-agent", "-")

    if method == "GET":
        if cfg.districts_route and target.split("?")[0] == "/districts":
            payload = json.dumps(
                {"districts": [{"name": n, "category": c} for n, c in rs.districts.items()]}
            ).encode("ascii")
            return HandleResult(
                200, payload, "ok",
                content_type="application/json", user_agent=user_agent,
            )
        if cfg.form_route and target.split("?")[0] in ("/", "/form"):
            return HandleResult(
                200, _latin(form_page(rs)), "ok", user_agent=user_agent
            )
        return HandleResult(
            error_status, _latin(render_error()), "wrong_request", user_agent=user_agent
        )

    if method != "POST":
        return HandleResult(
            error_status, _latin(render_error()), "wrong_request", user_agent=user_agent
        )

    # era clients always announce the body size; anything else is not a
    # form submission we can trust
    content_length = headers.get("content-length", "")
    if not content_length.isdigit() or int(content_length) > cfg.max_body:
        return HandleResult(
            error_status, _latin(render_error()), "wrong_request", user_agent=user_agent
        )
    body = body[: int(content_length)]

    language = "German"
    try:
        fields = decode_body(body)
        bound = bind_fields(fields, build_schema(rs), rs)
        language = bound.language
        est = estimate(bound.answers, rs)
        page = render_result(est, language, extra_warnings=bound.warnings)
        return HandleResult(
            200, _latin(page), "ok", language=language, user_agent=user_agent
        )
    except (FormSyntaxError, EstimateError, NoMatchingFact) as exc:
        return HandleResult(
            error_status, _latin(render_error(language, detail=str(exc))),
            "syntax_error", language=language, user_agent=user_agent,
        )
    except Exception:  # a defect must not kill the loop; answer generically
        return HandleResult(
            error_status, _latin(render_error(language)),
            "wrong_request", language=language, user_agent=user_agent,
        )


def _latin(text: str) -> bytes:
    return text.encode("latin-1", errors="replace")


_REASONS = {200: "OK", 400: "Bad Request"}


def _response_bytes(result: HandleResult) -> bytes:
    head = (
        f"HTTP/1.0 {result.status} {_REASONS.get(result.status, 'OK')}\r\n"
        f"Content-Type: {result.content_type}\r\n"
        f"Content-Length: {len(result.body)}\r\n"
        "Connection: close\r\n\r\n"
    )
    return head.encode("latin-1") + result.body


class Server:
    """Accepts one connection at a time and serves it to completion."""

    def __init__(self, cfg: ServerConfig, ruleset: Ruleset):
        self.cfg = cfg
        self.ruleset = ruleset
        self.port: Optional[int] = None
        self._sock: Optional[socket.socket] = None
        self._stop = threading.Event()
        self._log_handle = None
        self._log_lock = threading.Lock()

    # -- lifecycle ----------------------------------------------------------

    def bind(self) -> int:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind((self.cfg.host, self.cfg.port))
        sock.listen(5)
        sock.settimeout(0.2)  # lets serve_forever poll the stop flag
        self._sock = sock
        self.port = sock.getsockname()[1]
        if self.cfg.log_path:
            self._log_handle = open(self.cfg.log_path, "a", encoding="utf-8")
        return self.port

    def stop(self) -> None:
        self._stop.set()

    def close(self) -> None:
        if self._sock is not None:
            self._sock.close()
            self._sock = None
        if self._log_handle is not None:
            self._log_handle.close()
            self._log_handle = None

    def serve_forever(self) -> None:
        if self._sock is None:
            self.bind()
        try:
            while not self._stop.is_set():
                try:
                    conn, addr = self._sock.accept()
                except socket.timeout:
                    continue
                except OSError:
                    break
                try:
                    record = self._serve_connection(conn, addr)
                finally:
                    try:
                        conn.close()
                    except OSError:
                        pass
                self._write_record(record)
        finally:
            self.close()

    # -- per-connection work --------------------------------------------------

    def _write_record(self, record: RequestRecord) -> None:
        if self._log_handle is None:
            return
        with self._log_lock:
            self._log_handle.write(record.to_line() + "\n")
            self._log_handle.flush()

    def _serve_connection(self, conn: socket.socket, addr) -> RequestRecord:
        peer = addr[0] if addr else "anonymous"
        now = datetime.now(timezone.utc)

        status, head, initial_body = self._read_until_blank_line(conn)
        if status == "timeout":
            # as in the original: a stalled client is cut off without a page
            return RequestRecord(now, "timeout_header", peer)
        if status == "broken":
            self._try_send(conn, HandleResult(
                400 if self.cfg.modern_status else 200,
                _latin(render_error()), "wrong_request",
            ))
            return RequestRecord(now, "wrong_request", peer)

        parsed = _split_request(head + b"\r\n\r\n")
        user_agent = "-"
        body = initial_body
        if parsed is not None:
            method, _target, headers, _ = parsed
            user_agent = headers.get("user-agent", "-")
            content_length = headers.get("content-length", "")
            if method == "POST" and content_length.isdigit():
                need = int(content_length)
                if need <= self.cfg.max_body and len(body) < need:
                    more = self._read_body(conn, need - len(body))
                    if more is None:
                        return RequestRecord(now, "timeout_body", peer, user_agent)
                    body += more
                    if len(body) < need:  # peer hung up short of its own length
                        return RequestRecord(now, "wrong_request", peer, user_agent)

        result = handle(head + b"\r\n\r\n" + body, self.ruleset, self.cfg)
        self._try_send(conn, result)
        return RequestRecord(now, result.outcome, peer, user_agent, result.language)

    @staticmethod
    def _try_send(conn: socket.socket, result: HandleResult) -> None:
        try:
            conn.sendall(_response_bytes(result))
        except OSError:
            pass  # the client went away; the outcome still gets logged

    def _read_until_blank_line(self, conn: socket.socket) -> Tuple[str, bytes, bytes]:
        """Header bytes up to the blank line, plus any body bytes already read.

        The first element is "ok", "timeout" (header deadline passed) or
        "broken" (oversized header, reset, or EOF before the blank line).
        """
        deadline = _now() + self.cfg.header_timeout
        buf = b""
        while True:
            for sep in (b"\r\n\r\n", b"\n\n"):
                if sep in buf:
                    head, leftover = buf.split(sep, 1)
                    return "ok", head, leftover
            if len(buf) > _MAX_HEADER:
                return "broken", b"", b""
            remaining = deadline - _now()
            if remaining <= 0:
                return "timeout", b"", b""
            conn.settimeout(remaining)
            try:
                chunk = conn.recv(4096)
            except socket.timeout:
                return "timeout", b"", b""
            except OSError:
                return "broken", b"", b""
            if not chunk:
                return "broken", b"", b""
            buf += chunk

    def _read_body(self, conn: socket.socket, missing: int) -> Optional[bytes]:
        """Exactly ``missing`` more bytes, or what arrived before EOF; None on timeout."""
        deadline = _now() + self.cfg.body_timeout
        buf = b""
        while len(buf) < missing:
            remaining = deadline - _now()
            if remaining <= 0:
                return None
            conn.settimeout(remaining)
            try:
                chunk = conn.recv(min(65536, missing - len(buf)))
            except socket.timeout:
                return None
            except OSError:
                return buf
            if not chunk:
                return buf
            buf += chunk
        return buf


def serve(cfg: ServerConfig, ruleset: Ruleset) -> None:
    """Run the accept loop until interrupted."""
    server = Server(cfg, ruleset)
    port = server.bind()
    print(f"listening on {cfg.host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.stop()
        server.close()


def _now() -> float:
    return time.monotonic()
