import random
import socket
import time
from datetime import datetime, timezone

import pytest

from rentspan.server import (
    HandleResult,
    RequestRecord,
    ServerConfig,
    handle,
)

from conftest import post_body, raw_exchange, running_server


CFG = ServerConfig(port=0, header_timeout=1.0, body_timeout=1.0)


def make_post(body: bytes, extra_headers: str = "") -> bytes:
    return (
        f"POST / HTTP/1.0\r\nContent-Length: {len(body)}\r\n{extra_headers}\r\n"
    ).encode("latin-1") + body


# -- handle(): the pure request processor ------------------------------------


def test_handle_valid_post(rs):
    result = handle(make_post(b"M2_min=76&M2_max=85"), rs, CFG)
    assert (result.status, result.outcome) == (200, "ok")
    assert b"<!-- RENT " in result.body


def test_handle_empty_form_gives_global_interval(rs):
    result = handle(make_post(b""), rs, CFG)
    assert result.outcome == "ok"
    assert b"83,75" in result.body and b"4312,68" in result.body


def test_handle_language_field_switches_rendering(rs):
    result = handle(make_post(b"Language=English"), rs, CFG)
    assert b"83.75" in result.body and result.language == "English"


def test_handle_get_is_wrong_request(rs):
    result = handle(b"GET / HTTP/1.0\r\n\r\n", rs, CFG)
    assert result.outcome == "wrong_request"
    assert result.status == 200  # era behaviour: error page, not error status


def test_handle_garbage_is_wrong_request(rs):
    result = handle(b"\x00\x17garbage\xff\xfe", rs, CFG)
    assert result.outcome == "wrong_request"


def test_handle_syntax_error_body(rs):
    result = handle(make_post(b"ZI_min=abc"), rs, CFG)
    assert result.outcome == "syntax_error"


def test_handle_post_without_content_length(rs):
    result = handle(b"POST / HTTP/1.0\r\n\r\nM2_min=50", rs, CFG)
    assert result.outcome == "wrong_request"


def test_handle_content_length_over_limit(rs):
    small = ServerConfig(port=0, max_body=10)
    boundary = handle(make_post(b"a" * 10), rs, small)
    assert boundary.outcome == "ok"  # exactly at the limit still processes
    too_big = handle(make_post(b"a" * 11), rs, small)
    assert too_big.outcome == "wrong_request"


def test_handle_modern_status_flag(rs):
    modern = ServerConfig(port=0, modern_status=True)
    assert handle(b"GET / HTTP/1.0\r\n\r\n", rs, modern).status == 400


def test_handle_districts_route(rs):
    cfg = ServerConfig(port=0, districts_route=True)
    result = handle(b"GET /districts HTTP/1.0\r\n\r\n", rs, cfg)
    assert result.outcome == "ok"
    assert result.content_type == "application/json"
    assert b"Bogenhausen" in result.body
    # and stays off by default
    assert handle(b"GET /districts HTTP/1.0\r\n\r\n", rs, CFG).outcome == "wrong_request"


def test_handle_form_route(rs):
    cfg = ServerConfig(port=0, form_route=True)
    result = handle(b"GET / HTTP/1.0\r\n\r\n", rs, cfg)
    assert result.outcome == "ok"
    assert b"<FORM METHOD=\"POST\"" in result.body


# -- the socket loop -----------------------------------------------------------


def read_log(path):
    with open(path, encoding="utf-8") as fh:
        return [RequestRecord.from_line(line) for line in fh if line.strip()]


def test_server_round_trip_and_log(rs, tmp_path):
    log = tmp_path / "requests.log"
    with running_server(rs, log_path=str(log)) as (_server, port):
        response = post_body(port, b"M2_min=76&M2_max=85",
                             headers="User-Agent: Mozilla/3.0 (X11; SunOS 5.5)\r\n")
        assert response.startswith(b"HTTP/1.0 200 OK\r\n")
        assert b"<!-- RENT " in response
        # a failure must not stop the loop
        assert raw_exchange(port, b"\xde\xad\xbe\xef\r\n\r\n") != b""
        response = post_body(port, b"")
        assert b"83,75" in response
    records = read_log(log)
    assert [r.outcome for r in records] == ["ok", "wrong_request", "ok"]
    assert records[0].user_agent.startswith("Mozilla/3.0")
    assert records[0].peer == "127.0.0.1"


def test_header_timeout_closes_without_response(rs, tmp_path):
    log = tmp_path / "requests.log"
    with running_server(rs, log_path=str(log), header_timeout=0.2) as (_server, port):
        with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
            sock.sendall(b"POST / HT")  # stall mid request line
            sock.settimeout(5)
            assert sock.recv(1024) == b""  # server just hangs up
        time.sleep(0.05)
    assert [r.outcome for r in read_log(log)] == ["timeout_header"]


def test_body_timeout(rs, tmp_path):
    log = tmp_path / "requests.log"
    with running_server(rs, log_path=str(log), body_timeout=0.2) as (_server, port):
        with socket.create_connection(("127.0.0.1", port), timeout=5) as sock:
            sock.sendall(b"POST / HTTP/1.0\r\nContent-Length: 50\r\n\r\nM2_min=76")
            sock.settimeout(5)
            assert sock.recv(1024) == b""
        time.sleep(0.05)
    assert [r.outcome for r in read_log(log)] == ["timeout_body"]


def test_oversize_content_length_is_wrong_request(rs, tmp_path):
    log = tmp_path / "requests.log"
    with running_server(rs, log_path=str(log), max_body=64) as (_server, port):
        response = raw_exchange(
            port, b"POST / HTTP/1.0\r\nContent-Length: 100000\r\n\r\n"
        )
        assert b"200 OK" in response  # generic error page
    assert [r.outcome for r in read_log(log)] == ["wrong_request"]


def test_mini_fuzz_never_kills_the_server(rs, tmp_path):
    rng = random.Random(5)
    log = tmp_path / "requests.log"
    with running_server(
        rs, log_path=str(log), header_timeout=0.3, body_timeout=0.3
    ) as (_server, port):
        for _ in range(150):
            blob = bytes(rng.randrange(256) for _ in range(rng.randrange(0, 120)))
            raw_exchange(port, blob + b"\r\n\r\n", timeout=3)
        # still serving correct requests afterwards
        assert b"<!-- RENT " in post_body(port, b"ZI_min=2&ZI_max=3")
    records = read_log(log)
    assert len(records) == 151
    assert records[-1].outcome == "ok"


def test_request_record_round_trip():
    record = RequestRecord(
        timestamp=datetime(1996, 2, 5, 12, 30, tzinfo=timezone.utc),
        outcome="ok",
        peer="borabora.pms.informatik.uni-muenchen.de",
        user_agent="Mozilla/3.0 (X11; SunOS 5.5)",
        language="German",
    )
    again = RequestRecord.from_line(record.to_line())
    assert again == record


def test_request_record_rejects_unknown_outcome():
    with pytest.raises(ValueError):
        RequestRecord(timestamp=datetime.now(timezone.utc), outcome="exploded")


def test_config_validation():
    with pytest.raises(ValueError):
        ServerConfig(header_timeout=0)
    with pytest.raises(ValueError):
        ServerConfig(max_body=0)
    with pytest.raises(ValueError):
        ServerConfig(port=70000)
