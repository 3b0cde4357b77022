from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from malcdf.agents import ScriptedProvider
from malcdf.fixtures import load_fixture


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    reports = []
    for key in ("passed", "failed", "error"):
        reports.extend(terminalreporter.stats.get(key, ()))
    acceptance = [r for r in reports
                  if getattr(r, "when", "call") == "call" and "test_acceptance" in r.nodeid]
    if not acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for r in acceptance:
        verdict = "PASS" if r.passed else "FAIL"
        terminalreporter.write_line(f"{verdict}  {r.nodeid.split('::')[-1]}")


@pytest.fixture(scope="session")
def paper_bundle():
    return load_fixture("paper")


@pytest.fixture(scope="session")
def scripted_provider(paper_bundle):
    return ScriptedProvider(paper_bundle.scripted)


class StubEndpoint:
    """Local HTTP stub standing in for a hosted-model endpoint."""

    def __init__(self, behavior: str = "ok", delay_s: float = 0.0):
        self.request_count = 0
        behavior_ref = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                behavior_ref.request_count += 1
                length = int(self.headers.get("Content-Length", 0))
                self.rfile.read(length)
                if delay_s:
                    import time

                    time.sleep(delay_s)
                if behavior == "error":
                    self.send_response(500)
                    self.end_headers()
                    return
                if behavior == "garbage":
                    body = json.dumps(
                        {"choices": [{"message": {"content": "not json at all"}}]}
                    ).encode()
                else:  # echo a fixed benign verdict
                    content = json.dumps(
                        {
                            "is_attack": False,
                            "threat_type": "BENIGN",
                            "severity": "LOW",
                            "confidence": 0.8,
                            "rationale": "tcp port traffic nominal",
                        }
                    )
                    body = json.dumps(
                        {"choices": [{"message": {"content": content}}]}
                    ).encode()
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(body)))
                self.end_headers()
                self.wfile.write(body)

            def log_message(self, *args):
                pass

        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self.url = f"http://127.0.0.1:{self._server.server_port}/v1/chat/completions"
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()

    def close(self):
        self._server.shutdown()
        self._server.server_close()


@pytest.fixture
def stub_endpoint_factory():
    stubs = []

    def make(behavior: str = "ok", delay_s: float = 0.0) -> StubEndpoint:
        stub = StubEndpoint(behavior, delay_s)
        stubs.append(stub)
        return stub

    yield make
    for stub in stubs:
        stub.close()
