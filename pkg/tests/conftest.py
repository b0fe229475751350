import threading

import pytest

from quiclearn.harness import SULServer

ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[ACCEPTANCE_KEY] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash[ACCEPTANCE_KEY]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)


@pytest.fixture
def report(request):
    """Record one PASS/FAIL line per acceptance criterion."""
    lines = request.config.stash[ACCEPTANCE_KEY]

    def _report(criterion, ok, detail=""):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return _report


@pytest.fixture
def serve():
    """Start SULServers on free ports in background threads."""
    servers = []

    def start(oracle, alphabet):
        server = SULServer(("127.0.0.1", 0), oracle, alphabet)
        threading.Thread(target=server.serve_forever, daemon=True).start()
        servers.append(server)
        return server

    yield start
    for server in servers:
        server.shutdown()
        server.server_close()
