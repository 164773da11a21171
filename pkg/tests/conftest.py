"""Acceptance reporting: one PASS/FAIL line per criterion in the terminal summary."""

import time

import pytest

SUITE_LIMIT_S = 60.0
_RESULTS = pytest.StashKey[dict]()
_START = pytest.StashKey[float]()


def pytest_configure(config):
    config.stash[_RESULTS] = {}
    config.stash[_START] = time.perf_counter()


@pytest.fixture
def report(request):
    """Record ``(criterion, passed, detail)`` for the end-of-run summary."""
    results = request.config.stash[_RESULTS]

    def _record(criterion: int, passed: bool, detail: str) -> None:
        results[criterion] = (passed, detail)
        print(f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash[_RESULTS]
    if not results:
        return
    elapsed = time.perf_counter() - config.stash[_START]
    if 10 in results:
        ok, detail = results[10]
        within = elapsed < SUITE_LIMIT_S
        results[10] = (ok and within,
                       f"{detail}; session runtime {elapsed:.1f} s (limit {SUITE_LIMIT_S:.0f} s)")
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_sessionfinish(session, exitstatus):
    elapsed = time.perf_counter() - session.config.stash[_START]
    if 10 in session.config.stash[_RESULTS] and elapsed >= SUITE_LIMIT_S and exitstatus == 0:
        session.exitstatus = 1
