import time
from contextlib import contextmanager

import pytest

_REPORT: list[str] = []


@contextmanager
def _criterion(number: int, title: str, limit_s: float):
    start = time.perf_counter()
    try:
        yield
    except BaseException as exc:
        elapsed = time.perf_counter() - start
        _REPORT.append(f"[{number:2d}] FAIL  {title} ({elapsed:.2f}s): {str(exc).splitlines()[0] if str(exc) else type(exc).__name__}")
        raise
    elapsed = time.perf_counter() - start
    ok = elapsed < limit_s
    _REPORT.append(f"[{number:2d}] {'PASS' if ok else 'FAIL'}  {title} ({elapsed:.2f}s, limit {limit_s:g}s)")
    assert ok, f"criterion {number} took {elapsed:.2f}s, limit {limit_s}s"


@pytest.fixture
def criterion():
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if _REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_REPORT):
            terminalreporter.write_line(line)
