from __future__ import annotations

import time
from contextlib import contextmanager

import pytest

_RESULTS = pytest.StashKey[list]()


@pytest.fixture
def criterion(request):
    """Time a block, record one PASS/FAIL line for it and enforce its runtime limit."""
    results = request.config.stash.setdefault(_RESULTS, [])

    @contextmanager
    def check(number: int, title: str, limit: float):
        start = time.perf_counter()
        failure = None
        try:
            yield
        except BaseException as e:
            failure = e
        elapsed = time.perf_counter() - start
        ok = failure is None and elapsed < limit
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({elapsed:.2f} s, limit {limit:g} s)"
        results.append(line)
        print(line)
        if failure is not None:
            raise failure
        assert elapsed < limit, f"criterion {number} took {elapsed:.2f} s, limit {limit:g} s"

    return check


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_RESULTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
