import os
import sys
import time
from contextlib import contextmanager

import pytest

sys.path.insert(0, os.path.dirname(__file__))

_RESULTS = {}


class Criterion:
    def __init__(self, number, title, budget_s):
        self.number, self.title, self.budget_s = number, title, budget_s
        self.detail = ""

    def note(self, text):
        self.detail = text


@pytest.fixture
def criterion():
    """Time a block as one acceptance criterion and record PASS/FAIL for the summary."""

    @contextmanager
    def run(number, title, budget_s):
        c = Criterion(number, title, budget_s)
        t0 = time.perf_counter()
        try:
            yield c
        except pytest.skip.Exception as exc:
            _RESULTS[number] = ("SKIP", title, time.perf_counter() - t0, str(exc.msg))
            raise
        except BaseException as exc:
            _RESULTS[number] = ("FAIL", title, time.perf_counter() - t0,
                                f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
            raise
        elapsed = time.perf_counter() - t0
        if elapsed > budget_s:
            _RESULTS[number] = ("FAIL", title, elapsed, f"over the {budget_s:g}s budget")
            pytest.fail(f"criterion {number} took {elapsed:.2f}s, budget {budget_s:g}s")
        _RESULTS[number] = ("PASS", title, elapsed, c.detail)

    return run


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        status, title, elapsed, detail = _RESULTS[number]
        line = f"[{status}] {number}. {title} ({elapsed:.2f}s)"
        if detail:
            line += f" - {detail}"
        terminalreporter.write_line(line)
