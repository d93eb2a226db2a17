import time
from contextlib import contextmanager

import pytest

_LINES = []


class _Criterion:
    def __init__(self, number, title, limit):
        self.number, self.title, self.limit = number, title, limit
        self.notes = []

    def note(self, text):
        self.notes.append(text)


@pytest.fixture
def criterion():
    """Time one acceptance criterion and record a PASS/FAIL line for the summary."""

    @contextmanager
    def run(number, title, limit):
        c = _Criterion(number, title, limit)
        t0 = time.perf_counter()
        status, why = "PASS", ""
        try:
            yield c
        except BaseException as exc:
            status, why = "FAIL", f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
            raise
        finally:
            dt = time.perf_counter() - t0
            if status == "PASS" and dt >= limit:
                status, why = "FAIL", f"runtime {dt:.2f}s exceeds {limit:g}s"
            detail = "; ".join(c.notes + ([why] if why else []))
            _LINES.append(f"criterion {number} [{status}] {title} ({dt:.2f}s / {limit:g}s) {detail}".rstrip())
        assert dt < limit, f"runtime {dt:.2f}s exceeds {limit:g}s"

    return run


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_LINES, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)
