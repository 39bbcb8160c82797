from __future__ import annotations

import pytest

from scmspec import kernels


@pytest.fixture(params=["python", "compiled"])
def backend(request):
    """Each kernel implementation; the compiled one is skipped when not built."""
    try:
        return kernels.get_backend(request.param)
    except ImportError:
        pytest.skip("compiled extension not built")


_VERDICTS: dict[int, str] = {}


@pytest.fixture
def verdict():
    """Record and print the pass/fail line of an acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"ACCEPTANCE {number:2d} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _VERDICTS[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
