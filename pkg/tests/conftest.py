import contextlib

import pytest

from streamsample import compiled_available

BACKENDS = ["python"] + (["cython"] if compiled_available() else [])

_ACCEPTANCE: list[str] = []


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def criterion():
    """Context manager that records one PASS/FAIL line for an acceptance criterion."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        details: list[str] = []
        try:
            yield details
        except BaseException:
            line = f"FAIL criterion {number}: {title}"
            raise
        else:
            line = f"PASS criterion {number}: {title}"
        finally:
            if details:
                line += " [" + "; ".join(details) + "]"
            _ACCEPTANCE.append(line)
            print(line)

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
