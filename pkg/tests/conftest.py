import pytest

_GATE_LINES: list[str] = []


class Gate:
    """Records one PASS/FAIL line per acceptance criterion, then asserts."""

    def check(self, criterion: str, ok: bool, detail: str = "") -> None:
        _GATE_LINES.append(f"{'PASS' if ok else 'FAIL'}  {criterion}" + (f"  ({detail})" if detail else ""))
        assert ok, f"{criterion}: {detail}"


@pytest.fixture
def gate():
    return Gate()


def pytest_terminal_summary(terminalreporter):
    if _GATE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _GATE_LINES:
            terminalreporter.write_line(line)
