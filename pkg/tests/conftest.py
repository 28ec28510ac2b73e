import pytest

_VERDICTS: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion for the run summary."""

    def record(label: str, checks: dict, note: str = "") -> list[str]:
        failed = [name for name, ok in checks.items() if not ok]
        line = f"{label}: {'FAIL' if failed else 'PASS'}"
        detail = "; ".join(filter(None, [note, "failed: " + ", ".join(failed) if failed else ""]))
        if detail:
            line += f"  [{detail}]"
        _VERDICTS.append(line)
        print(line)
        return failed

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
