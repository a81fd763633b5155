import pytest

ACCEPTANCE: dict[int, bool] = {}


@pytest.fixture
def criterion():
    """Record the outcome of one acceptance criterion for the end-of-run summary."""
    def record(number: int, ok: bool) -> bool:
        ACCEPTANCE[number] = ok
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ACCEPTANCE[number] else 'FAIL'}")
