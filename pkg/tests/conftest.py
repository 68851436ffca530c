import pytest

# criterion number -> (passed, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")


@pytest.fixture
def record():
    def _record(key, ok, detail):
        ACCEPTANCE[key] = (bool(ok), detail)
        print(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")
        return ok
    return _record
