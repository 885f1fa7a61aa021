import pytest

# criterion id -> (passed, detail); filled in by test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def record_criterion():
    def record(cid: str, passed: bool, detail: str) -> None:
        ACCEPTANCE[cid] = (bool(passed), detail)

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")

    def key(cid):
        num = cid.split(".", 1)[0]
        return (int(num) if num.isdigit() else 99, cid)

    for cid in sorted(ACCEPTANCE, key=key):
        passed, detail = ACCEPTANCE[cid]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  criterion {cid}: {detail}")
