from __future__ import annotations

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def record_acceptance(request):
    """Collects (number, title, passed, detail, seconds) for the end-of-run summary."""
    rows = request.config.stash[_ACCEPTANCE_KEY]

    def record(number: int, title: str, passed: bool, detail: str, seconds: float) -> None:
        rows.append((number, title, bool(passed), detail, seconds))

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    rows = config.stash.get(_ACCEPTANCE_KEY, [])
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail, seconds in sorted(rows):
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:>2}. {title} ({seconds:.1f}s): {detail}")
