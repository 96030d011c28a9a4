import hypothesis
import numpy as np
import pytest

np.seterr(all="raise", under="ignore")

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line, print it and fail the test if it is red."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:2d}  {'PASS' if ok else 'FAIL'}  {detail}"
        request.config.stash.setdefault(_VERDICTS, []).append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
