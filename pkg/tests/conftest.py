from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"

_VERDICTS: dict[int, tuple[str, str]] = {}


class Verdict:
    def __init__(self, number: int):
        self.number = number
        self.recorded = False

    def __call__(self, ok: bool, detail: str = ""):
        status = "PASS" if ok else "FAIL"
        _VERDICTS[self.number] = (status, detail)
        self.recorded = True
        print(f"ACCEPTANCE {self.number}: {status} {detail}".rstrip())
        return ok


@pytest.fixture
def verdict(request):
    """Record the PASS/FAIL line of one acceptance criterion (criterion number via marker)."""
    marker = request.node.get_closest_marker("criterion")
    v = Verdict(marker.args[0])
    yield v
    if not v.recorded:
        _VERDICTS[v.number] = ("FAIL", "test errored before reaching a verdict")


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_VERDICTS):
        status, detail = _VERDICTS[n]
        terminalreporter.write_line(f"ACCEPTANCE {n}: {status} {detail}".rstrip())


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
