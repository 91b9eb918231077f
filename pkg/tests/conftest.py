import pytest

# criterion id -> list of (ok, detail); filled by the acceptance tests
VERDICTS: dict[str, list] = {}


@pytest.fixture
def verdict(request):
    """Record a criterion outcome; a test that dies before recording counts as a failure."""
    name = request.node.get_closest_marker("criterion").args[0]
    seen = []

    def record(ok, detail):
        seen.append(ok)
        VERDICTS.setdefault(name, []).append((bool(ok), detail))
        return ok

    yield record
    if not seen:
        VERDICTS.setdefault(name, []).append((False, f"{request.node.name} did not finish"))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion this test covers")


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for name in sorted(VERDICTS, key=lambda s: int(s[1:])):
        parts = VERDICTS[name]
        status = "PASS" if all(ok for ok, _ in parts) else "FAIL"
        tr.write_line(f"{status} {name}: " + "; ".join(d for _, d in parts))
