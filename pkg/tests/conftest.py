import pytest

_LINES = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_LINES] = []


@pytest.fixture
def report(request):
    """Record one PASS/FAIL (or INFO) line; they are echoed in the terminal summary."""
    lines = request.config.stash[_LINES]

    def emit(tag, label, ok=None, detail=""):
        status = "INFO" if ok is None else ("PASS" if ok else "FAIL")
        line = f"{status} {tag}: {label}" + (f" [{detail}]" if detail else "")
        lines.append(line)
        print(line)
        return ok

    return emit


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
