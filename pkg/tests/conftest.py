import pytest

ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture
def record(request):
    """Store one acceptance line; the body still asserts on its own."""
    store = request.config.stash.setdefault(ACCEPTANCE, {})

    def _record(key, title, checks):
        failed = [name for name, ok in checks if not ok]
        status = "PASS" if not failed else "FAIL"
        line = f"[{status}] {key:>2} {title}"
        if failed:
            line += "  (failing: " + "; ".join(failed) + ")"
        store[key] = line
        print(line)
        return failed

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(store):
        terminalreporter.write_line(store[key])
