import pytest


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if rep.when != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                rows.append((props["criterion"], outcome, props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, outcome, detail in sorted(rows):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if outcome == 'passed' else 'FAIL'}  {detail}")


@pytest.fixture
def criterion(record_property):
    """Record the criterion number and a one-line measured summary for the report."""

    def _set(num, detail):
        record_property("criterion", num)
        record_property("detail", detail)

    return _set
