"""Acceptance-criteria registry: one PASS/FAIL line per criterion at exit."""

_RESULTS = []


def record_criterion(label, passed, detail):
    """Called by the acceptance tests; each criterion reports exactly once."""
    _RESULTS.append((str(label), bool(passed), str(detail)))


def _order(label):
    digits = "".join(ch for ch in label if ch.isdigit())
    return (int(digits) if digits else 99, label)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(_RESULTS, key=lambda r: _order(r[0])):
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(
            f"ACCEPTANCE CRITERION {label}: {status} — {detail}"
        )
