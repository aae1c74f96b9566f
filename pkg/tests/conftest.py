import pytest

_CRITERIA: dict[int, dict] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is not None:
        report.user_properties.append(("acceptance", tuple(marker.args)))


def pytest_runtest_logreport(report):
    tags = [v for k, v in report.user_properties if k == "acceptance"]
    if not tags:
        return
    if report.when != "call" and not report.failed:
        return
    number, title = tags[0]
    entry = _CRITERIA.setdefault(number, {"title": title, "passed": 0, "failed": []})
    if report.passed:
        entry["passed"] += 1
    elif report.failed:
        entry["failed"].append(report.nodeid.split("::")[-1])


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        entry = _CRITERIA[number]
        status = "FAIL" if entry["failed"] else "PASS"
        total = entry["passed"] + len(entry["failed"])
        line = f"criterion {number:2d} {status}  {entry['title']} ({entry['passed']}/{total} checks)"
        if entry["failed"]:
            line += f"; failing: {', '.join(entry['failed'])}"
        terminalreporter.write_line(line)
