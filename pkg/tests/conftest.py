import re

_CRITERION = re.compile(r"test_acceptance\.py::test_criterion_(\d+)_(\w+)")
_outcomes: dict[int, tuple[str, list[str]]] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    name, results = _outcomes.setdefault(n, (m.group(2), []))
    if report.when == "call" or report.outcome != "passed":
        results.append(report.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_outcomes):
        name, results = _outcomes[n]
        ok = results and all(r == "passed" for r in results)
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {name.replace('_', ' ')}")
