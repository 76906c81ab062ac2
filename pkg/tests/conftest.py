import pytest

CRITERIA = {
    1: "quarter-turn table and index of the radius-4 circle (example 1)",
    2: "per-equilibrium indices and additivity (example 1)",
    3: "region raster matches 1 - x1^2 < 0 (example 2)",
    4: "no Omega detected (example 3)",
    5: "basin samples converge for r in {0, 1, 2, 4} (example 1)",
    6: "basin samples converge, >= 95% to the stable pair (example 2)",
    7: "opinion network roots, constant trace and convergence",
    8: "compound matrices: Cauchy-Binet, finite differences, planar trace",
    9: "matrix measures: eigenvalue sums and induced-norm limits",
    10: "wedge area follows exp(int trace)",
    11: "energy rate closed form and monotone energy along trajectories",
    12: "byte-identical reports across runs",
}

_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion the test belongs to")


def pytest_runtest_logreport(report):
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _outcomes.setdefault(marker, []).append(report.outcome == "passed")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report.criterion = m.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, text in CRITERIA.items():
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status:7s} {text}")
