import numpy as np
import pytest

from genrank import _backend, _fallback
from genrank.graph import RowStochasticMatrix

BACKENDS = [pytest.param(_fallback, id="python")]
if _backend.compiled() is not None:
    BACKENDS.append(pytest.param(_backend.compiled(), id="cython"))


@pytest.fixture(params=BACKENDS)
def kernels(request, monkeypatch):
    """Run the test once per available kernel backend."""
    monkeypatch.setattr(_backend, "kernels", request.param)
    return request.param


def dense_random_w(n, seed, diag_low=0.0):
    """Dense Dirichlet rows; independent of the library's sparse generator."""
    rng = np.random.default_rng(seed)
    M = rng.dirichlet(np.ones(n), size=n)
    if diag_low:
        d = rng.uniform(diag_low, 0.95, size=n)
        np.fill_diagonal(M, 0.0)
        M *= ((1 - d) / M.sum(axis=1))[:, None]
        np.fill_diagonal(M, d)
    return RowStochasticMatrix.from_dense(M)


_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        prev = _CRITERIA.get(number)
        ok = report.passed and (prev is None or prev[1])
        _CRITERIA[number] = (title, ok, (prev[2] if prev else 0.0) + report.duration)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, secs = _CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({secs:.2f}s)")
