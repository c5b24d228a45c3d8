import os

import pytest

from wsurf import _kernels

RESULTS = {}


def record(number, ok, detail):
    """Remember a criterion outcome for the terminal summary."""
    RESULTS[number] = (bool(ok), detail)
    return ok


@pytest.fixture(autouse=True, scope="session")
def _warm_kernels():
    # compile (or load cached) numba kernels once, outside any timed region
    _kernels.rk4_run([1.0, 0.0, 0.0, 0.0], 0.0, 1e-3, 4, 1e-8)
    yield


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(RESULTS):
        ok, detail = RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    backend = os.environ.get("WSURF_NUMBA", "1")
    terminalreporter.write_line(f"kernel backend: {_kernels.backend()} (WSURF_NUMBA={backend})")
