import numpy as np
import pytest

from wl1alsh import _kernels

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=["numpy", "numba"])
def kernel_backend(request, monkeypatch):
    """Run the decorated test once per available key-hashing backend."""
    if request.param == "numba" and _kernels.compute_keys_numba is None:
        pytest.skip("numba unavailable or disabled")
    fn = _kernels.compute_keys_numba if request.param == "numba" else _kernels.compute_keys_numpy
    monkeypatch.setattr(_kernels, "compute_keys", fn)
    return request.param
