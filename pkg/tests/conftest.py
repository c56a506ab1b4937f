import numpy as np
import pytest

from cbmbr import _kernels


@pytest.fixture(scope="session", autouse=True)
def _compiled_kernels():
    _kernels.warmup()


@pytest.fixture(params=list(_kernels.BACKENDS))
def backend(request):
    with _kernels.use_backend(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def rel_dev(a, b):
    """Max deviation scaled by the largest magnitude of the reference."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    scale = max(np.abs(b).max(), 1e-300)
    return float(np.abs(a - b).max() / scale)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: dict[str, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda s: int(s[2:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
