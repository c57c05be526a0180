import numpy as np
import pytest

from mixsum.kernels import RngStream
from mixsum.reference_models import MixtureDraw


@pytest.fixture
def rng():
    return RngStream(12345)


def gauss_draw(means, variances, weights=None, m=0):
    means = np.asarray(means, dtype=float)
    w = np.full(means.shape[0], 1.0 / means.shape[0]) if weights is None else np.asarray(weights, float)
    return MixtureDraw.from_params("gaussian_uni", w, {"mean": means, "var": np.asarray(variances, float)}, m)


@pytest.fixture
def make_draw():
    return gauss_draw


_ACCEPTANCE = []


@pytest.fixture
def acceptance_line():
    """Record one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(number, passed, detail):
        line = f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE):
            terminalreporter.write_line(line)
