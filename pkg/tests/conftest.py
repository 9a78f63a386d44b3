import numpy as np
import pytest

from dyspill.fixtures import fixture_path, synthetic_panel
from dyspill.var import VarModel


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(scope="session")
def fixture_dir():
    return fixture_path()


@pytest.fixture(scope="session")
def city_panel():
    return synthetic_panel()


def make_model(phi, sigma, labels=None):
    """VarModel from known parameters (no estimation)."""
    phi = np.asarray(phi, dtype=float)
    if phi.ndim == 2:
        phi = phi[None]
    N = phi.shape[1]
    labels = tuple(labels or (f"y{i + 1}" for i in range(N)))
    return VarModel(np.zeros(N), phi, np.asarray(sigma, dtype=float), 100, labels)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
