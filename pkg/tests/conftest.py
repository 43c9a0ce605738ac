import numpy as np
import pytest

from spinhist.component import component_df_spin_chain, odd_centered_pair
from spinhist.spectral import ChainConfig


@pytest.fixture(scope="session")
def figure_df():
    """Component df at M=1000, M1=500, t=1000 with the default pair."""
    cfg = ChainConfig(M=1000, M1=500, chi=1.0, t=1000.0)
    return component_df_spin_chain(cfg, odd_centered_pair(1000, 500))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for result in results:
        terminalreporter.write_line(result.line())
