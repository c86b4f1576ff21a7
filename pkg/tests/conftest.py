import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dynrmat.rootsys import SUPPORTED, build_algebra

settings.register_profile(
    "repo",
    deadline=None,
    derandomize=True,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

ALL_TYPES = [f"{s}{r}" for s, r in SUPPORTED]
SMALL_TYPES = ["A1", "A2", "B2", "C2", "G2"]


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


@pytest.fixture
def sl2():
    return build_algebra("A1")


@pytest.fixture
def sl3():
    return build_algebra("A2")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.result_lines():
        terminalreporter.write_line(line)
