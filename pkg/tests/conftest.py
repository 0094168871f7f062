import os
import sys

import pytest
from hypothesis import settings

from relayfold.model_core import abs_model, mass_spring

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


@pytest.fixture(scope="session")
def ms():
    return mass_spring()


@pytest.fixture(scope="session")
def absm():
    return abs_model()


@pytest.fixture(scope="session")
def ms_repelling():
    # anti-damped: alpha g^R(0) < 0
    return mass_spring(c_L=-0.1, c_R=-0.1)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
