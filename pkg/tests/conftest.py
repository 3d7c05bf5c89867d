from pathlib import Path

import pytest

from maximin import MU1, MU2, MU3, MU3X3

INSTANCE_DIR = Path(__file__).resolve().parent.parent / "instances"


@pytest.fixture
def instance_dir():
    return INSTANCE_DIR


@pytest.fixture(params=["mu1", "mu2", "mu3"])
def small_instance(request):
    return {"mu1": MU1, "mu2": MU2, "mu3": MU3}[request.param]


@pytest.fixture
def mu3x3():
    return MU3X3


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
