import sys
from functools import lru_cache
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

from hcdlab.heisenberg import Geometry  # noqa: E402

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("default")


@lru_cache(maxsize=None)
def geometry(label: str) -> Geometry:
    return Geometry(label)


@pytest.fixture(scope="session")
def euclid():
    return geometry("euclidean")


@pytest.fixture(scope="session")
def lp4():
    return geometry("lp:4")


@pytest.fixture(scope="session")
def lens():
    return geometry("lens:1,2")


_VERDICTS = pytest.StashKey[list]()


@pytest.fixture
def verdict(request):
    """Record one acceptance line; all lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(_VERDICTS, [])

    def emit(line: str) -> None:
        lines.append(line)
        print(line)

    return emit


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance")
        for line in lines:
            terminalreporter.write_line(line)
