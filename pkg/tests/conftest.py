import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from cdoa_loc.channel import ChannelModel
from cdoa_loc.core import NodeLayout, Workspace

settings.register_profile("ci", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


@pytest.fixture
def ws6():
    return Workspace.square(6.0)


@pytest.fixture
def layout6(ws6):
    return NodeLayout.corners(ws6)


@pytest.fixture
def clean():
    return ChannelModel(noise_std=0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: list[str] = []


@pytest.fixture(scope="session")
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
