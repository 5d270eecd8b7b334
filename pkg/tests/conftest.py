import os

import pytest
from hypothesis import settings

from roomtopo.pipeline import PipelineConfig, build_graph
from roomtopo.render import make_two_room_fixture

settings.register_profile("default", deadline=None, max_examples=60)
settings.register_profile("ci", deadline=None, max_examples=200)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def two_room():
    return make_two_room_fixture()


@pytest.fixture(scope="session")
def two_room_clean():
    return make_two_room_fixture(noise_pixels=0)


@pytest.fixture(scope="session")
def built_rooms(two_room):
    return build_graph(two_room, PipelineConfig(rooms=True), keep_stages=True)


@pytest.fixture(scope="session")
def built_norooms(two_room):
    return build_graph(two_room, PipelineConfig(rooms=False), keep_stages=True)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
