from fractions import Fraction as F

import pytest

from linematch.core import Instance
from linematch.engine import run_online


@pytest.fixture(scope="session")
def w1_instance():
    # two servers straddling two close requests; both phases take direct edges
    return Instance(t=F(3), servers=(F(0), F(10)), requests=(F(1), F(2)))


@pytest.fixture(scope="session")
def w2_instance():
    # second arrival triggers a three-edge rematch through the first pair
    return Instance(t=F(3), servers=(F(0), F(100)), requests=(F(1), F(1, 2)))


@pytest.fixture(scope="session")
def w1_trace(w1_instance):
    return run_online(w1_instance)


@pytest.fixture(scope="session")
def w2_trace(w2_instance):
    return run_online(w2_instance)


@pytest.fixture(scope="session")
def abutting_instance():
    # spans of phases 1 and 2 touch exactly at the still-free middle server;
    # closed region merging swallows that server, open merging keeps it on a
    # boundary
    return Instance(t=F(3), servers=(F(4), F(0), F(2)),
                    requests=(F(1), F(3), F(4)))
