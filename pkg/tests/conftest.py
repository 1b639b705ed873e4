import os

import numpy as np
import pytest

from microshift.pixelio import read_image

DATA = os.path.join(os.path.dirname(__file__), "data", "standard")
STANDARD = ["lena", "boat", "barbara", "mandrill", "aero", "ascent", "camera",
            "kodim23", "monarch", "sail", "tulips", "fruits"]


def standard_path(name):
    return os.path.join(DATA, name + ".pgm")


def load_standard(name):
    path = standard_path(name)
    if not os.path.exists(path):
        pytest.skip(f"{name}.pgm not available in {DATA}")
    return read_image(path).planes[0]


@pytest.fixture(scope="session")
def lena():
    return load_standard("lena")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    path = os.path.join(os.path.dirname(__file__), "acceptance_report.txt")
    if not os.path.exists(path):
        return
    lines = open(path).read().splitlines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
