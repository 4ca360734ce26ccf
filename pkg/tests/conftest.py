import numpy as np
import pytest


def pytest_addoption(parser):
    parser.addoption("--run-long", action="store_true", help="run opt-in long experiments")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--run-long"):
        return
    skip = pytest.mark.skip(reason="long experiment; pass --run-long")
    for item in items:
        if "long" in item.keywords:
            item.add_marker(skip)


def random_state(rng: np.random.Generator, size: int) -> np.ndarray:
    vec = rng.normal(size=size) + 1j * rng.normal(size=size)
    return vec / np.linalg.norm(vec)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
