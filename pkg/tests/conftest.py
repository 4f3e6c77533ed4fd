import sys

import numpy as np
import pytest


def draw_disk(size: int, radius: float, value: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Hard-edged bright disk at the geometric image center, plus the
    analytic truth mask (pixel centers within the radius)."""
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    c = (size - 1) / 2.0
    dist = np.hypot(yy - c, xx - c)
    truth = dist <= radius
    return np.where(truth, value, 0.0), truth


@pytest.fixture(name="draw_disk")
def draw_disk_fixture():
    return draw_disk


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    """Replay the acceptance scoreboard after the run, since per-test
    stdout is captured and hidden for passing tests."""
    for name, module in sys.modules.items():
        if name.rpartition(".")[2] == "test_acceptance":
            lines = getattr(module, "CRITERION_LINES", [])
            if lines:
                terminalreporter.section("acceptance criteria")
                for line in sorted(lines):
                    terminalreporter.write_line(line)
            break
