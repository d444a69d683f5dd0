import sys
from pathlib import Path

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from zeroshot_portfolio import RegretMatrix  # noqa: E402
from zeroshot_portfolio.planted import generate_planted  # noqa: E402

hypothesis.settings.register_profile("default", max_examples=100, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: s.split(None, 1)[1]):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def planted():
    return generate_planted(50, 200, 4, 0.005, seed=0)


@pytest.fixture(scope="session")
def planted_noisy():
    return generate_planted(50, 200, 4, 0.02, seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_regret(rng, n_configs, n_tasks, discrete=False) -> RegretMatrix:
    if discrete:
        values = rng.integers(0, 5, (n_configs, n_tasks)) * 0.05
    else:
        values = rng.uniform(0, 0.3, (n_configs, n_tasks))
    values = values - values.min(axis=0)
    return RegretMatrix.from_array(values)
