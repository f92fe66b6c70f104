import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from arceager.conll import read_clusters, read_conll  # noqa: E402
from arceager.learning import TrainConfig  # noqa: E402
from arceager.model import train  # noqa: E402

SAMPLE = Path(__file__).resolve().parents[1] / "src" / "arceager" / "data" / "sample"

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def sample_train():
    with open(SAMPLE / "train.conll") as f:
        return read_conll(f)


@pytest.fixture(scope="session")
def sample_dev():
    with open(SAMPLE / "dev.conll") as f:
        return read_conll(f)


@pytest.fixture(scope="session")
def sample_clusters():
    with open(SAMPLE / "clusters.txt") as f:
        return read_clusters(f)


@pytest.fixture(scope="session")
def small_model(sample_train):
    """A quickly trained model for behavioural tests."""
    cfg = TrainConfig(beam_width=4, iterations=2, threads=1)
    model, _ = train(sample_train[:120], cfg)
    return model
