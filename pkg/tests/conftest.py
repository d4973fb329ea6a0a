import numpy as np
import pytest

from spdcsource.config import load_config
from spdcsource.jsa import JointAmplitude, JointGrid, SourceDesign


@pytest.fixture(scope="session")
def ref_config():
    return load_config()


@pytest.fixture(scope="session")
def design():
    return SourceDesign()


@pytest.fixture(scope="session")
def design_jsa(design):
    return design.jsa()


def random_jsa(rng, n_s, n_i, rank=None):
    """Random complex JSA on a small unit-spaced grid, optionally of limited rank."""
    grid = JointGrid(1550e-9 + np.arange(n_s) * 1e-10, 1550e-9 + np.arange(n_i) * 1e-10)
    if rank is None:
        f = rng.normal(size=(n_s, n_i)) + 1j * rng.normal(size=(n_s, n_i))
    else:
        u = rng.normal(size=(n_s, rank)) + 1j * rng.normal(size=(n_s, rank))
        v = rng.normal(size=(rank, n_i)) + 1j * rng.normal(size=(rank, n_i))
        f = u @ v
    return JointAmplitude.normalized(grid, f)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def report_dir(tmp_path_factory):
    """Artifacts of one full ``report`` run on the bundled configuration."""
    from spdcsource.cli import main

    out = tmp_path_factory.mktemp("report")
    assert main(["report", "--out", str(out), "--threads", "8"]) == 0
    return out


@pytest.fixture(scope="session")
def report_dir_single_thread(tmp_path_factory):
    from spdcsource.cli import main

    out = tmp_path_factory.mktemp("report_1")
    assert main(["report", "--out", str(out), "--threads", "1"]) == 0
    return out


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda ln: (int(ln.split()[1].rstrip("ab:")), ln)):
            terminalreporter.write_line(line)
