import numpy as np
import pytest

from risbeam.belief import TrainingDataset
from risbeam.chansim import SystemConfig
from risbeam.codebook import build_codebook

# filled by test_acceptance.py, printed at the end of the run
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def cfg20():
    return SystemConfig.from_snr_db(20.0)


@pytest.fixture(scope="session")
def cb_default(cfg20):
    return build_codebook(cfg20, 3, deact_seed=7)


def toy_dataset(Nc=4, n_per=5, Np=3, seed=0):
    rng = np.random.default_rng(seed)
    labels = np.repeat(np.arange(Nc), n_per)
    X = rng.uniform(0.0, 10.0, size=(labels.size, Np)) + labels[:, None]
    return TrainingDataset(X, labels, Nc)
