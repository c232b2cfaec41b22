import sys

import numpy as np
import pytest
import scipy.sparse as sp

from adaptive_erm.data import SparseDataset


def dense_dataset(X, y):
    return SparseDataset(sp.csr_matrix(np.asarray(X, dtype=float)),
                         np.asarray(y, dtype=float))


def random_dataset(rng, n, d, density=0.5):
    X = sp.random(n, d, density=density, format="csr", random_state=rng,
                  data_rvs=rng.standard_normal)
    y = rng.choice([-1.0, 1.0], size=n)
    return SparseDataset(X, y)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
