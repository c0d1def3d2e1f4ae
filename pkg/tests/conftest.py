from pathlib import Path

import numpy as np
import pytest

from bbclust.data import encode_labels, load_column, load_csv

FIXTURES = Path(__file__).parent / "fixtures"
IRIS = FIXTURES / "iris.csv"

# (criterion, passed, detail) lines collected by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def iris():
    return load_csv(IRIS, header=True, label_column=-1)


@pytest.fixture(scope="session")
def iris_truth():
    codes, _ = encode_labels(load_column(IRIS, -1))
    return codes


@pytest.fixture
def two_blobs():
    gen = np.random.default_rng(3)
    a = gen.normal(0.0, 0.05, size=(30, 2))
    b = gen.normal(0.0, 0.05, size=(30, 2)) + [20.0, 20.0]
    return np.vstack([a, b]), np.repeat([0, 1], 30)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_LINES:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
