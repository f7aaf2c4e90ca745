"""Shared helpers for the test suite."""

import numpy as np
import pytest

from lowdisc.pointset import PointSet

# Per-criterion pass/fail lines registered by the acceptance tests; echoed
# in the terminal summary so the verdicts are visible even under capture.
ACCEPTANCE_LINES = []


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def random_pointset(n, d, seed, provenance=""):
    return PointSet(make_rng(seed).random((n, d)), provenance=provenance)


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture(scope="session")
def acceptance_log():
    return ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
