from datetime import datetime

import numpy as np
import pytest

from copdsev.core import Gender, PatientSample

T0 = datetime(2130, 5, 1, 8, 0)


def make_sample(hadm_id=100001, charttime=T0, age=67.0, gender=Gender.FEMALE, icustay_id=200001, **measurements):
    """Sample with normal blood gases and vitals unless overridden (``None`` drops a value)."""
    values = dict(ph=7.40, po2=60.0, pco2=40.0, be=0.0, tco2=25.0, hr=80.0, rr=18.0, spo2=95.0)
    values.update(measurements)
    return PatientSample(icustay_id, hadm_id, charttime, age, gender, **values)


def two_blobs(n, d=2, sep=4.0, seed=0):
    """Two isotropic unit-variance Gaussian blobs whose means are ``sep`` apart."""
    rng = np.random.default_rng(seed)
    y = np.arange(n) % 2
    rng.shuffle(y)
    X = rng.normal(size=(n, d))
    X[:, 0] += np.where(y == 1, sep / 2, -sep / 2)
    return X, y


@pytest.fixture
def sample_factory():
    return make_sample


# Acceptance verdicts, collected so they also appear without ``-s``.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
