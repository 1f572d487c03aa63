import numpy as np
import pytest

from dispersed_tde.channel import Band, BandPlan
from dispersed_tde.waveform import PulseSpec, gaussian_doublet

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def doublet100():
    return gaussian_doublet(PulseSpec.doublet(100e3))


def make_plan(bandwidths, noise_psd=0.0, span_samples=200, fs=None, cfo=False):
    fs = fs or 16 * max(bandwidths)
    waves = [gaussian_doublet(PulseSpec.doublet(b, fs)) for b in bandwidths]
    n = max(len(w) for w in waves) + span_samples
    bands = tuple(Band(w, noise_psd, b, cfo) for w, b in zip(waves, bandwidths))
    return BandPlan(bands, n / fs)


@pytest.fixture
def plan3():
    return make_plan((200e3, 100e3, 400e3))


@pytest.fixture
def plan1():
    return make_plan((100e3,))
