import numpy as np
import pytest

from echomem import pipeline, synth
from echomem.wav import Waveform

FS = 256_000
GOLDEN_X = [1, 1, -1, 1, -1, -1, 1]

# (criterion number, name, passed, detail) gathered by test_acceptance.py
ACCEPTANCE_LINES = []


def tone_wave(freq, n=1024, fs=FS, amp=0.5, source_id="tone"):
    return Waveform(synth.tone(freq, n, fs, amp), fs, source_id)


@pytest.fixture(scope="session")
def tone_model():
    """p=2, N=64 model trained on pure tones at 46 and 55 kHz."""
    return pipeline.train([("A", tone_wave(46_000, source_id="a")),
                           ("B", tone_wave(55_000, source_id="b"))])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for num, name, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda t: t[0]):
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        terminalreporter.write_line(f"[{status}] {num:>2}. {name}: {detail}")
