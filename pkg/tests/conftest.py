import numpy as np
import pytest

import lpwpe
from lpwpe import roomsim
from lpwpe.delays import PredictionDelayMatrix

FS = 16000

# one PASS/FAIL line per acceptance criterion, echoed after the run so
# pytest's output capture does not swallow them
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def stft_cfg():
    return lpwpe.StftConfig()


@pytest.fixture(scope="session")
def dry_signal():
    return lpwpe.speech_like_noise(1.5, FS, 7)


@pytest.fixture(scope="session")
def small_scene():
    """4-mic reverberant room at T60 = 0.6 s, heterogeneous distances."""
    spec = roomsim.RoomSpec(
        dimensions=(6.0, 7.0, 2.7), t60=0.6,
        source_position=(2.1, 3.3, 1.5),
        mic_positions=((2.5, 3.0, 1.4), (5.1, 0.8, 1.4),
                       (0.7, 6.1, 1.3), (3.0, 5.2, 1.6)))
    return roomsim.simulate_rir(spec)


@pytest.fixture(scope="session")
def reverb_mixture(small_scene, dry_signal):
    return roomsim.render_scene(small_scene, dry_signal)


@pytest.fixture(scope="session")
def reverb_specs(reverb_mixture, stft_cfg):
    return [lpwpe.stft_analyze(ch, stft_cfg) for ch in reverb_mixture.channels]


@pytest.fixture(scope="session")
def uniform_delays(reverb_specs):
    return PredictionDelayMatrix.uniform(len(reverb_specs), 2)
