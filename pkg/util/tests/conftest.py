import numpy as np
import pytest

from spad_sim.core.bitstream import BitplaneStream, StreamHeader, pack_frames
from spad_sim.core.photon_model import SensorConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture
def unit_sensor():
    """eta * tau = 1 and no dark counts, so flux equals lambda."""
    return SensorConfig(eta=1.0, dark_rate=0.0, tau_bin=1.0, width=32, height=32)


@pytest.fixture
def random_stream(rng):
    def build(frames=100, width=64, height=64, p=0.3, tau_bin=1e-5):
        bits = rng.random((frames, height, width)) < p
        header = StreamHeader(width, height, frames, tau_bin, 0.5, 100.0, 7)
        return BitplaneStream(header=header, payload=pack_frames(bits)), bits

    return build


@pytest.fixture
def output_dir(tmp_path):
    out = tmp_path / "out"
    out.mkdir()
    return out
