import numpy as np
import pytest

from voicetrace.audio import AudioBuffer


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def tone_buffer(freq_hz: float, duration_s: float, rate_hz: int = 22050,
                amplitude: float = 0.5) -> AudioBuffer:
    t = np.arange(round(duration_s * rate_hz)) / rate_hz
    return AudioBuffer(amplitude * np.sin(2 * np.pi * freq_hz * t), rate_hz)
