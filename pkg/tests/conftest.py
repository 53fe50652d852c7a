import numpy as np
import pytest

from sparse_upmix import MultichannelSignal

FS = 48000
SQRT2 = np.sqrt(2.0)

_acceptance_lines = []


def record_acceptance(line: str) -> None:
    _acceptance_lines.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def tone_click(n=16384, tone_hz=1000.0, tone_amp=0.5, click_at=None, click_amp=1.0):
    """1 kHz sine plus a single-sample click; returns (signal, tone, click, click_index)."""
    t = np.arange(n) / FS
    tone = tone_amp * np.sin(2 * np.pi * tone_hz * t)
    click_at = n // 2 + 123 if click_at is None else click_at
    click = np.zeros(n)
    click[click_at] = click_amp
    return tone + click, tone, click, click_at


def plane_wave_foa(s, direction):
    """Paper-convention FOA (W/sqrt2, X, Y, Z) of signal ``s`` arriving from ``direction``."""
    d = np.asarray(direction, float)
    return np.stack([s / SQRT2, d[0] * s, d[1] * s, d[2] * s])


def random_unit(rng, n):
    v = rng.standard_normal((n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def angle_between(a, b):
    """Angle in radians, accurate near 0 (atan2 of cross and dot)."""
    return np.arctan2(np.linalg.norm(np.cross(a, b), axis=-1), np.sum(a * b, axis=-1))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def signal_factory():
    def make(data, fs=FS):
        return MultichannelSignal(data, fs)
    return make
