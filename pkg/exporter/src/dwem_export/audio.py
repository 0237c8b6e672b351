"""WAV loading: PCM decode, mono mixdown, resampling to 16 kHz."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

TARGET_RATE = 16000

_PCM_DTYPES = {1: np.uint8, 2: np.dtype("<i2"), 4: np.dtype("<i4")}


class AudioError(Exception):
    pass


def load_wav(path: str | Path) -> np.ndarray:
    """Samples as float64 in [-1, 1], mono, 16 kHz."""
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError) as exc:
        raise AudioError(f"{path}: cannot decode WAV ({exc})") from None
    dtype = _PCM_DTYPES.get(width)
    if dtype is None:
        raise AudioError(f"{path}: unsupported sample width {width} bytes (PCM 8/16/32 only)")
    samples = np.frombuffer(raw, dtype=dtype).astype(np.float64)
    if width == 1:
        samples = (samples - 128.0) / 128.0
    else:
        samples = samples / float(2 ** (8 * width - 1))
    if channels > 1:
        samples = samples.reshape(-1, channels).mean(axis=1)
    if rate != TARGET_RATE:
        samples = resample(samples, rate, TARGET_RATE)
    return samples


def resample(samples: np.ndarray, rate: int, target: int) -> np.ndarray:
    from math import gcd

    from scipy.signal import resample_poly

    g = gcd(rate, target)
    return resample_poly(samples, target // g, rate // g)
