"""Synthetic jackhammer recordings with known burst times.

A steady low-level tone stands in for site background. Bursts are white
noise gated on and off at ``gate_hz`` (the blow rate), scaled so that the
burst frame RMS sits ``snr_db`` above the background frame RMS on the
detector's ``10 log10`` scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GatedNoiseFixture:
    samples: np.ndarray
    sample_rate: int
    bursts: tuple[tuple[float, float], ...]


def gated_noise(
    duration: float,
    bursts,
    sample_rate: int = 16000,
    gate_hz: float = 15.0,
    snr_db: float = 10.0,
    background_rms: float = 0.01,
    tone_hz: float = 200.0,
    seed: int = 0,
) -> GatedNoiseFixture:
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    bg = background_rms * np.sqrt(2.0) * np.sin(2.0 * np.pi * tone_hz * t)
    # half-duty gate: burst power = 0.5 * amp^2 + bg^2 must equal (ratio * bg)^2
    ratio = 10.0 ** (snr_db / 10.0)
    amp = background_rms * np.sqrt(2.0 * (ratio**2 - 1.0))
    gate = np.floor(t * gate_hz * 2.0) % 2 == 0
    active = np.zeros(n, dtype=bool)
    for start, end in bursts:
        active |= (t >= start) & (t < end)
    noise = np.random.default_rng(seed).standard_normal(n)
    x = bg + amp * noise * (gate & active)
    return GatedNoiseFixture(x, sample_rate, tuple((float(a), float(b)) for a, b in bursts))


def silence(duration: float, sample_rate: int = 16000) -> np.ndarray:
    return np.zeros(int(round(duration * sample_rate)))
