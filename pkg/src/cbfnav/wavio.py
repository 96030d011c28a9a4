"""16-bit PCM WAV reading and writing on top of the stdlib ``wave`` module."""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np


class UnsupportedAudioFormat(ValueError):
    pass


class CorruptAudioFile(ValueError):
    pass


def read_wav(path) -> tuple[np.ndarray, int]:
    """Return mono float samples in [-1, 1) and the sample rate.

    Multichannel files are downmixed by averaging the channels.
    """
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as wf:
            nch = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            nframes = wf.getnframes()
            raw = wf.readframes(nframes)
    except wave.Error as exc:
        # the stdlib reader only understands PCM; anything else lands here
        msg = str(exc)
        if "unknown format" in msg or "not a WAVE" in msg or "does not start with RIFF" in msg:
            raise UnsupportedAudioFormat(f"{path}: {msg}") from exc
        raise CorruptAudioFile(f"{path}: {msg}") from exc
    except EOFError as exc:
        raise CorruptAudioFile(f"{path}: truncated header") from exc
    if width != 2:
        raise UnsupportedAudioFormat(f"{path}: {8 * width}-bit samples, expected 16-bit PCM")
    expected = nframes * nch * width
    if len(raw) < expected:
        raise CorruptAudioFile(f"{path}: expected {expected} data bytes, found {len(raw)}")
    data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    if nch > 1:
        data = data.reshape(-1, nch).mean(axis=1)
    return data, rate


def write_wav(path, samples, sample_rate: int) -> None:
    """Write mono or (n, channels) float samples as 16-bit PCM."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(pcm.shape[1])
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate))
        wf.writeframes(pcm.tobytes())
