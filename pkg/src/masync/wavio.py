"""16-bit PCM mono WAV files, read and written bit-exactly."""
from __future__ import annotations

import wave
from pathlib import Path

import numpy as np

from .core_signal import AudioClip
from .errors import WavFormatError


def read_wav(path) -> AudioClip:
    path = Path(path)
    try:
        with wave.open(str(path), "rb") as w:
            channels = w.getnchannels()
            width = w.getsampwidth()
            rate = w.getframerate()
            comp = w.getcomptype()
            frames = w.readframes(w.getnframes())
    except wave.Error as exc:
        # the stdlib reader only accepts PCM format tag 1
        raise WavFormatError(f"{path}: not a PCM WAV file ({exc})") from exc
    except EOFError as exc:
        raise WavFormatError(f"{path}: truncated WAV file") from exc
    if comp != "NONE":
        raise WavFormatError(f"{path}: compressed WAV ({comp}) is not supported")
    if channels != 1:
        raise WavFormatError(f"{path}: {channels} channels; only mono is accepted (no implicit downmix)")
    if width != 2:
        raise WavFormatError(f"{path}: {8 * width}-bit samples; only 16-bit PCM is accepted")
    pcm = np.frombuffer(frames, dtype="<i2")
    return AudioClip.from_pcm16(pcm, rate)


def write_wav(path, clip: AudioClip) -> None:
    pcm = clip.to_pcm16().astype("<i2")
    with wave.open(str(path), "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(clip.sample_rate)
        w.writeframes(pcm.tobytes())
