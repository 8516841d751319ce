"""Deterministic synthetic test material.

Three styles imitate the zero-crossing statistics of light music, pop and
blues: a melody of enveloped harmonic tones around a style-specific centre
frequency, mixed with low-level filtered noise.  Every clip is a pure
function of ``(style, seed, duration, rate)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .core_signal import AudioClip
from .errors import InvalidParameterError


@dataclass(frozen=True)
class Style:
    name: str
    centre_hz: float
    harmonics: tuple[float, ...]
    note_seconds: float
    noise_db: float
    peak: float


STYLES = {
    "light": Style("light", 830.0, (1.0, 0.22, 0.08), 0.30, -34.0, 0.85),
    "pop": Style("pop", 500.0, (1.0, 0.30, 0.12, 0.05), 0.25, -30.0, 0.85),
    "blues": Style("blues", 430.0, (1.0, 0.35, 0.15, 0.07), 0.40, -30.0, 0.85),
}

# melody steps in semitones relative to the centre
_SCALE = np.array([-2, -1, 0, 0, 1])

DEFAULT_SEEDS = {"light": 101, "pop": 202, "blues": 303}


def synth_clip(style: str, seed: int, seconds: float = 16.0, rate: int = 44100) -> AudioClip:
    try:
        st = STYLES[style]
    except KeyError:
        raise InvalidParameterError(f"unknown style {style!r}; choose from {', '.join(STYLES)}") from None
    if not seconds > 0:
        raise InvalidParameterError("duration must be positive")
    rng = np.random.default_rng(seed)
    n = int(round(seconds * rate))
    t = np.arange(n) / rate
    y = np.zeros(n)

    note_len = int(st.note_seconds * rate)
    fade = max(1, note_len // 8)
    n_notes = -(-n // note_len) + 1
    phase = rng.uniform(0, 2 * np.pi)
    for k in range(n_notes):
        start = k * note_len
        stop = min(start + note_len + fade, n)
        if start >= n:
            break
        m = stop - start
        f = st.centre_hz * 2 ** (rng.choice(_SCALE) / 12)
        # slight vibrato keeps the tone from being perfectly periodic
        vib = 1 + 0.004 * np.sin(2 * np.pi * rng.uniform(4, 6) * t[start:stop])
        ph = phase + 2 * np.pi * np.cumsum(f * vib) / rate
        phase = float(ph[-1 - min(fade, m - 1)]) if m > fade else float(ph[-1])
        tone = sum(h * np.sin((j + 1) * ph) for j, h in enumerate(st.harmonics))
        env = np.full(m, rng.uniform(0.75, 1.0))
        ramp = min(fade, m)
        env[:ramp] *= np.linspace(0.35, 1.0, ramp)
        env[m - ramp:] *= np.linspace(1.0, 0.35, ramp)
        y[start:stop] += env * tone

    noise = rng.standard_normal(n)
    sos = signal.butter(4, [200, 6000], btype="band", output="sos", fs=rate)
    noise = signal.sosfilt(sos, noise)
    noise *= np.sqrt(np.mean(y * y) / np.mean(noise * noise)) * 10 ** (st.noise_db / 20)
    y += noise
    y *= st.peak / np.max(np.abs(y))
    return AudioClip(y, rate)


def default_corpus(seconds: float = 16.0, rate: int = 44100) -> dict[str, AudioClip]:
    """One clip per style with the shipped seeds."""
    return {name: synth_clip(name, seed, seconds, rate) for name, seed in DEFAULT_SEEDS.items()}


def seeded_clips(count: int, seconds: float = 1.0, rate: int = 44100, base_seed: int = 1000) -> list[AudioClip]:
    """``count`` short clips cycling through the styles."""
    names = list(STYLES)
    return [synth_clip(names[i % len(names)], base_seed + i, seconds, rate) for i in range(count)]
