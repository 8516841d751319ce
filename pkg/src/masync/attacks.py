"""Seedable signal-processing attacks for robustness runs.

Every attack maps an :class:`AudioClip` to a new clip and clamps the result
into the normalized sample range.  Attack chains are written as strings such
as ``"awgn:55:seed=7"`` or ``"lowpass:8000:order=6"`` and applied left to right.
"""
from __future__ import annotations

import logging
import os
import shutil
import subprocess
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
from scipy import signal

from .core_signal import AudioClip, clamp_samples
from .errors import ExternalToolMissing, InvalidParameterError

log = logging.getLogger(__name__)

MP3_TOOL_ENV = "MASYNC_LAME"
MAX_RATE_FACTOR = 16


def _finish(clip: AudioClip, y: np.ndarray, what: str) -> AudioClip:
    y, n = clamp_samples(y)
    if n:
        log.info("%s clamped %d samples", what, n)
    return AudioClip(y, clip.sample_rate)


def awgn(clip: AudioClip, snr_db: float, seed: int) -> AudioClip:
    """Add white Gaussian noise scaled to hit ``snr_db`` exactly (before clamping)."""
    if np.isinf(snr_db) and snr_db > 0:
        return clip
    if not np.isfinite(snr_db):
        raise InvalidParameterError(f"bad SNR {snr_db}")
    x = clip.samples
    power = float(np.dot(x, x))
    if power == 0:
        raise InvalidParameterError("SNR is undefined for a silent clip")
    noise = np.random.default_rng(seed).standard_normal(x.shape[0])
    noise -= noise.mean()
    noise *= np.sqrt(power / (float(np.dot(noise, noise)) * 10 ** (snr_db / 10)))
    return _finish(clip, x + noise, "awgn")


def requantize(clip: AudioClip, bits: int) -> AudioClip:
    """Round onto ``2**bits`` uniform levels over [-1, 1) and back to floats."""
    if int(bits) != bits or not 2 <= bits <= 16:
        raise InvalidParameterError(f"bit depth {bits} outside [2, 16]")
    levels = 2 ** (int(bits) - 1)
    v = clip.samples * levels
    q = np.copysign(np.floor(np.abs(v) + 0.5), v)
    q = np.clip(q, -levels, levels - 1)
    return AudioClip(q / levels, clip.sample_rate)


def _kaiser_lowpass(up: int, down: int, taps_per_phase: int, beta: float) -> np.ndarray:
    factor = max(up, down)
    numtaps = taps_per_phase * factor + 1
    # resample_poly scales the taps by `up` itself
    return signal.firwin(numtaps | 1, 1.0 / factor, window=("kaiser", beta))


def _rational_resample(x: np.ndarray, up: int, down: int, taps_per_phase: int, beta: float) -> np.ndarray:
    if up == down:
        return x.copy()
    h = _kaiser_lowpass(up, down, taps_per_phase, beta)
    return signal.resample_poly(x, up, down, window=h)


def _fit_length(y: np.ndarray, n: int) -> np.ndarray:
    if y.shape[0] >= n:
        return y[:n]
    return np.concatenate([y, np.zeros(n - y.shape[0])])


def resample(clip: AudioClip, intermediate_rate: int, taps_per_phase: int = 32, beta: float = 8.0) -> AudioClip:
    """Convert to ``intermediate_rate`` and back with Kaiser-windowed sinc filters."""
    ratio = Fraction(int(intermediate_rate), clip.sample_rate)
    if ratio <= 0 or ratio.numerator > MAX_RATE_FACTOR or ratio.denominator > MAX_RATE_FACTOR:
        raise InvalidParameterError(
            f"rate ratio {intermediate_rate}/{clip.sample_rate} is not a small-integer ratio")
    if ratio == 1:
        return clip
    mid = _rational_resample(clip.samples, ratio.numerator, ratio.denominator, taps_per_phase, beta)
    back = _rational_resample(mid, ratio.denominator, ratio.numerator, taps_per_phase, beta)
    return _finish(clip, _fit_length(back, len(clip)), "resample")


def lowpass_butterworth(clip: AudioClip, order: int, cutoff_hz: float) -> AudioClip:
    """Causal Butterworth low-pass (bilinear design, second-order sections); delay is kept."""
    if int(order) != order or order < 2 or order % 2:
        raise InvalidParameterError(f"order must be even and >= 2, got {order}")
    if not 0 < cutoff_hz < clip.sample_rate / 2:
        raise InvalidParameterError(f"cutoff {cutoff_hz} Hz outside (0, {clip.sample_rate / 2})")
    sos = signal.butter(int(order), cutoff_hz, btype="low", output="sos", fs=clip.sample_rate)
    return _finish(clip, signal.sosfilt(sos, clip.samples), "lowpass")


def crop_random(clip: AudioClip, fraction: float, seed: int, segments: int = 10) -> AudioClip:
    """Remove ``segments`` random non-overlapping pieces totalling ``round(fraction * L)`` samples."""
    if not 0 <= fraction < 1:
        raise InvalidParameterError(f"crop fraction {fraction} outside [0, 1)")
    n = len(clip)
    total = int(round(fraction * n))
    if total == 0:
        return clip
    segments = max(1, min(int(segments), total))
    sizes = np.full(segments, total // segments)
    sizes[: total % segments] += 1
    rng = np.random.default_rng(seed)
    # cut points in the kept signal; removed pieces are inserted there
    kept = n - total
    cuts = np.sort(rng.integers(0, kept + 1, size=segments))
    keep = np.ones(n, dtype=bool)
    offset = 0
    for cut, size in zip(cuts.tolist(), sizes.tolist()):
        start = cut + offset
        keep[start:start + size] = False
        offset += size
    return AudioClip(clip.samples[keep], clip.sample_rate)


def jitter(clip: AudioClip, period_n: int, seed: int) -> AudioClip:
    """Delete one random sample from every full block of ``period_n`` samples."""
    if int(period_n) != period_n or period_n < 2:
        raise InvalidParameterError(f"jitter period must be an integer >= 2, got {period_n}")
    n = len(clip)
    blocks = max(1, n // int(period_n))
    span = min(int(period_n), n)
    rng = np.random.default_rng(seed)
    drop = np.arange(blocks) * int(period_n) + rng.integers(0, span, size=blocks)
    keep = np.ones(n, dtype=bool)
    keep[drop] = False
    return AudioClip(clip.samples[keep], clip.sample_rate)


def time_scale(clip: AudioClip, percent: float, taps_per_phase: int = 32, beta: float = 8.0) -> AudioClip:
    """Stretch (+) or compress (-) duration by resampling; pitch moves with tempo."""
    if not -15 <= percent <= 15:
        raise InvalidParameterError(f"scale {percent}% outside [-15, 15]")
    if percent == 0:
        return clip
    factor = 1 + percent / 100
    target = int(round(len(clip) * factor))
    ratio = Fraction(factor).limit_denominator(1000)
    y = _rational_resample(clip.samples, ratio.numerator, ratio.denominator, taps_per_phase, beta)
    return _finish(clip, _fit_length(y, target), "tsm")


def mp3_tool() -> str | None:
    path = os.environ.get(MP3_TOOL_ENV)
    if path:
        return path if Path(path).exists() else None
    return shutil.which("lame")


def mp3_roundtrip(clip: AudioClip, kbps: int) -> AudioClip:
    """Encode and decode through an external LAME binary."""
    from .wavio import read_wav, write_wav

    tool = mp3_tool()
    if tool is None:
        raise ExternalToolMissing(f"no MP3 encoder; set {MP3_TOOL_ENV} or put 'lame' on PATH")
    with tempfile.TemporaryDirectory() as tmp:
        src, enc, dec = (Path(tmp) / name for name in ("in.wav", "x.mp3", "out.wav"))
        write_wav(src, clip)
        subprocess.run([tool, "--quiet", "-b", str(int(kbps)), str(src), str(enc)], check=True)
        subprocess.run([tool, "--quiet", "--decode", str(enc), str(dec)], check=True)
        return read_wav(dec)


# -- attack specs ----------------------------------------------------------

KINDS = ("none", "awgn", "requantize", "resample", "lowpass", "crop", "jitter", "tsm", "mp3")
NEEDS_SEED = ("awgn", "crop", "jitter")


@dataclass(frozen=True)
class AttackSpec:
    kind: str
    value: float | None = None
    options: tuple[tuple[str, float], ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidParameterError(f"unknown attack {self.kind!r}; choose from {', '.join(KINDS)}")
        if self.kind != "none" and self.value is None:
            raise InvalidParameterError(f"attack {self.kind} needs a parameter")
        if self.kind in NEEDS_SEED and "seed" not in dict(self.options):
            raise InvalidParameterError(f"attack {self.kind} needs seed=N")

    def opt(self, name: str, default=None):
        return dict(self.options).get(name, default)

    @property
    def label(self) -> str:
        if self.kind == "none":
            return "none"
        parts = [self.kind, _fmt(self.value)] + [f"{k}={_fmt(v)}" for k, v in self.options]
        return ":".join(parts)

    def apply(self, clip: AudioClip) -> AudioClip:
        k, v = self.kind, self.value
        if k == "none":
            return clip
        if k == "awgn":
            return awgn(clip, v, int(self.opt("seed")))
        if k == "requantize":
            return requantize(clip, int(v))
        if k == "resample":
            return resample(clip, int(v), int(self.opt("taps", 32)))
        if k == "lowpass":
            return lowpass_butterworth(clip, int(self.opt("order", 6)), v)
        if k == "crop":
            return crop_random(clip, v, int(self.opt("seed")), int(self.opt("segments", 10)))
        if k == "jitter":
            return jitter(clip, int(v), int(self.opt("seed")))
        if k == "tsm":
            return time_scale(clip, v)
        return mp3_roundtrip(clip, int(v))


def _fmt(v) -> str:
    return str(int(v)) if float(v).is_integer() else repr(float(v))


def parse_attack(text: str) -> AttackSpec:
    """Parse ``kind[:value][:key=val ...]``."""
    parts = [p for p in text.strip().split(":") if p]
    if not parts:
        raise InvalidParameterError("empty attack spec")
    kind = parts[0].lower()
    value = None
    opts = []
    for p in parts[1:]:
        try:
            if "=" in p:
                key, raw = p.split("=", 1)
                opts.append((key.strip().lower(), float(raw)))
            elif value is None:
                value = float(p)
            else:
                raise InvalidParameterError(f"unexpected field {p!r} in {text!r}")
        except ValueError as exc:
            raise InvalidParameterError(f"bad number in attack spec {text!r}") from exc
    return AttackSpec(kind, value, tuple(opts))


def apply_chain(clip: AudioClip, specs) -> tuple[AudioClip, list[str]]:
    """Apply attacks left to right; returns the result and the provenance labels."""
    labels = []
    for spec in specs:
        spec = parse_attack(spec) if isinstance(spec, str) else spec
        clip = spec.apply(clip)
        labels.append(spec.label)
    return clip, labels
