"""Moving averages, their crossings, and a few basic signal statistics.

All indices are 0-based sample offsets.  For windows ``a < b`` the moving
average ``M_B[i]`` covers samples ``i .. i+b-1`` and is paired in time with
``M_A[i+b-a]`` (same trailing sample).  The crossing test at index ``i``
therefore looks at samples ``i .. i+b``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numba
import numpy as np

from .errors import InvalidParameterError

# largest 16-bit PCM value mapped into the normalized range
PCM_SCALE = 32768
SAMPLE_MAX = 32767 / PCM_SCALE
SAMPLE_MIN = -1.0

# running sums are re-anchored by direct summation this often
DRIFT_RESET = 4096


@dataclass(frozen=True, eq=False)
class AudioClip:
    """Mono audio, samples normalized to [-1, 1)."""

    samples: np.ndarray
    sample_rate: int

    def __post_init__(self):
        x = np.ascontiguousarray(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise InvalidParameterError("AudioClip holds mono audio only")
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise InvalidParameterError(f"bad sample rate {self.sample_rate!r}")
        if x.size and not np.all(np.isfinite(x)):
            raise InvalidParameterError("samples must be finite")
        if x.size and (x.min() < SAMPLE_MIN or x.max() >= 1.0):
            raise InvalidParameterError("samples must lie in [-1, 1); clamp first")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate

    def with_samples(self, samples) -> "AudioClip":
        return AudioClip(samples, self.sample_rate)

    @classmethod
    def from_pcm16(cls, pcm, sample_rate: int) -> "AudioClip":
        return cls(np.asarray(pcm, dtype=np.int16).astype(np.float64) / PCM_SCALE, sample_rate)

    def to_pcm16(self) -> np.ndarray:
        return to_pcm16(self.samples)


def to_pcm16(x: np.ndarray) -> np.ndarray:
    """Round half away from zero and clamp to the int16 range."""
    scaled = np.asarray(x, dtype=np.float64) * PCM_SCALE
    rounded = np.copysign(np.floor(np.abs(scaled) + 0.5), scaled)
    return np.clip(rounded, -32768, 32767).astype(np.int16)


def clamp_samples(x: np.ndarray) -> tuple[np.ndarray, int]:
    """Clamp into the normalized range; returns the clamped copy and how many samples moved."""
    x = np.asarray(x, dtype=np.float64)
    out = np.clip(x, SAMPLE_MIN, SAMPLE_MAX)
    return out, int(np.count_nonzero(out != x))


@dataclass(frozen=True)
class MAParams:
    a: int
    b: int

    def __post_init__(self):
        if int(self.a) != self.a or int(self.b) != self.b:
            raise InvalidParameterError("window lengths must be integers")
        if not 0 < self.a < self.b:
            raise InvalidParameterError(f"need 0 < a < b, got a={self.a}, b={self.b}")

    def check_length(self, n: int) -> None:
        if self.b >= n:
            raise InvalidParameterError(f"window b={self.b} needs a clip longer than {n} samples")


@dataclass(frozen=True, eq=False)
class MASequence:
    values: np.ndarray
    window: int

    def __len__(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class CrossEvent:
    index: int
    gap: int


def _as_array(clip) -> np.ndarray:
    if isinstance(clip, AudioClip):
        return clip.samples
    return np.ascontiguousarray(clip, dtype=np.float64)


def _check_window(n: int, window: int) -> None:
    if int(window) != window or not 1 <= window <= n:
        raise InvalidParameterError(f"window {window!r} outside [1, {n}]")


@numba.njit(cache=True)
def _direct_sums_kernel(x, w, out):
    for i in range(out.shape[0]):
        v = 0.0
        for k in range(i, i + w):
            v += x[k]
        out[i] = v
    return out


@numba.njit(cache=True)
def _running_sums_kernel(x, w, reset, out):
    m = out.shape[0]
    start = 0
    while start < m:
        v = 0.0
        for k in range(start, start + w):
            v += x[k]
        out[start] = v
        stop = min(start + reset, m)
        for i in range(start + 1, stop):
            # v_{i} = v_{i-1} - x_{i-1} + x_{i+w-1}
            v += x[i + w - 1] - x[i - 1]
            out[i] = v
        start = stop
    return out


def window_sums_direct(x: np.ndarray, window: int) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    _check_window(x.shape[0], window)
    return _direct_sums_kernel(x, int(window), np.empty(x.shape[0] - window + 1))


def window_sums_running(x: np.ndarray, window: int, reset: int = DRIFT_RESET) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    _check_window(x.shape[0], window)
    return _running_sums_kernel(x, int(window), int(reset), np.empty(x.shape[0] - window + 1))


def moving_average(clip, window: int) -> MASequence:
    """Mean of every length-``window`` run of samples, each summed from scratch."""
    x = _as_array(clip)
    return MASequence(window_sums_direct(x, window) / window, int(window))


def moving_average_fast(clip, window: int) -> MASequence:
    """Same values as :func:`moving_average`, via the one-in/one-out running sum.

    The running sum is recomputed directly every ``DRIFT_RESET`` steps so
    floating error stays far below 1e-9.
    """
    x = _as_array(clip)
    return MASequence(window_sums_running(x, window) / window, int(window))


def ma_difference(x: np.ndarray, params: MAParams) -> np.ndarray:
    """``D[i] = M_B[i] - M_A[i+b-a]`` for ``i`` in ``0 .. L-b``."""
    x = _as_array(x)
    params.check_length(x.shape[0])
    mb = window_sums_running(x, params.b) / params.b
    ma = window_sums_running(x, params.a) / params.a
    return mb - ma[params.b - params.a:]


def cross_mask(diff: np.ndarray) -> np.ndarray:
    """Boolean mask over ``0 .. len(diff)-2`` marking crossing indices.

    ``diff[i] * diff[i+1] <= 0`` with exact-zero runs collapsed: a run of
    zeros yields one crossing at the index just before it and none inside
    it, and a signal that is zero from the start has no transition at all.
    """
    left = diff[:-1]
    right = diff[1:]
    return (left != 0) & (left * right <= 0)


def cross_indices(clip, params: MAParams, start: int = 0) -> np.ndarray:
    x = _as_array(clip)
    idx = np.flatnonzero(cross_mask(ma_difference(x, params)))
    if start:
        idx = idx[idx >= start]
    return idx


def find_crosses(clip, params: MAParams, start: int = 0) -> Iterator[CrossEvent]:
    """Yield every crossing at or after ``start`` with the samples advanced since the previous one."""
    x = _as_array(clip)
    if not 0 <= start < x.shape[0]:
        raise InvalidParameterError(f"start {start} outside clip of length {x.shape[0]}")
    prev = start
    for i in cross_indices(x, params, start).tolist():
        yield CrossEvent(i, i - prev)
        prev = i


def zero_crossing_count(seq) -> int:
    """Adjacent pairs whose product is <= 0, excluding pairs that are both zero."""
    v = seq.values if isinstance(seq, MASequence) else np.asarray(seq, dtype=np.float64)
    if v.shape[0] == 0:
        raise InvalidParameterError("empty sequence")
    left, right = v[:-1], v[1:]
    return int(np.count_nonzero((left * right <= 0) & ~((left == 0) & (right == 0))))


def energy(x) -> float:
    x = _as_array(x)
    return float(np.dot(x, x))

