"""Quality and detection metrics."""
from __future__ import annotations

import math

import numpy as np

from .core_signal import AudioClip
from .errors import InvalidParameterError
from .sync_codes import BitSequence

# n1, n2 used by the search-cost comparison table
SEARCH_COST_BASELINES = {
    # scheme: (l1, l2, formula) for the sample-exhaustive methods
    "amplitude-modification": (1020, 1020, "l1*(n1+n2)"),
    "time+fft-domain": (4, 512, "l1*n1+l2*n2"),
    "svd-wavelet": (484, 484, "l1*(n1+n2)"),
}


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, AudioClip) else np.asarray(x, dtype=np.float64)


def snr_measured(original, marked) -> float:
    """``10 log10(sum x^2 / sum (x - x*)^2)``; ``inf`` when the signals are identical."""
    x, y = _samples(original), _samples(marked)
    if x.shape != y.shape:
        raise InvalidParameterError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    p = float(np.dot(x, x))
    if p == 0:
        raise InvalidParameterError("original clip is silent")
    e = x - y
    noise = float(np.dot(e, e))
    if noise == 0:
        return math.inf
    return 10 * math.log10(p / noise)


def snr_predicted(original, s: float) -> float:
    """SNR expected when every sample moves by a uniform amount in [-s/2, s/2]."""
    if not s > 0:
        raise InvalidParameterError("strength must be positive")
    x = _samples(original)
    p = float(np.dot(x, x))
    if p == 0:
        raise InvalidParameterError("original clip is silent")
    return 10 * math.log10(12 * p / (s * s * x.shape[0]))


def ber(reference: BitSequence, extracted: BitSequence) -> float:
    if len(reference) != len(extracted):
        raise InvalidParameterError("bit sequences differ in length")
    if len(reference) == 0:
        return 0.0
    return float(np.count_nonzero(reference.bits != extracted.bits)) / len(reference)


def exhaustive_search_cost(n1: int, n2: int) -> dict[str, int]:
    """Extraction runs needed by sample-by-sample searches to find one code."""
    out = {}
    for name, (l1, l2, formula) in SEARCH_COST_BASELINES.items():
        out[name] = l1 * (n1 + n2) if formula == "l1*(n1+n2)" else l1 * n1 + l2 * n2
    return out
