"""Blind detection: extract bits at qualifying crossings and find the sync code."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np

from .core_signal import AudioClip, MAParams, cross_mask, ma_difference, window_sums_running
from .errors import InvalidParameterError
from .sync_codes import BitSequence


def extract_bit(u, s: float):
    """+1 when the residual of ``u`` modulo ``s`` is at least ``s/2``, else -1."""
    if not s > 0:
        raise InvalidParameterError("strength must be positive")
    u = np.asarray(u, dtype=np.float64)
    residual = u - np.floor(u / s) * s
    out = np.where(residual >= s / 2, 1, -1)
    return int(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class DetectParams:
    ma: MAParams
    s: float
    code: BitSequence
    threshold: int | None = None
    min_gap: int | None = None
    max_gap: int | None = None

    def __post_init__(self):
        if not self.s > 0:
            raise InvalidParameterError("strength must be positive")
        t = self.match_threshold
        if not 0 <= t <= len(self.code):
            raise InvalidParameterError(f"threshold {t} outside [0, {len(self.code)}]")

    @property
    def match_threshold(self) -> int:
        return len(self.code) if self.threshold is None else int(self.threshold)

    def spacing(self, payload_len: int = 0) -> tuple[int, int]:
        frame = len(self.code) + payload_len
        lo = self.min_gap if self.min_gap is not None else frame // 2
        hi = self.max_gap if self.max_gap is not None else 2 * frame
        if not lo < hi:
            raise InvalidParameterError(f"need min_gap < max_gap, got {lo}, {hi}")
        return lo, hi


@dataclass
class DetectionReport:
    bits: np.ndarray
    cross_indices: np.ndarray
    correlation: np.ndarray
    positions: list[int] = field(default_factory=list)
    flagged: list[int] = field(default_factory=list)
    raw_matches: int = 0
    extraction_ops: int = 0
    payloads: list[np.ndarray] = field(default_factory=list)
    payload_ber: float | None = None

    @property
    def detected(self) -> int:
        return len(self.positions)

    def sample_positions(self) -> list[int]:
        """Crossing index of the first sync bit of every accepted code."""
        return [int(self.cross_indices[p]) for p in self.positions]

    def lines(self) -> list[str]:
        out = [
            f"extracted_bits={self.bits.shape[0]}",
            f"extraction_ops={self.extraction_ops}",
            f"raw_matches={self.raw_matches}",
            f"detected={self.detected}",
            "positions=" + ",".join(str(p) for p in self.positions),
            "sample_positions=" + ",".join(str(p) for p in self.sample_positions()),
            "flagged=" + ",".join(str(p) for p in self.flagged),
        ]
        if self.payload_ber is not None:
            out.append(f"payload_ber={self.payload_ber:.6f}")
        for k, pl in enumerate(self.payloads):
            out.append(f"payload[{k}]=" + "".join("1" if v > 0 else "0" for v in pl.tolist()))
        return out


def qualifying_crosses(x, ma: MAParams, start: int = 0) -> np.ndarray:
    """Crossings where a bit is read: more than ``b`` samples after the last one read."""
    if isinstance(x, AudioClip):
        x = x.samples
    crosses = np.flatnonzero(cross_mask(ma_difference(x, ma)))
    out = []
    anchor = start
    b = ma.b
    for c in crosses.tolist():
        if c < start:
            continue
        if c - anchor > b:
            out.append(c)
            anchor = c
    return np.asarray(out, dtype=np.int64)


def _extract(clip: AudioClip, params: DetectParams) -> tuple[np.ndarray, np.ndarray]:
    x = clip.samples
    if len(clip) <= params.ma.b + 1:
        return np.empty(0, dtype=np.int8), np.empty(0, dtype=np.int64)
    idx = qualifying_crosses(x, params.ma)
    if idx.size == 0:
        return np.empty(0, dtype=np.int8), idx
    mb = window_sums_running(x, params.ma.b) / params.ma.b
    bits = extract_bit(mb[idx + 1], params.s).astype(np.int8)
    return bits, idx


def scan_and_extract(clip: AudioClip, params: DetectParams) -> Iterator[tuple[int, int]]:
    """Yield ``(bit, crossing index)`` for every qualifying crossing."""
    bits, idx = _extract(clip, params)
    yield from zip(bits.tolist(), idx.tolist())


def correlation_trace(bits: np.ndarray, code: BitSequence) -> np.ndarray:
    """``r[k] = sum_i S[i] * m[k + i]``: correlation of the code with the bits starting at ``k``."""
    m = np.asarray(bits, dtype=np.int64)
    s = code.bits.astype(np.int64)
    if m.shape[0] < s.shape[0]:
        return np.empty(0, dtype=np.int64)
    return np.correlate(m, s, mode="valid")


def locate_sync(bits, params: DetectParams, cross_indices=None, payload_len: int = 0) -> DetectionReport:
    """Accept positions whose correlation reaches the threshold, then apply the spacing rule.

    Positions index the extracted stream at the first sync bit.  An
    acceptance closer than ``min_gap`` to the previously kept one is
    dropped; kept ones farther than ``max_gap`` from both neighbours are
    flagged.
    """
    m = np.asarray(bits, dtype=np.int8)
    l = len(params.code)
    r = correlation_trace(m, params.code)
    need = 2 * params.match_threshold - l
    hits = np.flatnonzero(r >= need).tolist()
    lo, hi = params.spacing(payload_len)
    kept: list[int] = []
    for h in hits:
        if kept and h - kept[-1] < lo:
            continue
        kept.append(h)
    flagged = []
    if len(kept) > 1:
        for j, p in enumerate(kept):
            left = p - kept[j - 1] if j > 0 else None
            right = kept[j + 1] - p if j + 1 < len(kept) else None
            gaps = [g for g in (left, right) if g is not None]
            if all(g > hi for g in gaps):
                flagged.append(p)
    ci = np.asarray(cross_indices if cross_indices is not None else np.arange(m.shape[0]), dtype=np.int64)
    return DetectionReport(bits=m, cross_indices=ci, correlation=r, positions=kept, flagged=flagged,
                           raw_matches=len(hits), extraction_ops=int(m.shape[0]))


def detect(clip: AudioClip, params: DetectParams, payload_len: int = 0, reference: BitSequence | None = None) -> DetectionReport:
    bits, idx = _extract(clip, params)
    report = locate_sync(bits, params, idx, payload_len)
    l = len(params.code)
    if payload_len:
        for p in report.positions:
            chunk = bits[p + l:p + l + payload_len]
            if chunk.shape[0] == payload_len:
                report.payloads.append(chunk.copy())
        if reference is not None and report.payloads:
            if len(reference) != payload_len:
                raise InvalidParameterError("reference payload length differs from payload_len")
            ref = reference.bits
            errs = sum(int(np.count_nonzero(pl != ref)) for pl in report.payloads)
            report.payload_ber = errs / (payload_len * len(report.payloads))
    return report
