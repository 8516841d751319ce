"""QIM embedding of synchronization codes at moving-average crossings.

The embedder walks the same qualifying crossings the detector reads, so
every embedded bit is found again at its crossing ``c``.  The bit lives in
the mean ``M_B[c+1]`` of samples ``c+1 .. c+b``, which is moved onto the
lattice of that bit by adding a shift level to the samples.

The shift is one continuous piecewise-constant signal: it starts at zero,
changes once per embedded bit, and its last level runs to the end of the
clip.  Each change happens at some position between the end of the previous
window and ``c+1``, either as a step or, with smoothing, as a linear ramp
that may reach into the window; the new level is then solved so the window
mean still lands exactly on the lattice.  A change perturbs ``M_B - M_A``
only where windows straddle it, and a position is accepted only when every
sign there is kept, so the crossing set of the marked clip equals the
original one.

When no position works for the nearest lattice point its two neighbours are
tried.  If that fails too, a first bit waits for the next crossing, a sync
bit abandons the frame, and a payload bit is left unplaced while the frame
goes on.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .core_signal import (
    AudioClip,
    MAParams,
    clamp_samples,
    cross_mask,
    ma_difference,
    moving_average_fast,
    window_sums_running,
    zero_crossing_count,
)
from .detector import qualifying_crosses
from .errors import InsufficientCapacityError, InvalidParameterError
from .sync_codes import BitSequence

log = logging.getLogger(__name__)

SMOOTHING_MODES = {
    # mode: (smooth sync bits, smooth payload bits)
    "EA": (False, False),
    "EB": (False, True),
    "EC": (True, True),
}

# magnitude below which a perturbed MA difference is not trusted to keep its sign
SIGN_MARGIN = 1e-12
# cap on candidate boundary placements examined for one transition
MAX_PLACEMENT_TRIES = 400


@dataclass(frozen=True)
class EmbedParams:
    ma: MAParams
    s: float
    t_n: int = 5

    def __post_init__(self):
        if not self.s > 0:
            raise InvalidParameterError(f"embedding strength must be positive, got {self.s}")
        if int(self.t_n) != self.t_n or self.t_n < 0:
            raise InvalidParameterError(f"ramp length must be a non-negative integer, got {self.t_n}")

    @property
    def offsets(self) -> dict[int, float]:
        return {-1: 3 * self.s / 4, 1: self.s / 4}


@dataclass(frozen=True)
class FrameLayout:
    sync: BitSequence
    payload: BitSequence = field(default_factory=lambda: BitSequence(np.array([], dtype=np.int8)))
    repeat: bool = True

    def __post_init__(self):
        if len(self.sync) < 1:
            raise InvalidParameterError("sync code needs at least one bit")

    @property
    def frame_bits(self) -> np.ndarray:
        return np.concatenate([self.sync.bits, self.payload.bits]).astype(np.int64)

    def __len__(self) -> int:
        return len(self.sync) + len(self.payload)


@dataclass
class EmbeddedBit:
    cross: int
    bit: int
    shift: float
    kind: str
    frame: int
    position: int
    start: int = -1
    end: int = -1


@dataclass(frozen=True)
class Transition:
    """Shift change starting at ``position``; the new level is reached at ``position + width - 1``."""

    position: int
    before: float
    after: float
    width: int


@dataclass
class EmbedRecord:
    bits: list[EmbeddedBit] = field(default_factory=list)
    transitions: list[Transition] = field(default_factory=list)
    codes: list[int] = field(default_factory=list)
    frames: list[tuple[int, int]] = field(default_factory=list)
    aborted_frames: int = 0
    skipped_first_bits: int = 0
    relocated_transitions: int = 0
    alternate_levels: int = 0
    unplaced_payload_bits: int = 0
    clamped_samples: int = 0

    @property
    def bits_embedded(self) -> int:
        return len(self.bits)

    @property
    def codes_embedded(self) -> int:
        """Sync codes whose every bit was embedded (the payload may be cut short)."""
        return len(self.codes)


def _round_half_away(v):
    return np.copysign(np.floor(np.abs(v) + 0.5), v)


def quantize_bit(u, bit, s: float):
    """Snap ``u`` to the nearest point of the lattice carrying ``bit``.

    Bit +1 lives on ``m*s - s/4`` and bit -1 on ``m*s - 3s/4``.
    """
    if not s > 0:
        raise InvalidParameterError("strength must be positive")
    bit = np.asarray(bit)
    offset = np.where(bit > 0, s / 4, 3 * s / 4)
    out = _round_half_away((np.asarray(u, dtype=np.float64) + offset) / s) * s - offset
    return float(out) if out.ndim == 0 else out


def ramp_shifts(c_prev: float, c_cur: float, t_n: int) -> np.ndarray:
    """Shifts ``y(x) = (c - c')x/T_N + c'`` for ``x = 0 .. T_N``."""
    if t_n < 1:
        raise InvalidParameterError("ramp length must be >= 1")
    x = np.arange(t_n + 1)
    return (c_cur - c_prev) * x / t_n + c_prev


def smooth_boundary(clip: AudioClip, boundary: int, c_prev: float, c_cur: float, t_n: int) -> AudioClip:
    """Replace a hard shift step at ``boundary`` by a linear ramp.

    ``clip`` is assumed to carry shift ``c_prev`` before ``boundary`` and
    ``c_cur`` from it on; the first ``t_n`` samples of the current segment
    are re-shifted onto the ramp so sample ``boundary + t_n - 1`` carries the
    full ``c_cur``.
    """
    if t_n < 1 or boundary < 1 or boundary + t_n > len(clip):
        raise InvalidParameterError("ramp does not fit inside the clip")
    ramp = ramp_shifts(c_prev, c_cur, t_n)[1:]
    x = clip.samples.copy()
    x[boundary:boundary + t_n] += ramp - c_cur
    x, n = clamp_samples(x)
    if n:
        log.warning("smoothing clamped %d samples", n)
    return clip.with_samples(x)


class _Embedder:
    """Single pass over the qualifying crossings of one clip."""

    def __init__(self, clip: AudioClip, params: EmbedParams, smooth_sync: bool, smooth_payload: bool):
        self.x = clip.samples
        self.n = len(clip)
        self.p = params
        self.a, self.b = params.ma.a, params.ma.b
        params.ma.check_length(self.n)
        self.diff = ma_difference(self.x, params.ma)
        self.sign = np.sign(self.diff)
        self.crosses = qualifying_crosses(self.x, params.ma)
        self.mb = window_sums_running(self.x, self.b) / self.b
        self.shift = np.zeros(self.n)
        self.filled = 0      # shift[:filled] is final
        self.smooth = {"sync": smooth_sync, "payload": smooth_payload}
        self.record = EmbedRecord()

    def width(self, kind: str) -> int:
        if self.smooth[kind] and self.p.t_n >= 1:
            return int(self.p.t_n)
        return 1

    def _write(self, beta: int, width: int, before: float, after: float, stop: int) -> None:
        """Level ``before`` up to ``beta``, a ramp over ``width`` samples, then ``after`` until ``stop``."""
        self.shift[self.filled:beta] = before
        self.shift[beta:beta + width] = ramp_shifts(before, after, width)[1:]
        self.shift[beta + width:stop] = after

    def _signs_kept(self, q0: int, q1: int) -> bool:
        """True when ``M_B - M_A`` of the shifted signal keeps its sign at indices ``q0 .. q1``."""
        q0 = max(q0, 0)
        q1 = min(q1, self.diff.shape[0] - 1)
        if q1 < q0:
            return True
        a, b = self.a, self.b
        seg = self.x[q0:q1 + b] + self.shift[q0:q1 + b]
        cs = np.concatenate(([0.0], np.cumsum(seg)))
        q = np.arange(q1 - q0 + 1)
        d = (cs[q + b] - cs[q]) / b - (cs[q + b] - cs[q + b - a]) / a
        ref = self.sign[q0:q1 + 1]
        return bool(np.all((ref != 0) & (np.sign(d) == ref) & (np.abs(d) > SIGN_MARGIN)))

    def _window_weight(self, beta: int, w: int, c: int) -> float:
        """Mean weight of the new level over samples ``c+1 .. c+b`` when it starts at ``beta``."""
        j = np.arange(c + 1, c + self.b + 1)
        g = np.clip((j - beta + 1) / w, 0.0, 1.0)
        return float(g.mean())

    def place(self, left: float, start: int, u: float, bit: int, kind: str, c: int) -> Transition | None:
        """Move from ``left`` to a level that puts ``M_B[c+1]`` on the lattice of ``bit``.

        The change starts at some ``beta`` in ``start .. c+1``; a ramp may reach
        into the window ``c+1 .. c+b``, in which case the level is solved so the
        window mean still lands exactly on the lattice.  Only the D indices whose
        windows see a non-constant shift can change, so those are the ones
        checked.  The nearest lattice point is tried at every position first,
        then its two neighbours.  On success the shift is committed through
        ``c + b``.
        """
        b, s = self.b, self.p.s
        w = self.width(kind)
        stop = c + b + 1
        tries = 0
        for choice in range(3):
            for beta in range(start, c + 2):
                weight = self._window_weight(beta, w, c)
                base = u + (1 - weight) * left
                q = quantize_bit(base, bit, s)
                if choice:
                    alt = sorted((q + s, q - s), key=lambda v: abs((v - base) / weight - left))
                    q = alt[choice - 1]
                level = (q - base) / weight
                if abs(level) > s:
                    continue
                tries += 1
                if tries > MAX_PLACEMENT_TRIES:
                    return None
                self._write(beta, w, left, level, stop)
                if self._signs_kept(beta - b + 1, beta + w - 2):
                    self.filled = stop
                    return Transition(beta, left, level, w)
        return None

    def run(self, layout: FrameLayout) -> tuple[np.ndarray, EmbedRecord]:
        b, s = self.b, self.p.s
        frame_bits = layout.frame_bits
        n_sync = len(layout.sync)
        rec = self.record

        level = 0.0
        prev: int | None = None
        open_bit: EmbeddedBit | None = None
        k = 0
        frame_no = 0
        first_cross = -1

        for c in self.crosses.tolist():
            start = 0 if prev is None else prev + b + 1
            prev = c
            bit = int(frame_bits[k])
            kind = "sync" if k < n_sync else "payload"
            t = self.place(level, start, float(self.mb[c + 1]), bit, kind, c)
            if t is None:
                if k == 0:
                    rec.skipped_first_bits += 1
                    continue
                if k < n_sync:
                    rec.aborted_frames += 1
                    k = 0
                    continue
                # a payload bit that cannot be placed is left to chance; the frame goes on
                rec.unplaced_payload_bits += 1
                k += 1
                if k == len(frame_bits):
                    rec.frames.append((first_cross, c))
                    frame_no += 1
                    k = 0
                    if not layout.repeat:
                        break
                continue
            if t.position != start:
                rec.relocated_transitions += 1
            if abs(t.after) > s / 2:
                rec.alternate_levels += 1
            if t.after != t.before:
                rec.transitions.append(t)
            if open_bit is not None:
                open_bit.end = t.position - 1
            open_bit = EmbeddedBit(cross=c, bit=bit, shift=float(t.after), kind=kind, frame=frame_no,
                                   position=k, start=t.position)
            rec.bits.append(open_bit)
            level = t.after
            if k == 0:
                first_cross = c
            k += 1
            if k == n_sync:
                rec.codes.append(first_cross)
            if k == len(frame_bits):
                rec.frames.append((first_cross, c))
                frame_no += 1
                k = 0
                if not layout.repeat:
                    break
        if k:
            rec.aborted_frames += 1

        self.shift[self.filled:] = level
        if open_bit is not None:
            open_bit.end = self.n - 1
        marked, rec.clamped_samples = clamp_samples(self.x + self.shift)
        if rec.clamped_samples:
            log.warning("embedding clamped %d samples", rec.clamped_samples)
        return marked, rec


def _resolve_smoothing(smoothing) -> tuple[bool, bool]:
    if isinstance(smoothing, str):
        try:
            return SMOOTHING_MODES[smoothing.upper()]
        except KeyError:
            raise InvalidParameterError(f"unknown smoothing mode {smoothing!r}") from None
    if isinstance(smoothing, bool):
        return smoothing, smoothing
    sync_on, payload_on = smoothing
    return bool(sync_on), bool(payload_on)


def embed_frames(clip: AudioClip, layout: FrameLayout, params: EmbedParams, smoothing="EA") -> tuple[AudioClip, EmbedRecord]:
    """Embed sync + payload frames, tiled over the clip when ``layout.repeat``.

    ``smoothing`` is a mode name (EA: none, EB: payload only, EC: both) or a
    ``(sync, payload)`` pair of flags.
    """
    smooth_sync, smooth_payload = _resolve_smoothing(smoothing)
    marked, record = _Embedder(clip, params, smooth_sync, smooth_payload).run(layout)
    if record.codes_embedded == 0:
        raise InsufficientCapacityError(
            f"clip of {len(clip)} samples hosts 0 complete codes of {len(layout)} bits", record)
    return clip.with_samples(marked), record


def embed_sync(clip: AudioClip, code: BitSequence, params: EmbedParams, smoothing="EA") -> tuple[AudioClip, EmbedRecord]:
    """Embed one copy of ``code`` at the first crossings that qualify."""
    return embed_frames(clip, FrameLayout(code, repeat=False), params, smoothing)


# -- parameter selection -------------------------------------------------------

@dataclass
class ParamChoice:
    zero_crossings: int
    num: float
    b: int
    a: int
    s: float
    s_required: float
    s_cap: float
    percentiles: dict[str, float]
    params: EmbedParams

    def lines(self) -> list[str]:
        out = [
            f"zero_crossings_M10={self.zero_crossings}",
            f"num={self.num:.4f}",
            f"b={self.b}",
            f"a={self.a}",
        ]
        for name, v in self.percentiles.items():
            out.append(f"p99[{name}]={v:.6g}")
        out += [f"s_required={self.s_required:.6g}", f"s_cap={self.s_cap:.6g}", f"s={self.s:.6g}"]
        return out


DEFAULT_CALIBRATION = ("awgn:45:seed=11", "lowpass:6000", "requantize:8", "jitter:1000:seed=13")


def _track_offsets(orig: np.ndarray, attacked: np.ndarray, points: np.ndarray,
                   max_lag: int = 64, half_width: int = 256, step: int = 8) -> np.ndarray:
    """Local delay of ``attacked`` against ``orig`` at each of ``points`` (increasing).

    The first delay is searched over ``±max_lag``; each later one within
    ``±step`` of the previous, which follows drifting delays such as those of
    time scaling or dropped samples.
    """
    n0, n1 = orig.shape[0], attacked.shape[0]
    out = np.zeros(points.shape[0], dtype=np.int64)
    offset = None
    for k, i in enumerate(points.tolist()):
        lo, hi = max(i - half_width, 0), min(i + half_width, n0)
        ref = orig[lo:hi]
        lags = range(-max_lag, max_lag + 1) if offset is None else range(offset - step, offset + step + 1)
        best, best_v = offset if offset is not None else 0, -np.inf
        for lag in lags:
            if lo + lag < 0 or hi + lag > n1:
                continue
            seg = attacked[lo + lag:hi + lag]
            v = float(np.dot(ref, seg)) / (np.sqrt(float(np.dot(seg, seg))) + 1e-12)
            if v > best_v:
                best, best_v = lag, v
        offset = best
        out[k] = best
    return out


def _matched_mean_differences(orig: np.ndarray, attacked: np.ndarray, ma: MAParams, max_lag: int = 64) -> np.ndarray:
    """Differences of ``M_B`` at matching extraction crossings of two signals.

    Each qualifying crossing of ``orig`` is paired with the crossing of
    ``attacked`` nearest to its locally tracked position, if one lies within
    one sample; unpaired crossings are skipped.
    """
    b = ma.b
    if len(attacked) <= b + 1:
        return np.empty(0)
    src = qualifying_crosses(orig, ma)
    dst = np.flatnonzero(cross_mask(ma_difference(attacked, ma)))
    if src.size == 0 or dst.size == 0:
        return np.empty(0)
    mb0 = window_sums_running(orig, b) / b
    mb1 = window_sums_running(attacked, b) / b
    want = src + _track_offsets(orig, attacked, src, max_lag)
    j = np.clip(np.searchsorted(dst, want), 1, dst.size - 1)
    left, right = dst[j - 1], dst[j]
    near = np.where(np.abs(left - want) <= np.abs(right - want), left, right)
    ok = (np.abs(near - want) <= 1) & (near + 1 < mb1.shape[0])
    return mb1[near[ok] + 1] - mb0[src[ok] + 1]


def explain_params(
    clip: AudioClip,
    calibration_attacks=DEFAULT_CALIBRATION,
    *,
    b_ratio: float = 0.9,
    strength_step: float = 0.001,
    percentile: float = 99.0,
    margin_factor: float = 4.0,
    min_snr_db: float = 25.0,
    t_n: int = 5,
) -> ParamChoice:
    """Pick ``b``, ``a`` and ``s`` for a clip and report how they were derived."""
    from .attacks import apply_chain, parse_attack
    from .metrics import snr_predicted

    zc = zero_crossing_count(moving_average_fast(clip, 10))
    if zc == 0:
        raise InvalidParameterError("clip has no zero crossings (silence?)")
    num = len(clip) / zc
    b = int(np.floor(b_ratio * num))
    a = int(np.floor(2 * b / 3))
    ma = MAParams(a, b)

    pcts: dict[str, float] = {}
    for spec in calibration_attacks:
        spec = parse_attack(spec) if isinstance(spec, str) else spec
        attacked, _ = apply_chain(clip, [spec])
        diffs = _matched_mean_differences(clip.samples, attacked.samples, ma)
        if diffs.size:
            pcts[spec.label] = float(np.percentile(np.abs(diffs), percentile))
    worst = max(pcts.values(), default=0.0)
    steps_needed = np.floor(margin_factor * worst / strength_step + 1e-9) + 1
    s_required = float(steps_needed * strength_step)

    # largest grid strength whose predicted SNR stays at or above the floor
    power = float(np.dot(clip.samples, clip.samples)) / len(clip)
    s_cap_exact = np.sqrt(12 * power / 10 ** (min_snr_db / 10))
    s_cap = max(float(np.floor(s_cap_exact / strength_step + 1e-9) * strength_step), strength_step)
    s = min(s_required, s_cap)
    assert snr_predicted(clip, s) >= min_snr_db or s == strength_step
    return ParamChoice(zc, num, b, a, s, s_required, s_cap, pcts, EmbedParams(ma, s, t_n))


def choose_params(clip: AudioClip, calibration_attacks=DEFAULT_CALIBRATION, **kwargs) -> EmbedParams:
    return explain_params(clip, calibration_attacks, **kwargs).params
