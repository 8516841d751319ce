"""Synchronization codes: Barker codes, m-sequences, correlation, false alarms."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidParameterError

BARKER = {
    2: (1, -1),
    3: (1, 1, -1),
    4: (1, 1, -1, 1),
    5: (1, 1, 1, -1, 1),
    7: (1, 1, 1, -1, -1, 1, -1),
    11: (1, 1, 1, -1, -1, -1, 1, -1, -1, 1, -1),
    13: (1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1),
}

# Fibonacci feedback taps (polynomial exponents) giving maximal period.
PRIMITIVE_TAPS = {
    2: (2, 1),
    3: (3, 2),
    4: (4, 3),
    5: (5, 3),
    6: (6, 5),
    7: (7, 6),
    8: (8, 6, 5, 4),
    9: (9, 5),
    10: (10, 7),
    11: (11, 9),
    12: (12, 11, 10, 4),
    13: (13, 12, 11, 8),
    14: (14, 13, 12, 2),
    15: (15, 14),
    16: (16, 15, 13, 4),
}


@dataclass(frozen=True, eq=False)
class BitSequence:
    """A code whose symbols are all -1 or +1."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 1:
            raise InvalidParameterError("bit sequence must be one-dimensional")
        if b.size and not np.all((b == 1) | (b == -1)):
            raise InvalidParameterError("every symbol must be -1 or +1")
        b = b.astype(np.int8)
        b.setflags(write=False)
        object.__setattr__(self, "bits", b)

    def __len__(self) -> int:
        return self.bits.shape[0]

    def __iter__(self):
        return iter(self.bits.tolist())

    def __eq__(self, other) -> bool:
        return isinstance(other, BitSequence) and np.array_equal(self.bits, other.bits)

    def __hash__(self) -> int:
        return hash(self.bits.tobytes())

    def __neg__(self) -> "BitSequence":
        return BitSequence(-self.bits)

    def __add__(self, other: "BitSequence") -> "BitSequence":
        return BitSequence(np.concatenate([self.bits, other.bits]))

    def __repr__(self) -> str:
        return f"BitSequence({' '.join(str(v) for v in self.bits.tolist())})"

    @classmethod
    def from_binary(cls, bits01: Iterable[int]) -> "BitSequence":
        arr = np.asarray(list(bits01), dtype=np.int8)
        return cls(2 * arr - 1)

    @classmethod
    def from_hex(cls, text: str) -> "BitSequence":
        """Each hex digit gives four bits, most significant first; 1 -> +1, 0 -> -1."""
        text = text.strip().lower()
        if text.startswith("0x"):
            text = text[2:]
        try:
            value = [int(ch, 16) for ch in text]
        except ValueError as exc:
            raise InvalidParameterError(f"not a hex string: {text!r}") from exc
        return cls.from_binary((v >> s) & 1 for v in value for s in (3, 2, 1, 0))

    @classmethod
    def random(cls, n: int, seed: int) -> "BitSequence":
        rng = np.random.default_rng(seed)
        return cls(2 * rng.integers(0, 2, size=n, dtype=np.int8) - 1)

    def to_binary(self) -> np.ndarray:
        return ((self.bits + 1) // 2).astype(np.int8)

    def to_hex(self) -> str:
        b = self.to_binary().tolist()
        b += [0] * (-len(b) % 4)
        return "".join(f"{b[i] * 8 + b[i + 1] * 4 + b[i + 2] * 2 + b[i + 3]:x}" for i in range(0, len(b), 4))


def barker(n: int) -> BitSequence:
    if n not in BARKER:
        raise InvalidParameterError(f"no Barker code of length {n}; known lengths {sorted(BARKER)}")
    return BitSequence(np.array(BARKER[n]))


def default_sync_code() -> BitSequence:
    """13-bit Barker followed by 3-bit Barker (16 bits)."""
    return barker(13) + barker(3)


def _seed_bits(seed, k: int) -> list[int]:
    if isinstance(seed, (int, np.integer)):
        if not 0 <= seed < 2**k:
            raise InvalidParameterError(f"seed {seed} does not fit {k} registers")
        bits = [(int(seed) >> (k - 1 - j)) & 1 for j in range(k)]
    else:
        bits = [int(v) for v in seed]
        if len(bits) != k or any(v not in (0, 1) for v in bits):
            raise InvalidParameterError(f"seed must be {k} bits of 0/1")
    if not any(bits):
        raise InvalidParameterError("LFSR seed must be nonzero")
    return bits


def m_sequence(registers: int, taps: Sequence[int] | None = None, seed=1) -> BitSequence:
    """One period of a maximal-length LFSR sequence, register bit 1 -> +1, 0 -> -1.

    ``taps`` are 1-based register positions fed back by XOR; the new bit is
    shifted in at position 1 and the output is read from position ``registers``.
    The period is verified, so non-primitive taps raise.
    """
    k = int(registers)
    if k < 2:
        raise InvalidParameterError("need at least 2 registers")
    if taps is None:
        if k not in PRIMITIVE_TAPS:
            raise InvalidParameterError(f"no built-in primitive taps for k={k}")
        taps = PRIMITIVE_TAPS[k]
    taps = tuple(int(t) for t in taps)
    if not taps or any(not 1 <= t <= k for t in taps):
        raise InvalidParameterError(f"taps {taps} out of range for {k} registers")

    state = _seed_bits(seed, k)
    initial = list(state)
    period = 2**k - 1
    out = np.empty(period, dtype=np.int8)
    for n in range(period):
        out[n] = state[-1]
        fb = 0
        for t in taps:
            fb ^= state[t - 1]
        state = [fb] + state[:-1]
        if state == initial and n != period - 1:
            raise InvalidParameterError(f"taps {taps} are not primitive: period {n + 1} < {period}")
    if state != initial:
        raise InvalidParameterError(f"taps {taps} are not primitive for k={k}")
    return BitSequence(2 * out - 1)


def cross_correlation(a: BitSequence, b: BitSequence, lag: int, cyclic: bool = False) -> int:
    """``sum_n a[n] * b[n - lag]``.

    Aperiodic by default (terms with ``n - lag`` outside ``b`` are dropped);
    with ``cyclic=True`` the index into ``b`` wraps, which needs equal lengths.
    """
    x = a.bits.astype(np.int64)
    y = b.bits.astype(np.int64)
    if cyclic:
        if x.shape != y.shape:
            raise InvalidParameterError("cyclic correlation needs equal lengths")
        return int(np.dot(x, np.roll(y, lag)))
    n = np.arange(x.shape[0])
    m = n - lag
    ok = (m >= 0) & (m < y.shape[0])
    return int(np.dot(x[ok], y[m[ok]]))


@dataclass(frozen=True)
class FalseAlarmModel:
    length: int
    threshold: int

    def __post_init__(self):
        if not 0 <= self.threshold <= self.length:
            raise InvalidParameterError("need 0 <= t <= l")

    def probability_exact(self) -> Fraction:
        total = sum(comb(self.length, k) for k in range(self.threshold, self.length + 1))
        return Fraction(total, 2**self.length)


def false_alarm_rate(model: FalseAlarmModel) -> float:
    """Chance that ``l`` random bits agree with the code in at least ``t`` places."""
    if model.length > 64:
        raise InvalidParameterError("code lengths above 64 are not supported")
    return float(model.probability_exact())


def parse_code(text: str) -> BitSequence:
    """Bits from a short spec.

    ``barker16`` (13+3 concatenation), ``barkerN``, ``mseq:K[:SEED]``,
    ``hex:...`` or ``bin:0101...``.
    """
    t = text.strip().lower()
    if t == "barker16":
        return default_sync_code()
    if t.startswith("barker"):
        try:
            return barker(int(t[6:]))
        except ValueError:
            raise InvalidParameterError(f"bad code spec {text!r}") from None
    kind, _, rest = t.partition(":")
    if kind == "hex":
        return BitSequence.from_hex(rest)
    if kind == "bin":
        if not rest or set(rest) - {"0", "1"}:
            raise InvalidParameterError(f"not a binary string: {rest!r}")
        return BitSequence.from_binary(int(ch) for ch in rest)
    if kind == "mseq":
        k, _, seed = rest.partition(":")
        try:
            return m_sequence(int(k), seed=int(seed) if seed else 1)
        except ValueError:
            raise InvalidParameterError(f"bad code spec {text!r}") from None
    raise InvalidParameterError(f"unknown code spec {text!r}; use barker16, barkerN, mseq:K, hex:... or bin:...")
