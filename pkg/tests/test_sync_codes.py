from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from masync.errors import InvalidParameterError
from masync.sync_codes import (
    BARKER,
    PRIMITIVE_TAPS,
    BitSequence,
    FalseAlarmModel,
    barker,
    cross_correlation,
    default_sync_code,
    false_alarm_rate,
    m_sequence,
    parse_code,
)

bit_lists = st.lists(st.sampled_from([-1, 1]), min_size=1, max_size=80)


def test_barker_13_and_3():
    assert barker(13).bits.tolist() == [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1]
    assert barker(3).bits.tolist() == [1, 1, -1]


def test_barker_bad_length():
    with pytest.raises(InvalidParameterError):
        barker(6)


def test_default_code():
    code = default_sync_code()
    assert code.bits.tolist() == [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, -1]
    assert len(code) == 16
    assert cross_correlation(code, code, 0) == 16


@pytest.mark.parametrize("n", sorted(BARKER))
def test_barker_sidelobes(n):
    code = barker(n)
    assert cross_correlation(code, code, 0) == n
    for j in range(-n + 1, n):
        if j:
            assert abs(cross_correlation(code, code, j)) <= 1


def test_barker_against_negation():
    assert cross_correlation(barker(13), -barker(13), 0) == -13


def test_bit_sequence_validation():
    with pytest.raises(InvalidParameterError):
        BitSequence(np.array([1, 0, -1]))
    with pytest.raises(InvalidParameterError):
        BitSequence(np.ones((2, 2)))


def test_hex_and_binary_roundtrip():
    seq = BitSequence.from_hex("a5")
    assert seq.to_binary().tolist() == [1, 0, 1, 0, 0, 1, 0, 1]
    assert seq.bits.tolist() == [1, -1, 1, -1, -1, 1, -1, 1]
    assert seq.to_hex() == "a5"
    with pytest.raises(InvalidParameterError):
        BitSequence.from_hex("xyz")


def test_random_is_seeded():
    assert BitSequence.random(50, 3) == BitSequence.random(50, 3)
    assert BitSequence.random(50, 3) != BitSequence.random(50, 4)


def test_parse_code():
    assert parse_code("barker16") == default_sync_code()
    assert parse_code("barker7") == barker(7)
    assert parse_code("bin:101") == BitSequence(np.array([1, -1, 1]))
    assert len(parse_code("mseq:5")) == 31
    for bad in ("barker6", "bin:12", "gold:5", "mseq:x"):
        with pytest.raises(InvalidParameterError):
            parse_code(bad)


def test_two_register_lfsr_by_hand():
    # state (1,0) -> out 0, feedback 1 -> (1,1) -> out 1, fb 0 -> (0,1) -> out 1, fb 1 -> (1,0)
    seq = m_sequence(2, taps=(1, 2), seed=(1, 0))
    assert seq.bits.tolist() == [-1, 1, 1]


def test_six_registers_give_63_bits():
    assert len(m_sequence(6)) == 63


@pytest.mark.parametrize("k", sorted(PRIMITIVE_TAPS))
def test_m_sequence_balance_and_autocorrelation(k):
    seq = m_sequence(k)
    n = 2**k - 1
    assert len(seq) == n
    assert int(np.count_nonzero(seq.bits == 1)) == 2 ** (k - 1)
    if k <= 10:
        lags = range(1, n)
    else:
        lags = np.random.default_rng(k).integers(1, n, size=50).tolist()
    assert cross_correlation(seq, seq, 0, cyclic=True) == n
    for j in lags:
        assert cross_correlation(seq, seq, j, cyclic=True) == -1


def test_m_sequence_errors():
    with pytest.raises(InvalidParameterError):
        m_sequence(4, seed=0)
    with pytest.raises(InvalidParameterError):
        m_sequence(4, taps=(4, 2))  # x^4 + x^2 + 1 is not primitive
    with pytest.raises(InvalidParameterError):
        m_sequence(4, seed=(1, 0, 1))


def test_m_sequence_seed_only_rotates():
    a = m_sequence(5, seed=1).bits
    b = m_sequence(5, seed=19).bits
    assert any(np.array_equal(np.roll(a, r), b) for r in range(31))


@given(bit_lists)
def test_autocorrelation_peak_property(bits):
    s = BitSequence(np.array(bits))
    assert cross_correlation(s, s, 0) == len(s)


def test_false_alarm_examples():
    assert false_alarm_rate(FalseAlarmModel(16, 16)) == 1 / 65536
    assert false_alarm_rate(FalseAlarmModel(16, 0)) == 1.0
    assert FalseAlarmModel(31, 29).probability_exact() == Fraction(497, 2**31)
    assert false_alarm_rate(FalseAlarmModel(31, 29)) == pytest.approx(2.314e-7, rel=1e-3)
    assert false_alarm_rate(FalseAlarmModel(31, 28)) == pytest.approx(2.33e-6, rel=1e-2)
    with pytest.raises(InvalidParameterError):
        FalseAlarmModel(8, 9)
    with pytest.raises(InvalidParameterError):
        false_alarm_rate(FalseAlarmModel(65, 65))


def test_false_alarm_matches_arbitrary_precision():
    mpmath.mp.dps = 60
    for length in range(1, 65):
        for t in range(length + 1):
            exact = mpmath.fsum(mpmath.binomial(length, k) for k in range(t, length + 1)) / mpmath.power(2, length)
            assert false_alarm_rate(FalseAlarmModel(length, t)) == pytest.approx(float(exact), rel=1e-15, abs=0)


def test_false_alarm_monotone():
    for length in range(1, 40):
        vals = [false_alarm_rate(FalseAlarmModel(length, t)) for t in range(length + 1)]
        assert all(x >= y for x, y in zip(vals, vals[1:]))
    exact = [false_alarm_rate(FalseAlarmModel(n, n)) for n in range(1, 64)]
    assert all(x >= y for x, y in zip(exact, exact[1:]))
