import math
import struct
import wave

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from masync.core_signal import AudioClip
from masync.errors import InvalidParameterError, WavFormatError
from masync.metrics import ber, exhaustive_search_cost, snr_measured, snr_predicted
from masync.sync_codes import BitSequence
from masync.wavio import read_wav, write_wav


def test_snr_measured_examples():
    x = np.array([0.1, -0.1, 0.1, -0.1])
    assert snr_measured(x, x * 0.9) == pytest.approx(20.0)
    assert snr_measured(x, x) == math.inf
    with pytest.raises(InvalidParameterError):
        snr_measured(x, x[:3])
    with pytest.raises(InvalidParameterError):
        snr_measured(np.zeros(4), x)


def test_snr_predicted_examples():
    x = np.full(1000, 0.1)
    assert snr_predicted(x, 0.01) == pytest.approx(10 * math.log10(1200), abs=1e-9)
    assert snr_predicted(x, 0.01) == pytest.approx(30.79, abs=0.01)
    assert snr_predicted(x, 0.01) - snr_predicted(x, 0.02) == pytest.approx(20 * math.log10(2))
    with pytest.raises(InvalidParameterError):
        snr_predicted(x, 0.0)


def test_snr_predicted_matches_uniform_noise():
    rng = np.random.default_rng(4)
    x = rng.uniform(-0.5, 0.5, 400000)
    s = 0.01
    y = x + rng.uniform(-s / 2, s / 2, x.size)
    assert snr_measured(x, y) == pytest.approx(snr_predicted(x, s), abs=0.05)


def test_ber_examples():
    ref = BitSequence.random(128, seed=3)
    assert ber(ref, ref) == 0.0
    assert ber(ref, BitSequence(-ref.bits)) == 1.0
    flipped = ref.bits.copy()
    flipped[5] *= -1
    assert ber(ref, BitSequence(flipped)) == 1 / 128
    assert ber(BitSequence([]), BitSequence([])) == 0.0
    with pytest.raises(InvalidParameterError):
        ber(ref, BitSequence(ref.bits[:10]))


def test_search_cost_table():
    cost = exhaustive_search_cost(16, 84)
    assert cost["time+fft-domain"] == 4 * 16 + 512 * 84 == 43072
    assert cost["amplitude-modification"] == 1020 * 100
    assert cost["svd-wavelet"] == 484 * 100


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(-32768, 32767), min_size=0, max_size=400), st.sampled_from([8000, 22050, 44100, 48000]))
def test_wav_roundtrip_is_bit_exact(tmp_path_factory, pcm, rate):
    path = tmp_path_factory.mktemp("wav") / "x.wav"
    clip = AudioClip.from_pcm16(np.array(pcm, dtype=np.int16), rate)
    write_wav(path, clip)
    back = read_wav(path)
    assert back.sample_rate == rate
    assert np.array_equal(back.to_pcm16(), np.array(pcm, dtype=np.int16))


def _write_raw(path, channels, width, frames=b""):
    with wave.open(str(path), "wb") as w:
        w.setnchannels(channels)
        w.setsampwidth(width)
        w.setframerate(44100)
        w.writeframes(frames or bytes(channels * width * 10))


@pytest.mark.parametrize("channels,width", [(2, 2), (1, 1), (1, 3)])
def test_wav_rejects_unsupported_layouts(tmp_path, channels, width):
    path = tmp_path / "bad.wav"
    _write_raw(path, channels, width)
    with pytest.raises(WavFormatError):
        read_wav(path)


def test_wav_rejects_float_format(tmp_path):
    path = tmp_path / "float.wav"
    data = np.zeros(10, dtype="<f4").tobytes()
    fmt = struct.pack("<HHIIHH", 3, 1, 44100, 44100 * 4, 4, 32)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", len(data)) + data
    path.write_bytes(b"RIFF" + struct.pack("<I", len(body)) + body)
    with pytest.raises(WavFormatError):
        read_wav(path)


def test_wav_rejects_garbage(tmp_path):
    path = tmp_path / "junk.wav"
    path.write_bytes(b"not a wav file at all")
    with pytest.raises(WavFormatError):
        read_wav(path)
