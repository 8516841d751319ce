import numpy as np
import pytest

from masync.attacks import (
    AttackSpec,
    apply_chain,
    awgn,
    crop_random,
    jitter,
    lowpass_butterworth,
    mp3_roundtrip,
    parse_attack,
    requantize,
    resample,
    time_scale,
)
from masync.core_signal import AudioClip
from masync.errors import ExternalToolMissing, InvalidParameterError

RATE = 44100


def sine(freq, seconds=1.0, amp=0.5, rate=RATE):
    t = np.arange(int(seconds * rate)) / rate
    return AudioClip(amp * np.sin(2 * np.pi * freq * t), rate)


def amplitude(x):
    return np.sqrt(2 * np.mean(x * x))


@pytest.fixture(scope="module")
def noise_clip():
    return AudioClip(np.random.default_rng(3).uniform(-0.5, 0.5, 20000), RATE)


# -- awgn ---------------------------------------------------------------

@pytest.mark.parametrize("snr", [20, 45, 55])
def test_awgn_hits_requested_snr(noise_clip, snr):
    out = awgn(noise_clip, snr, seed=1)
    x = noise_clip.samples
    n = out.samples - x
    got = 10 * np.log10(np.dot(x, x) / np.dot(n, n))
    assert abs(got - snr) <= 0.1


def test_awgn_noise_level_matches_rms_ratio():
    x = np.where(np.arange(10000) % 2 == 0, 0.5, -0.5)
    clip = AudioClip(x, RATE)
    n = awgn(clip, 55, seed=2).samples - x
    rms_x = np.sqrt(np.mean(x * x))
    assert np.sqrt(np.mean(n * n)) / rms_x == pytest.approx(10 ** (-55 / 20), rel=1e-3)


def test_awgn_identity_determinism_and_silence(noise_clip):
    assert awgn(noise_clip, float("inf"), seed=1) is noise_clip
    assert np.array_equal(awgn(noise_clip, 40, 5).samples, awgn(noise_clip, 40, 5).samples)
    assert not np.array_equal(awgn(noise_clip, 40, 5).samples, awgn(noise_clip, 40, 6).samples)
    with pytest.raises(InvalidParameterError):
        awgn(AudioClip(np.zeros(10), RATE), 30, 1)


# -- requantize ---------------------------------------------------------

def test_requantize_16_is_identity_on_pcm():
    clip = AudioClip.from_pcm16(np.random.default_rng(1).integers(-32768, 32768, 5000), RATE)
    assert np.array_equal(requantize(clip, 16).samples, clip.samples)


def test_requantize_error_and_idempotence(noise_clip):
    q = requantize(noise_clip, 8)
    assert np.max(np.abs(q.samples - noise_clip.samples)) <= 2.0 ** -8
    assert np.array_equal(requantize(q, 8).samples, q.samples)
    assert len(np.unique(q.samples)) <= 256
    with pytest.raises(InvalidParameterError):
        requantize(noise_clip, 1)


# -- resample -----------------------------------------------------------

def test_resample_same_rate_is_identity(noise_clip):
    assert np.max(np.abs(resample(noise_clip, RATE).samples - noise_clip.samples)) <= 1e-9


def test_resample_keeps_passband():
    clip = sine(1000)
    out = resample(clip, 22050)
    assert len(out) == len(clip)
    core = slice(2000, -2000)
    ratio = amplitude(out.samples[core]) / amplitude(clip.samples[core])
    assert abs(20 * np.log10(ratio)) <= 0.1


def test_resample_removes_content_above_intermediate_nyquist():
    clip = sine(10000)
    out = resample(clip, 11025)
    core = slice(2000, -2000)
    assert amplitude(out.samples[core]) < 0.1 * amplitude(clip.samples[core])


def test_resample_rejects_odd_ratio(noise_clip):
    with pytest.raises(InvalidParameterError):
        resample(noise_clip, 44000)


# -- low-pass -----------------------------------------------------------

def analog_butterworth_db(f, fc, order):
    return -10 * np.log10(1 + (f / fc) ** (2 * order))


def test_lowpass_dc_gain():
    out = lowpass_butterworth(AudioClip(np.full(20000, 0.5), RATE), 6, 6000)
    assert np.allclose(out.samples[-1000:], 0.5, atol=1e-9)


def test_lowpass_passband_against_formula():
    clip = sine(1000)
    out = lowpass_butterworth(clip, 6, 6000)
    core = slice(4000, None)
    got = 20 * np.log10(amplitude(out.samples[core]) / amplitude(clip.samples[core]))
    assert abs(got - analog_butterworth_db(1000, 6000, 6)) <= 0.5


def test_lowpass_stopband_against_formula():
    clip = sine(12000)
    out = lowpass_butterworth(clip, 6, 6000)
    core = slice(4000, None)
    got = 20 * np.log10(amplitude(out.samples[core]) / amplitude(clip.samples[core]))
    assert analog_butterworth_db(12000, 6000, 6) == pytest.approx(-36.1, abs=0.1)
    # the bilinear transform only steepens the response below Nyquist
    assert got <= -36.0


def test_lowpass_never_adds_energy(noise_clip):
    for fc in (4000, 8000, 10000):
        out = lowpass_butterworth(noise_clip, 6, fc)
        assert np.dot(out.samples, out.samples) <= np.dot(noise_clip.samples, noise_clip.samples)


def test_lowpass_validation(noise_clip):
    with pytest.raises(InvalidParameterError):
        lowpass_butterworth(noise_clip, 5, 8000)
    with pytest.raises(InvalidParameterError):
        lowpass_butterworth(noise_clip, 6, 30000)


# -- crop, jitter, tsm --------------------------------------------------

def test_crop_lengths_and_order():
    x = np.arange(705600) / 705600 - 0.5
    clip = AudioClip(x, RATE)
    out = crop_random(clip, 0.10, seed=3)
    assert len(out) == 635040
    assert np.all(np.diff(out.samples) > 0)
    assert np.array_equal(out.samples, crop_random(clip, 0.10, seed=3).samples)
    assert crop_random(clip, 0.0, seed=3) is clip
    with pytest.raises(InvalidParameterError):
        crop_random(clip, 1.0, seed=3)


def test_crop_removes_ten_runs():
    x = np.arange(100000) / 100000 - 0.5
    out = crop_random(AudioClip(x, RATE), 0.1, seed=8)
    jumps = np.flatnonzero(np.diff(out.samples) > 1.5 / 100000)
    assert 1 <= len(jumps) <= 10


def test_jitter_lengths():
    clip = AudioClip(np.zeros(705600), RATE)
    assert len(jitter(clip, 1000, seed=1)) == 704895
    small = AudioClip(np.zeros(500), RATE)
    assert len(jitter(small, 1000, seed=1)) == 499
    assert np.array_equal(jitter(AudioClip(np.arange(5000) / 5000, RATE), 100, 4).samples,
                          jitter(AudioClip(np.arange(5000) / 5000, RATE), 100, 4).samples)


def test_jitter_one_per_block():
    x = np.arange(10000) / 10000
    out = jitter(AudioClip(x, RATE), 1000, seed=2).samples
    idx = np.round(out * 10000).astype(int)
    missing = np.setdiff1d(np.arange(10000), idx)
    assert np.array_equal(missing // 1000, np.arange(10))


def test_time_scale_lengths():
    clip = AudioClip(np.zeros(705600), RATE)
    assert len(time_scale(clip, 10)) == 776160
    assert time_scale(clip, 0) is clip
    short = sine(440, seconds=2.0)
    back = time_scale(time_scale(short, -3), 100 * (1 / 0.97 - 1))
    assert abs(len(back) - len(short)) <= 1
    with pytest.raises(InvalidParameterError):
        time_scale(clip, 20)


def test_time_scale_moves_pitch():
    clip = sine(1000, seconds=1.0)
    out = time_scale(clip, 10).samples
    spec = np.abs(np.fft.rfft(out * np.hanning(len(out))))
    peak = np.argmax(spec) * RATE / len(out)
    assert peak == pytest.approx(1000 / 1.1, rel=0.01)


# -- specs and chains ---------------------------------------------------

def test_parse_and_label():
    spec = parse_attack("awgn:55:seed=7")
    assert spec == AttackSpec("awgn", 55.0, (("seed", 7.0),))
    assert spec.label == "awgn:55:seed=7"
    assert parse_attack("none").label == "none"
    assert parse_attack("tsm:-3").value == -3
    for bad in ("", "foo:1", "awgn:55", "lowpass", "awgn:x:seed=1", "crop:0.1:0.2:seed=1"):
        with pytest.raises(InvalidParameterError):
            parse_attack(bad)


def test_chain_is_left_to_right(noise_clip):
    out, labels = apply_chain(noise_clip, ["requantize:8", "jitter:1000:seed=1"])
    assert labels == ["requantize:8", "jitter:1000:seed=1"]
    expected = jitter(requantize(noise_clip, 8), 1000, 1)
    assert np.array_equal(out.samples, expected.samples)


@pytest.mark.parametrize("spec", ["awgn:50:seed=3", "crop:0.1:seed=3", "jitter:500:seed=3", "requantize:8",
                                  "resample:22050", "lowpass:8000", "tsm:3"])
def test_every_attack_is_deterministic(noise_clip, spec):
    a, _ = apply_chain(noise_clip, [spec])
    b, _ = apply_chain(noise_clip, [spec])
    assert np.array_equal(a.samples, b.samples)


def test_mp3_without_tool(monkeypatch, noise_clip, tmp_path):
    monkeypatch.setenv("MASYNC_LAME", str(tmp_path / "missing-lame"))
    with pytest.raises(ExternalToolMissing):
        mp3_roundtrip(noise_clip, 128)
