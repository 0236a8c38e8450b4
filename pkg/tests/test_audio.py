import math
import struct
import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cascade_st.audio import (AudioClip, NullSink, SinkError, WavError, WavFileSink, frame_stream,
                              load_wav, read_wav_bytes, resample, save_wav, tone, wav_bytes,
                              write_sink)

from helpers import dominant_frequency


def raw_wav(payload: bytes, rate=16000, channels=1, bits=16, codec=1) -> bytes:
    block = channels * bits // 8
    return struct.pack("<4sI4s4sIHHIIHH4sI", b"RIFF", 36 + len(payload), b"WAVE", b"fmt ", 16, codec,
                       channels, rate, rate * block, block, bits, b"data", len(payload)) + payload


def test_load_silence(tmp_path):
    p = tmp_path / "z.wav"
    p.write_bytes(raw_wav(np.zeros(16000, "<i2").tobytes()))
    clip = load_wav(p)
    assert clip.sample_rate_hz == 16000
    assert len(clip) == 16000 and not clip.samples.any()


def test_pcm16_extremes(tmp_path):
    p = tmp_path / "x.wav"
    p.write_bytes(raw_wav(np.array([-32768, 32767], "<i2").tobytes()))
    s = load_wav(p).samples
    assert s[0] == -1.0
    assert s[1] == pytest.approx(0.99997, abs=1e-5)
    assert s[1] == 32767 / 32768


def test_stereo_downmix(tmp_path):
    frames = np.array([[16384, -16384]] * 100, "<i2")
    p = tmp_path / "s.wav"
    p.write_bytes(raw_wav(frames.tobytes(), channels=2))
    clip = load_wav(p)
    assert len(clip) == 100 and not clip.samples.any()


def test_float32_wav_roundtrip():
    clip = AudioClip(np.linspace(-1, 1, 101), 22050)
    back = read_wav_bytes(wav_bytes(clip, "float32"))
    assert back.sample_rate_hz == 22050
    np.testing.assert_allclose(back.samples, clip.samples, atol=1e-7)


def test_extensible_format(tmp_path):
    payload = np.array([0, 16384], "<i2").tobytes()
    fmt = struct.pack("<HHIIHHHHI16s", 0xFFFE, 1, 8000, 16000, 2, 16, 22, 16, 0,
                      b"\x01\x00" + b"\x00" * 14)
    data = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + b"data" + struct.pack("<I", 4) + payload
    p = tmp_path / "e.wav"
    p.write_bytes(b"RIFF" + struct.pack("<I", len(data)) + data)
    assert load_wav(p).samples.tolist() == [0.0, 0.5]


@pytest.mark.parametrize("blob,msg", [
    (b"not a wav file at all", "RIFF"),
    (raw_wav(b"\x00" * 8, codec=2), "codec"),
    (raw_wav(b""), "zero-length"),
    (raw_wav(b"\x00" * 12, bits=24), "codec"),
    (raw_wav(b"\x00" * 12, channels=3), "channel"),
])
def test_load_errors(tmp_path, blob, msg):
    p = tmp_path / "bad.wav"
    p.write_bytes(blob)
    with pytest.raises(WavError, match=msg):
        load_wav(p)


def test_missing_file(tmp_path):
    with pytest.raises(WavError):
        load_wav(tmp_path / "nope.wav")


def test_samples_out_of_range_rejected():
    with pytest.raises(ValueError):
        AudioClip(np.array([0.0, 1.5]), 16000)


# ------------------------------------------------------------------ resampling


def test_resample_identity():
    clip = AudioClip(np.random.default_rng(0).uniform(-1, 1, 1000), 16000)
    out = resample(clip, 16000)
    assert out.sample_rate_hz == 16000
    assert out.samples.tobytes() == clip.samples.tobytes()


def test_resample_length():
    clip = AudioClip(np.zeros(16000), 16000)
    assert len(resample(clip, 8000)) == 8000


def test_resample_keeps_tone_frequency():
    clip = AudioClip(tone(440.0, 1.0, 48000), 48000)
    out = resample(clip, 16000)
    f, bin_hz = dominant_frequency(out.samples, 16000)
    assert abs(f - 440.0) <= bin_hz


def test_resample_rejects_low_rate():
    with pytest.raises(ValueError):
        resample(AudioClip(np.zeros(10), 16000), 4000)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5000), st.sampled_from([8000, 11025, 16000, 22050, 44100, 48000]),
       st.sampled_from([8000, 16000, 22050, 44100, 48000]))
def test_resample_preserves_duration(n, src, dst):
    clip = AudioClip(np.zeros(n), src)
    out = resample(clip, dst)
    assert abs(out.duration_s - clip.duration_s) <= 1.0 / dst


# --------------------------------------------------------------------- framing


def test_frame_counts():
    frames = frame_stream(AudioClip(np.zeros(16000), 16000), 30)
    assert len(frames) == math.ceil(16000 / 480) == 34
    assert all(len(f.samples) == 480 for f in frames)
    assert frames[10].start_time_s == pytest.approx(0.300, abs=1e-12)


def test_frame_padding_and_contiguity():
    clip = AudioClip(np.full(1000, 0.25), 16000)
    frames = frame_stream(clip, 30)
    last = frames[-1]
    assert last.start_time_s == pytest.approx(960 / 16000)
    assert last.samples[:40].tolist() == [0.25] * 40 and not last.samples[40:].any()
    for a, b in zip(frames, frames[1:]):
        assert abs(b.start_time_s - (a.start_time_s + a.duration_s)) < 1e-9


def test_frame_errors():
    with pytest.raises(ValueError):
        frame_stream(AudioClip(np.zeros(0), 16000), 30)
    with pytest.raises(ValueError):
        frame_stream(AudioClip(np.zeros(100), 16000), 5)
    with pytest.raises(ValueError):
        frame_stream(AudioClip(np.zeros(100), 16000), 101)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40000), st.integers(10, 100))
def test_frame_durations_cover_clip(n, frame_ms):
    clip = AudioClip(np.zeros(n), 16000)
    total = sum(f.duration_s for f in frame_stream(clip, frame_ms))
    assert clip.duration_s <= total + 1e-12
    assert total < clip.duration_s + frame_ms / 1000.0


# ----------------------------------------------------------------------- sinks


def test_null_sink_timestamps():
    sink = NullSink()
    before = time.monotonic()
    t1 = write_sink(AudioClip(np.zeros(10), 16000), sink)
    t2 = write_sink(AudioClip(np.zeros(10), 16000), sink)
    assert before <= t1 < t2
    assert sink.clips_written == 2


def test_closed_sink_raises():
    sink = NullSink()
    sink.close()
    with pytest.raises(SinkError):
        write_sink(AudioClip(np.zeros(10), 16000), sink)


def test_file_sink_duration(tmp_path):
    p = tmp_path / "out.wav"
    with WavFileSink(p) as sink:
        write_sink(AudioClip(tone(440, 1.0), 16000), sink)
        # header is valid between writes
        assert load_wav(p).duration_s == pytest.approx(1.0, abs=1 / 16000)
        write_sink(AudioClip(tone(440, 1.0), 16000), sink)
    assert load_wav(p).duration_s == pytest.approx(2.0, abs=1 / 16000)


def test_file_sink_resamples(tmp_path):
    p = tmp_path / "out.wav"
    with WavFileSink(p) as sink:
        write_sink(AudioClip(np.zeros(44100), 44100), sink)
    assert len(load_wav(p)) == 16000


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0, allow_nan=False), min_size=1, max_size=300))
def test_pcm16_roundtrip_error_bound(tmp_path_factory, xs):
    p = tmp_path_factory.mktemp("rt") / "rt.wav"
    clip = AudioClip(np.array(xs), 16000)
    with WavFileSink(p) as sink:
        sink.emit(clip)
    back = load_wav(p)
    assert np.max(np.abs(back.samples - clip.samples)) <= 1 / 32768


def test_save_wav_pcm16(tmp_path):
    p = tmp_path / "a.wav"
    q = tmp_path / "b.wav"
    save_wav(p, AudioClip(np.array([0.5, -0.5]), 8000))
    save_wav(q, load_wav(p))
    assert p.read_bytes() == q.read_bytes()
