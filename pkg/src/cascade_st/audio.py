"""PCM audio I/O: WAV read/write, resampling, framing and playback sinks.

Internally audio is mono float64 in [-1, 1]; the canonical pipeline rate is
16 kHz. Live capture is not implemented; an input device plugs in by
implementing :class:`FrameSource` (any iterable of :class:`AudioFrame` works).
"""

from __future__ import annotations

import io
import math
import os
import struct
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterator, Protocol

import numpy as np

CANONICAL_RATE = 16000

_PCM = 0x0001
_IEEE_FLOAT = 0x0003
_EXTENSIBLE = 0xFFFE


class WavError(ValueError):
    """Raised for unreadable, truncated or unsupported WAV data."""


class SinkError(RuntimeError):
    """Raised when writing to a closed or failed playback sink."""


def _as_samples(samples) -> np.ndarray:
    arr = np.ascontiguousarray(samples, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    if arr.size and (arr.max() > 1.0 or arr.min() < -1.0):
        raise ValueError("samples must lie within [-1.0, 1.0]")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AudioClip:
    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", _as_samples(self.samples))

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True, eq=False)
class AudioFrame:
    """A fixed-length slice of a stream. ``start_time_s`` is stream time."""

    samples: np.ndarray
    sample_rate_hz: int
    start_time_s: float
    index: int = 0

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.start_time_s < 0:
            raise ValueError("start_time_s must be non-negative")
        object.__setattr__(self, "samples", _as_samples(self.samples))

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    @property
    def end_time_s(self) -> float:
        return self.start_time_s + self.duration_s


# --------------------------------------------------------------------------- WAV


def _parse_wav(f: BinaryIO) -> AudioClip:
    header = f.read(12)
    if len(header) < 12 or header[:4] != b"RIFF" or header[8:12] != b"WAVE":
        raise WavError("not a RIFF/WAVE file")

    fmt = None
    data = None
    while True:
        chunk_head = f.read(8)
        if len(chunk_head) < 8:
            break
        cid, size = struct.unpack("<4sI", chunk_head)
        body = f.read(size)
        if len(body) < size and cid != b"data":
            raise WavError(f"truncated {cid!r} chunk")
        if size % 2:
            f.read(1)
        if cid == b"fmt ":
            if size < 16:
                raise WavError("fmt chunk too short")
            fmt = struct.unpack("<HHIIHH", body[:16])
            if fmt[0] == _EXTENSIBLE:
                if size < 26:
                    raise WavError("extensible fmt chunk too short")
                sub = struct.unpack("<H", body[24:26])[0]
                fmt = (sub,) + fmt[1:]
        elif cid == b"data":
            data = body
            break

    if fmt is None:
        raise WavError("missing fmt chunk")
    if data is None:
        raise WavError("missing data chunk")
    codec, channels, rate, _, block_align, bits = fmt
    if channels not in (1, 2):
        raise WavError(f"unsupported channel count {channels}")
    if codec == _PCM and bits == 16:
        dtype = np.dtype("<i2")
    elif codec == _IEEE_FLOAT and bits == 32:
        dtype = np.dtype("<f4")
    else:
        raise WavError(f"unsupported codec (format tag {codec:#06x}, {bits} bits)")
    if rate <= 0:
        raise WavError("invalid sample rate")

    usable = len(data) - len(data) % (dtype.itemsize * channels)
    if usable == 0:
        raise WavError("zero-length data chunk")
    raw = np.frombuffer(data[:usable], dtype=dtype).astype(np.float64)
    if codec == _PCM:
        raw /= 32768.0
    else:
        np.clip(raw, -1.0, 1.0, out=raw)
    if channels == 2:
        raw = raw.reshape(-1, 2).mean(axis=1)
    return AudioClip(raw, rate)


def load_wav(path: str | os.PathLike) -> AudioClip:
    """Read a PCM16 or float32 WAV file as a mono float clip.

    Stereo input is downmixed by averaging the two channels.
    """
    try:
        with open(path, "rb") as f:
            return _parse_wav(f)
    except OSError as exc:
        raise WavError(f"cannot read {path}: {exc}") from exc


def read_wav_bytes(data: bytes) -> AudioClip:
    return _parse_wav(io.BytesIO(data))


def _to_pcm16(samples: np.ndarray) -> bytes:
    ints = np.clip(np.round(samples * 32768.0), -32768, 32767).astype("<i2")
    return ints.tobytes()


def _wav_header(n_bytes: int, rate: int, codec: int = _PCM, bits: int = 16) -> bytes:
    block = bits // 8
    return struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF", 36 + n_bytes, b"WAVE",
        b"fmt ", 16, codec, 1, rate, rate * block, block, bits,
        b"data", n_bytes,
    )


def wav_bytes(clip: AudioClip, fmt: str = "pcm16") -> bytes:
    """Serialize a mono clip to WAV (``pcm16`` or ``float32``)."""
    if fmt == "pcm16":
        payload = _to_pcm16(clip.samples)
        return _wav_header(len(payload), clip.sample_rate_hz) + payload
    if fmt == "float32":
        payload = clip.samples.astype("<f4").tobytes()
        return _wav_header(len(payload), clip.sample_rate_hz, _IEEE_FLOAT, 32) + payload
    raise ValueError(f"unknown WAV format {fmt!r}")


def save_wav(path: str | os.PathLike, clip: AudioClip, fmt: str = "pcm16") -> None:
    Path(path).write_bytes(wav_bytes(clip, fmt))


# ------------------------------------------------------------------ resampling


def resample(clip: AudioClip, target_rate_hz: int) -> AudioClip:
    """Linear-interpolation resampling.

    Output length is ``round(len * target / source)``; the clip is returned
    unchanged when the rates already match.
    """
    if target_rate_hz < 8000:
        raise ValueError("target_rate_hz must be >= 8000")
    src = clip.sample_rate_hz
    if target_rate_hz == src:
        return clip
    n_out = int(round(len(clip.samples) * target_rate_hz / src))
    if n_out == 0:
        return AudioClip(np.zeros(0), target_rate_hz)
    t_out = np.arange(n_out, dtype=np.float64) * (src / target_rate_hz)
    t_in = np.arange(len(clip.samples), dtype=np.float64)
    out = np.interp(t_out, t_in, clip.samples)
    return AudioClip(out, target_rate_hz)


# --------------------------------------------------------------------- framing


def frame_stream(clip: AudioClip, frame_ms: int = 30) -> list[AudioFrame]:
    """Split a clip into contiguous fixed-length frames.

    The last frame is zero-padded to full length; its start time is still the
    exact offset of its first real sample.
    """
    if not 10 <= frame_ms <= 100:
        raise ValueError("frame_ms must be in [10, 100]")
    n = len(clip.samples)
    if n == 0:
        raise ValueError("cannot frame an empty clip")
    rate = clip.sample_rate_hz
    size = rate * frame_ms // 1000
    count = math.ceil(n / size)
    frames = []
    for k in range(count):
        chunk = clip.samples[k * size:(k + 1) * size]
        if len(chunk) < size:
            chunk = np.concatenate([chunk, np.zeros(size - len(chunk))])
        frames.append(AudioFrame(chunk, rate, k * size / rate, k))
    return frames


class FrameSource(Protocol):
    """Extension point for live input devices: yields contiguous frames."""

    def __iter__(self) -> Iterator[AudioFrame]: ...


def wav_frames(path: str | os.PathLike, frame_ms: int = 30) -> list[AudioFrame]:
    """Load, downmix and resample a WAV file to the canonical rate, then frame it."""
    return frame_stream(resample(load_wav(path), CANONICAL_RATE), frame_ms)


# ----------------------------------------------------------------------- sinks


class PlaybackSink:
    """Destination for synthesized audio.

    ``emit`` returns the monotonic instant the first sample was handed over,
    which the pipeline treats as the start of playback. Timestamps from one
    sink are strictly increasing. A sink has a single writer.
    """

    def __init__(self):
        self._closed = False
        self._last = -math.inf
        self._lock = threading.Lock()

    @property
    def closed(self) -> bool:
        return self._closed

    def emit(self, clip: AudioClip) -> float:
        with self._lock:
            if self._closed:
                raise SinkError("sink is closed")
            now = time.monotonic()
            if now <= self._last:
                now = math.nextafter(self._last, math.inf)
            self._last = now
            self._write(clip)
            return now

    def _write(self, clip: AudioClip) -> None:
        raise NotImplementedError

    def close(self) -> None:
        self._closed = True

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class NullSink(PlaybackSink):
    """Discards audio; still timestamps every write."""

    def __init__(self):
        super().__init__()
        self.clips_written = 0
        self.samples_written = 0

    def _write(self, clip: AudioClip) -> None:
        self.clips_written += 1
        self.samples_written += len(clip)


class WavFileSink(PlaybackSink):
    """Appends PCM16 mono audio to a WAV file, keeping the header valid after each write."""

    def __init__(self, path: str | os.PathLike, sample_rate_hz: int = CANONICAL_RATE):
        super().__init__()
        self.path = Path(path)
        self.sample_rate_hz = sample_rate_hz
        self._f = open(self.path, "wb")
        self._n_bytes = 0
        self._f.write(_wav_header(0, sample_rate_hz))
        self._f.flush()

    def _write(self, clip: AudioClip) -> None:
        if clip.sample_rate_hz != self.sample_rate_hz:
            clip = resample(clip, self.sample_rate_hz)
        payload = _to_pcm16(clip.samples)
        try:
            self._f.seek(0, os.SEEK_END)
            self._f.write(payload)
            self._n_bytes += len(payload)
            self._f.seek(0)
            self._f.write(_wav_header(self._n_bytes, self.sample_rate_hz))
            self._f.flush()
        except OSError as exc:
            raise SinkError(f"write to {self.path} failed: {exc}") from exc

    def close(self) -> None:
        if not self._closed:
            self._f.close()
        super().close()


def write_sink(clip: AudioClip, sink: PlaybackSink) -> float:
    """Hand ``clip`` to ``sink``; return the monotonic playback-start instant."""
    return sink.emit(clip)


def tone(freq_hz: float, duration_s: float, sample_rate_hz: int = CANONICAL_RATE,
         amplitude: float = 0.5) -> np.ndarray:
    """Sine samples; shared by the tone TTS mock and test fixtures."""
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n, dtype=np.float64) / sample_rate_hz
    return amplitude * np.sin(2.0 * np.pi * freq_hz * t)
