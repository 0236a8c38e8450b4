"""Energy-based speech probability and threshold gating into speech segments."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

from .audio import AudioClip, AudioFrame
from .kernels import rms_dbfs

_EPS = 1e-9


@dataclass(frozen=True)
class VadConfig:
    threshold: float = 0.5
    noise_floor_dbfs: float = -60.0
    speech_ref_dbfs: float = -30.0
    hangover_ms: int = 300
    min_speech_ms: int = 250
    max_segment_s: float = 30.0

    def __post_init__(self):
        if not 0.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (0, 1)")
        if self.noise_floor_dbfs >= self.speech_ref_dbfs:
            raise ValueError("noise_floor_dbfs must be below speech_ref_dbfs")
        if self.hangover_ms < 0:
            raise ValueError("hangover_ms must be non-negative")
        if self.min_speech_ms <= 0:
            raise ValueError("min_speech_ms must be positive")
        if not 0.0 < self.max_segment_s <= 30.0:
            raise ValueError("max_segment_s must be in (0, 30]")


@dataclass(frozen=True, eq=False)
class SpeechSegment:
    clip: AudioClip
    onset_s: float
    offset_s: float
    forced_split: bool = False

    @property
    def duration_s(self) -> float:
        return self.offset_s - self.onset_s


ProbabilityFn = Callable[[AudioFrame], float]


def speech_probability(frame: AudioFrame, cfg: VadConfig = VadConfig()) -> float:
    """Map frame RMS level linearly from the noise floor (0) to the speech reference (1)."""
    if len(frame.samples) == 0:
        raise ValueError("empty frame")
    level = rms_dbfs(frame.samples)
    if level == -math.inf:
        return 0.0
    p = (level - cfg.noise_floor_dbfs) / (cfg.speech_ref_dbfs - cfg.noise_floor_dbfs)
    return min(1.0, max(0.0, p))


class SpeechGate:
    """Incremental segmenter: feed ``(frame, probability)`` pairs, collect closed segments.

    A segment opens on the first frame at or above threshold and closes after
    ``hangover_ms`` of continuous sub-threshold frames (offset at the start of
    that silent run) or when it reaches ``max_segment_s``.
    """

    def __init__(self, cfg: VadConfig = VadConfig()):
        self.cfg = cfg
        self._speech: list[AudioFrame] = []   # frames up to and including the last speech frame
        self._silent: list[AudioFrame] = []   # trailing sub-threshold frames (hangover run)

    @property
    def active(self) -> bool:
        return bool(self._speech)

    def push(self, frame: AudioFrame, probability: float) -> list[SpeechSegment]:
        cfg = self.cfg
        out: list[SpeechSegment] = []
        is_speech = probability >= cfg.threshold
        if not self._speech:
            if is_speech:
                self._speech.append(frame)
                out.extend(self._check_cap())
            return out

        if is_speech:
            self._speech.extend(self._silent)
            self._silent.clear()
            self._speech.append(frame)
            out.extend(self._check_cap())
            return out

        self._silent.append(frame)
        silent_s = sum(f.duration_s for f in self._silent)
        if silent_s + _EPS >= cfg.hangover_ms / 1000.0:
            out.extend(self._close(forced=False))
        elif frame.end_time_s - self._speech[0].start_time_s + _EPS >= cfg.max_segment_s:
            out.extend(self._close(forced=True))
        return out

    def finish(self) -> list[SpeechSegment]:
        """Close any open segment at end of stream."""
        if not self._speech:
            return []
        return self._close(forced=False)

    def _check_cap(self) -> list[SpeechSegment]:
        span = self._speech[-1].end_time_s - self._speech[0].start_time_s
        if span + _EPS >= self.cfg.max_segment_s:
            return self._close(forced=True)
        return []

    def _close(self, forced: bool) -> list[SpeechSegment]:
        frames = self._speech
        self._speech = []
        self._silent = []
        onset = frames[0].start_time_s
        offset = frames[-1].end_time_s
        if (offset - onset) * 1000.0 + _EPS < self.cfg.min_speech_ms:
            return []
        samples = np.concatenate([f.samples for f in frames])
        clip = AudioClip(samples, frames[0].sample_rate_hz)
        return [SpeechSegment(clip, onset, offset, forced)]


def gate_stream(frames: Iterable[AudioFrame], cfg: VadConfig = VadConfig(),
                vad: ProbabilityFn | None = None) -> list[SpeechSegment]:
    """Segment a contiguous frame sequence.

    ``vad`` maps a frame to a speech probability; the built-in energy scorer
    is used when omitted. Segments shorter than ``min_speech_ms`` are dropped.
    """
    score = vad if vad is not None else (lambda fr: speech_probability(fr, cfg))
    gate = SpeechGate(cfg)
    segments: list[SpeechSegment] = []
    for frame in frames:
        segments.extend(gate.push(frame, score(frame)))
    segments.extend(gate.finish())
    return segments
