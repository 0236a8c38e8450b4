"""Concurrent cascade: segmenter -> ASR -> refine policy -> translate -> TTS -> sink.

Each stage runs in its own thread and the stages are linked by bounded FIFO
queues with blocking puts, so a slow stage back-pressures its producers
instead of dropping work. Every released phrase is timestamped at each hop to
give onset-to-playback latency.

Latency anchor: a phrase's onset is the monotonic instant at which the
segmenter emitted the first speech segment contributing to it. When replaying
a file, frames are released on a virtual clock at ``realtime_factor`` times
real time; ``None`` replays as fast as possible.
"""

from __future__ import annotations

import json
import logging
import os
import queue
import threading
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable, Iterable, Iterator

from .audio import AudioClip, AudioFrame, NullSink, PlaybackSink, write_sink
from .backends.base import (AsrBackend, BackendError, RefineBackend, TranscriptChunk,
                            TranslateBackend, TtsBackend)
from .refiner import RefineBuffer, ReleasedPhrase, flush, push_chunk
from .vad import ProbabilityFn, SpeechGate, SpeechSegment, VadConfig, speech_probability

log = logging.getLogger(__name__)

TRACE_SCHEMA_VERSION = 1
_POLL_S = 0.05


@dataclass
class PipelineConfig:
    asr: AsrBackend
    refiner: RefineBackend
    translator: TranslateBackend
    tts: TtsBackend
    source_lang: str = "en"
    target_lang: str = "es"
    vad: VadConfig = field(default_factory=VadConfig)
    vad_fn: ProbabilityFn | None = None
    queue_capacity: int = 16
    sink: PlaybackSink | None = None
    realtime_factor: float | None = None
    sequential: bool = False
    tts_speed: float = 1.0

    def __post_init__(self):
        if self.queue_capacity < 1:
            raise ValueError("queue_capacity must be >= 1")
        if self.realtime_factor is not None and self.realtime_factor <= 0:
            raise ValueError("realtime_factor must be positive (or None for as-fast-as-possible)")
        if self.source_lang == self.target_lang and not getattr(self.translator, "is_identity", False):
            raise ValueError("source_lang equals target_lang; only the identity translator allows that")


@dataclass(frozen=True)
class LatencyRecord:
    phrase_id: int
    speech_onset_s: float
    onset_wall_s: float
    asr_start: float
    asr_done: float
    refine_start: float
    refine_done: float
    translate_start: float
    translate_done: float
    tts_start: float
    tts_done: float
    playback_start: float
    e2e_latency_s: float

    def stage_durations(self) -> dict[str, float]:
        d = {
            "asr": self.asr_done - self.asr_start,
            "refine": self.refine_done - self.refine_start,
            "translate": self.translate_done - self.translate_start,
            "tts": self.tts_done - self.tts_start,
        }
        d["queue_wait"] = self.e2e_latency_s - sum(d.values())
        return d


@dataclass(frozen=True, eq=False)
class PhraseResult:
    phrase_id: int
    source_text: str
    target_text: str
    source_lang: str
    target_lang: str
    release_reason: str
    source_chunk_count: int
    onset_s: float
    audio: AudioClip


@dataclass
class PipelineResult:
    phrases: list[PhraseResult] = field(default_factory=list)
    records: list[LatencyRecord] = field(default_factory=list)
    transcripts: list[TranscriptChunk] = field(default_factory=list)
    segments: int = 0
    released: int = 0

    @property
    def transcript_text(self) -> str:
        return " ".join(c.text for c in self.transcripts if c.text)


class PipelineAborted(RuntimeError):
    """A stage failed; ``result`` holds whatever reached the sink before the abort."""

    def __init__(self, stage: str, cause: BaseException, result: PipelineResult):
        super().__init__(f"{stage} stage failed: {cause}")
        self.stage = stage
        self.cause = cause
        self.result = result


# ---------------------------------------------------------------- work items


@dataclass
class _Seg:
    segment: SpeechSegment
    emitted_at: float


@dataclass
class _Chunk:
    chunk: TranscriptChunk
    emitted_at: float
    asr_start: float
    asr_done: float


@dataclass
class _Work:
    phrase_id: int
    released: ReleasedPhrase
    onset_wall: float
    asr_start: float
    asr_done: float
    refine_start: float
    refine_done: float
    target_text: str = ""
    translate_start: float = 0.0
    translate_done: float = 0.0
    audio: AudioClip | None = None
    tts_start: float = 0.0
    tts_done: float = 0.0


class _Drain:
    pass


DRAIN = _Drain()


class _Stopped(Exception):
    pass


class _Stages:
    """Per-stage step functions shared by the concurrent and sequential runners."""

    def __init__(self, cfg: PipelineConfig, sink: PlaybackSink, result: PipelineResult):
        self.cfg = cfg
        self.sink = sink
        self.result = result
        self.buffer = RefineBuffer(lang=cfg.source_lang)
        self._onset_wall: dict[float, float] = {}
        self._last_chunk: _Chunk | None = None
        self._next_id = 0
        self._sink_last_id = -1

    def segments(self, frames: Iterable[AudioFrame]) -> Iterator[_Seg]:
        cfg = self.cfg
        score = cfg.vad_fn or (lambda fr: speech_probability(fr, cfg.vad))
        gate = SpeechGate(cfg.vad)
        t0 = time.monotonic()
        for frame in frames:
            if cfg.realtime_factor:
                wait = t0 + frame.end_time_s / cfg.realtime_factor - time.monotonic()
                if wait > 0:
                    time.sleep(wait)
            for seg in gate.push(frame, score(frame)):
                yield _Seg(seg, time.monotonic())
        for seg in gate.finish():
            yield _Seg(seg, time.monotonic())

    def asr(self, item: _Seg) -> list[_Chunk]:
        self.result.segments += 1
        start = time.monotonic()
        chunk = self.cfg.asr.transcribe(item.segment, self.cfg.source_lang)
        done = time.monotonic()
        self.result.transcripts.append(chunk)
        return [_Chunk(chunk, item.emitted_at, start, done)]

    def _work(self, rel: ReleasedPhrase, refine_start: float, refine_done: float) -> _Work:
        last = self._last_chunk
        w = _Work(self._next_id, rel, self._onset_wall.pop(rel.onset_s, last.emitted_at),
                  last.asr_start, last.asr_done, refine_start, refine_done)
        self._next_id += 1
        self.result.released += 1
        return w

    def refine(self, item: _Chunk) -> list[_Work]:
        self._onset_wall.setdefault(item.chunk.onset_s, item.emitted_at)
        self._last_chunk = item
        start = time.monotonic()
        _, released = push_chunk(self.buffer, item.chunk, self.cfg.refiner)
        done = time.monotonic()
        works = [self._work(rel, start, done) for rel in released]
        self._prune()
        return works

    def refine_drain(self) -> list[_Work]:
        start = time.monotonic()
        _, rel = flush(self.buffer)
        done = time.monotonic()
        works = [self._work(rel, start, done)] if rel is not None else []
        self._prune()
        return works

    def _prune(self) -> None:
        keep = {p.onset_s for p in self.buffer.pending}
        for k in [k for k in self._onset_wall if k not in keep]:
            del self._onset_wall[k]

    def translate(self, w: _Work) -> list[_Work]:
        w.translate_start = time.monotonic()
        tp = self.cfg.translator.translate(w.released.text, self.cfg.source_lang, self.cfg.target_lang)
        w.translate_done = time.monotonic()
        w.target_text = tp.target_text
        return [w]

    def tts(self, w: _Work) -> list[_Work]:
        w.tts_start = time.monotonic()
        w.audio = self.cfg.tts.synthesize(w.target_text, self.cfg.target_lang, self.cfg.tts_speed)
        w.tts_done = time.monotonic()
        return [w]

    def play(self, w: _Work) -> list:
        if w.phrase_id <= self._sink_last_id:
            raise RuntimeError(f"phrase {w.phrase_id} reached the sink out of order")
        self._sink_last_id = w.phrase_id
        playback = write_sink(w.audio, self.sink)
        rel = w.released
        self.result.phrases.append(PhraseResult(
            w.phrase_id, rel.text, w.target_text, self.cfg.source_lang, self.cfg.target_lang,
            rel.release_reason.value, rel.source_chunk_count, rel.onset_s, w.audio))
        self.result.records.append(LatencyRecord(
            w.phrase_id, rel.onset_s, w.onset_wall, w.asr_start, w.asr_done,
            w.refine_start, w.refine_done, w.translate_start, w.translate_done,
            w.tts_start, w.tts_done, playback, playback - w.onset_wall))
        return []


def _run_sequential(st: _Stages, frames: Iterable[AudioFrame]) -> None:
    stage = "segmenter"
    try:
        def downstream(works):
            nonlocal stage
            for w in works:
                stage = "translate"
                st.translate(w)
                stage = "tts"
                st.tts(w)
                stage = "sink"
                st.play(w)

        for seg in st.segments(frames):
            stage = "asr"
            for ch in st.asr(seg):
                stage = "refine"
                downstream(st.refine(ch))
            stage = "segmenter"
        stage = "refine"
        downstream(st.refine_drain())
    except Exception as exc:
        raise PipelineAborted(stage, exc, st.result) from exc


class _ConcurrentRunner:
    def __init__(self, st: _Stages, capacity: int):
        self.st = st
        self.capacity = capacity
        self.stop = threading.Event()
        self.error: tuple[str, BaseException] | None = None
        self._lock = threading.Lock()

    def _fail(self, stage: str, exc: BaseException) -> None:
        with self._lock:
            if self.error is None:
                self.error = (stage, exc)
        self.stop.set()

    def _put(self, q: queue.Queue, item) -> None:
        while True:
            if self.stop.is_set():
                raise _Stopped
            try:
                q.put(item, timeout=_POLL_S)
                return
            except queue.Full:
                continue

    def _get(self, q: queue.Queue):
        while True:
            if self.stop.is_set():
                raise _Stopped
            try:
                return q.get(timeout=_POLL_S)
            except queue.Empty:
                continue

    def _source(self, frames, outq) -> None:
        try:
            for seg in self.st.segments(frames):
                self._put(outq, seg)
            self._put(outq, DRAIN)
        except _Stopped:
            pass
        except Exception as exc:
            self._fail("segmenter", exc)

    def _worker(self, stage: str, fn: Callable, inq, outq, on_drain: Callable | None = None) -> None:
        try:
            while True:
                item = self._get(inq)
                if item is DRAIN:
                    for out in (on_drain() if on_drain else []):
                        self._put(outq, out)
                    if outq is not None:
                        self._put(outq, DRAIN)
                    return
                for out in fn(item):
                    self._put(outq, out)
        except _Stopped:
            pass
        except Exception as exc:
            self._fail(stage, exc)

    def run(self, frames: Iterable[AudioFrame]) -> None:
        st = self.st
        qs = [queue.Queue(maxsize=self.capacity) for _ in range(5)]
        threads = [
            threading.Thread(target=self._source, args=(frames, qs[0]), name="segmenter"),
            threading.Thread(target=self._worker, args=("asr", st.asr, qs[0], qs[1]), name="asr"),
            threading.Thread(target=self._worker, args=("refine", st.refine, qs[1], qs[2], st.refine_drain),
                             name="refine"),
            threading.Thread(target=self._worker, args=("translate", st.translate, qs[2], qs[3]),
                             name="translate"),
            threading.Thread(target=self._worker, args=("tts", st.tts, qs[3], qs[4]), name="tts"),
            threading.Thread(target=self._worker, args=("sink", st.play, qs[4], None), name="sink"),
        ]
        for t in threads:
            t.daemon = True
            t.start()
        for t in threads:
            t.join()
        if self.error is not None:
            stage, exc = self.error
            raise PipelineAborted(stage, exc, st.result) from exc


def run_pipeline(frames: Iterable[AudioFrame], cfg: PipelineConfig) -> PipelineResult:
    """Run the cascade over a frame source until it is exhausted.

    Raises :class:`PipelineAborted` (with partial results) if any stage fails;
    the refine backends built into this package degrade instead of failing.
    """
    own_sink = cfg.sink is None
    sink = NullSink() if own_sink else cfg.sink
    result = PipelineResult()
    st = _Stages(cfg, sink, result)
    try:
        if cfg.sequential:
            _run_sequential(st, frames)
        else:
            _ConcurrentRunner(st, cfg.queue_capacity).run(frames)
    finally:
        if own_sink:
            sink.close()
    log.info("pipeline done: %d segments, %d phrases", result.segments, len(result.phrases))
    return result


# ----------------------------------------------------------------------- trace

_RECORD_FIELDS = [f.name for f in fields(LatencyRecord)]


def latency_trace_write(records: Iterable[LatencyRecord], path: str | os.PathLike) -> None:
    """Write one JSON object per phrase: record fields, then per-stage durations."""
    with open(path, "w", encoding="utf-8") as f:
        for r in records:
            row = {"schema_version": TRACE_SCHEMA_VERSION}
            row.update(asdict(r))
            row.update({f"{k}_s": v for k, v in r.stage_durations().items()})
            f.write(json.dumps(row) + "\n")


def latency_trace_read(path: str | os.PathLike) -> list[LatencyRecord]:
    out = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            if line.strip():
                row = json.loads(line)
                out.append(LatencyRecord(**{k: row[k] for k in _RECORD_FIELDS}))
    return out


__all__ = [
    "BackendError", "LatencyRecord", "PhraseResult", "PipelineAborted", "PipelineConfig",
    "PipelineResult", "latency_trace_read", "latency_trace_write", "run_pipeline",
]
