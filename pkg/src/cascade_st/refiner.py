"""Rolling-buffer release policy between ASR and translation.

Chunks accumulate until the refine backend judges the joined text complete
(natural release) or a sixth incomplete chunk arrives, in which case the five
pending chunks are flushed as-is (forced release) and the new chunk starts a
fresh buffer. Released sentences feed a five-sentence context window.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

from .backends.base import RefineBackend, TranscriptChunk

CAPACITY = 5
CONTEXT_SIZE = 5


class ReleaseReason(str, enum.Enum):
    NATURAL = "natural"
    FORCED = "forced"


@dataclass(frozen=True)
class PendingChunk:
    text: str
    onset_s: float


@dataclass(frozen=True)
class ReleasedPhrase:
    text: str
    release_reason: ReleaseReason
    source_chunk_count: int
    onset_s: float

    def __post_init__(self):
        if not self.text:
            raise ValueError("released text must be non-empty")
        if self.source_chunk_count < 1:
            raise ValueError("source_chunk_count must be positive")


@dataclass
class RefineBuffer:
    pending: list[PendingChunk] = field(default_factory=list)
    context: deque = field(default_factory=lambda: deque(maxlen=CONTEXT_SIZE))
    lang: str = "en"

    @property
    def pending_text(self) -> str:
        return " ".join(p.text for p in self.pending)

    def to_json(self) -> dict:
        return {
            "lang": self.lang,
            "pending": [{"text": p.text, "onset_s": p.onset_s} for p in self.pending],
            "context": list(self.context),
        }


def _join(parts: Sequence[str]) -> str:
    return " ".join(p for p in parts if p)


def _release(buf: RefineBuffer, text: str, reason: ReleaseReason, chunks: Sequence[PendingChunk],
             onset_s: float) -> ReleasedPhrase:
    buf.context.append(text)
    return ReleasedPhrase(text, reason, len(chunks), onset_s)


def push_chunk(buf: RefineBuffer, chunk: TranscriptChunk,
               backend: RefineBackend) -> tuple[RefineBuffer, list[ReleasedPhrase]]:
    """Offer one ASR chunk to the buffer; return the (mutated) buffer and any releases."""
    if not chunk.text.strip():
        return buf, []

    prefix = buf.pending_text
    candidate = _join([prefix, chunk.text.strip()])
    verdict = backend.assess_phrase(candidate, list(buf.context), buf.lang)
    cleaned = verdict.cleaned_text

    if verdict.complete and cleaned:
        onset = buf.pending[0].onset_s if buf.pending else chunk.onset_s
        count = len(buf.pending) + 1
        buf.pending = []
        buf.context.append(cleaned)
        return buf, [ReleasedPhrase(cleaned, ReleaseReason.NATURAL, count, onset)]

    # Work out what the new chunk adds to the pending text.
    if not prefix:
        contribution = cleaned
    elif cleaned == prefix:
        contribution = ""
    elif cleaned.startswith(prefix + " "):
        contribution = cleaned[len(prefix) + 1:]
    else:
        # Cleaning rewrote text across the chunk boundary; judge the chunk alone.
        contribution = backend.assess_phrase(chunk.text.strip(), list(buf.context), buf.lang).cleaned_text
    if not contribution:
        return buf, []

    released = []
    if len(buf.pending) >= CAPACITY:
        flushed = buf.pending
        released.append(_release(buf, _join(p.text for p in flushed), ReleaseReason.FORCED,
                                 flushed, flushed[0].onset_s))
        buf.pending = []
    buf.pending.append(PendingChunk(contribution, chunk.onset_s))
    return buf, released


def flush(buf: RefineBuffer) -> tuple[RefineBuffer, ReleasedPhrase | None]:
    """Release whatever is pending as a forced phrase (end of stream)."""
    if not buf.pending:
        return buf, None
    flushed = buf.pending
    buf.pending = []
    text = _join(p.text for p in flushed)
    return buf, _release(buf, text, ReleaseReason.FORCED, flushed, flushed[0].onset_s)
