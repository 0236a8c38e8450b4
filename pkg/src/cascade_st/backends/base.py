"""Stage data types, backend contracts and errors."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

from ..audio import AudioClip
from ..vad import SpeechSegment


class BackendError(RuntimeError):
    """Base class for stage backend failures."""


class TransientBackendError(BackendError):
    """Timeout or transport failure; retries exhausted when it reaches the caller."""


class ProtocolError(BackendError):
    """The server answered with something that violates the wire contract."""


@dataclass(frozen=True)
class TranscriptChunk:
    text: str
    language: str
    onset_s: float
    offset_s: float
    source: str = ""

    def __post_init__(self):
        if self.offset_s < self.onset_s:
            raise ValueError("offset_s must be >= onset_s")


@dataclass(frozen=True)
class RefineVerdict:
    complete: bool
    cleaned_text: str

    def __post_init__(self):
        if self.cleaned_text != self.cleaned_text.strip():
            raise ValueError("cleaned_text must not carry surrounding whitespace")


@dataclass(frozen=True)
class TranslatedPhrase:
    source_text: str
    target_text: str
    source_lang: str
    target_lang: str


@dataclass(frozen=True)
class BackendEndpoint:
    base_url: str
    model_name: str = ""
    timeout_ms: int = 10000
    max_retries: int = 1

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")


class AsrBackend(Protocol):
    name: str

    def transcribe(self, segment: SpeechSegment, lang_hint: str | None = None) -> TranscriptChunk: ...


class RefineBackend(Protocol):
    name: str

    def assess_phrase(self, candidate: str, context: Sequence[str], lang: str) -> RefineVerdict: ...


class TranslateBackend(Protocol):
    name: str
    is_identity: bool

    def translate(self, phrase: str, source_lang: str, target_lang: str) -> TranslatedPhrase: ...


class TtsBackend(Protocol):
    name: str

    def synthesize(self, text: str, lang: str, speed: float = 1.0) -> AudioClip: ...
