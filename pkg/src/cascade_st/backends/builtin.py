"""Deterministic in-process backends for hermetic runs and tests.

Each accepts ``delay_s``, an artificial per-call sleep used by latency tests.
"""

from __future__ import annotations

import re
import time
from typing import Mapping, Sequence

from ..audio import CANONICAL_RATE, AudioClip, tone
from ..vad import SpeechSegment
from .base import ProtocolError, RefineVerdict, TranscriptChunk, TranslatedPhrase
from .tables import AlignmentTable

DEFAULT_FILLERS: dict[str, tuple[str, ...]] = {
    "en": ("uh", "um", "you know", "i mean"),
    "es": ("eh", "este", "o sea", "pues"),
}

_TERMINALS = ".!?…"
_CLOSERS = "\"'”’»)]}›"
_SPACE_BEFORE_PUNCT = re.compile(r"\s+([.,;:!?…])")


def _sleep(delay_s: float) -> None:
    if delay_s > 0:
        time.sleep(delay_s)


class AlignmentMockASR:
    """Looks segment time ranges up in a forced-alignment table."""

    name = "alignment-mock"

    def __init__(self, table: AlignmentTable, language: str = "en", delay_s: float = 0.0):
        self.table = table
        self.language = language
        self.delay_s = delay_s

    def transcribe(self, segment: SpeechSegment, lang_hint: str | None = None) -> TranscriptChunk:
        _sleep(self.delay_s)
        text = self.table.lookup(segment.onset_s, segment.offset_s)
        return TranscriptChunk(text, lang_hint or self.language, segment.onset_s,
                               segment.offset_s, self.name)


def _filler_pattern(fillers: Sequence[str]) -> re.Pattern | None:
    if not fillers:
        return None
    # longest first so "o sea" is tried before a hypothetical "o"
    alts = sorted((r"\s+".join(map(re.escape, f.split())) for f in fillers), key=len, reverse=True)
    return re.compile(r"(?<![\w'])(?:" + "|".join(alts) + r")(?![\w'])\s*,?", re.IGNORECASE)


def is_complete(text: str) -> bool:
    """Sentence-final punctuation check, tolerant of closing quotes/brackets.

    An inverted Spanish mark (¿ ¡) that is never closed keeps the text incomplete.
    """
    body = text.rstrip().rstrip(_CLOSERS).rstrip()
    if not body or body[-1] not in _TERMINALS:
        return False
    if body.rfind("¿") > body.rfind("?") or body.rfind("¡") > body.rfind("!"):
        return False
    return True


class RuleRefiner:
    """Punctuation-based completeness plus lexicon filler removal."""

    name = "rule"

    def __init__(self, fillers: Mapping[str, Sequence[str]] | None = None, delay_s: float = 0.0):
        lex = dict(DEFAULT_FILLERS if fillers is None else fillers)
        self.fillers = {lang.lower(): tuple(words) for lang, words in lex.items()}
        self._patterns = {lang: _filler_pattern(words) for lang, words in self.fillers.items()}
        self.delay_s = delay_s

    def clean(self, text: str, lang: str) -> str:
        pattern = self._patterns.get(lang.lower().split("-")[0])
        out = " ".join(text.split())
        while pattern is not None:
            nxt = " ".join(pattern.sub(" ", out).split())
            if nxt == out:
                break
            out = nxt
        out = _SPACE_BEFORE_PUNCT.sub(r"\1", out)
        if not any(ch.isalnum() for ch in out):
            return ""
        return out

    def assess_phrase(self, candidate: str, context: Sequence[str] = (), lang: str = "en") -> RefineVerdict:
        _sleep(self.delay_s)
        cleaned = self.clean(candidate, lang)
        return RefineVerdict(bool(cleaned) and is_complete(cleaned), cleaned)


_TOKEN = re.compile(r"^(\W*)(.*?)(\W*)$", re.DOTALL)


class DictionaryTranslator:
    """Whole-sentence table lookup, then word-by-word; unknown words come out as ``⟨word⟩``."""

    name = "dictionary-mock"
    is_identity = False

    def __init__(self, table: Mapping[str, str], delay_s: float = 0.0):
        self.table = dict(table)
        self._folded = {k.casefold(): v for k, v in self.table.items()}
        self.delay_s = delay_s

    def _sentence(self, phrase: str) -> str | None:
        if phrase in self.table:
            return self.table[phrase]
        core = phrase.rstrip(_TERMINALS + _CLOSERS)
        hit = self._folded.get(core.strip().casefold())
        if hit is not None:
            return hit + phrase[len(core):]
        return None

    def _word(self, token: str) -> str:
        lead, core, trail = _TOKEN.match(token).groups()
        if not core:
            return token
        hit = self._folded.get(core.casefold())
        return f"{lead}{hit if hit is not None else '⟨' + core + '⟩'}{trail}"

    def translate(self, phrase: str, source_lang: str, target_lang: str) -> TranslatedPhrase:
        if not phrase.strip():
            raise ValueError("phrase must be non-empty")
        _sleep(self.delay_s)
        phrase = phrase.strip()
        out = self._sentence(phrase)
        if out is None:
            out = " ".join(self._word(tok) for tok in phrase.split())
        return TranslatedPhrase(phrase, out, source_lang, target_lang)


class IdentityTranslator:
    name = "identity-mock"
    is_identity = True

    def __init__(self, delay_s: float = 0.0):
        self.delay_s = delay_s

    def translate(self, phrase: str, source_lang: str, target_lang: str) -> TranslatedPhrase:
        if not phrase.strip():
            raise ValueError("phrase must be non-empty")
        _sleep(self.delay_s)
        return TranslatedPhrase(phrase, phrase, source_lang, target_lang)


class ToneTTS:
    """440 Hz sine lasting 0.3 s per word, divided by ``speed``."""

    name = "tone-mock"
    seconds_per_word = 0.3

    def __init__(self, delay_s: float = 0.0, sample_rate_hz: int = CANONICAL_RATE,
                 freq_hz: float = 440.0, amplitude: float = 0.5):
        self.delay_s = delay_s
        self.sample_rate_hz = sample_rate_hz
        self.freq_hz = freq_hz
        self.amplitude = amplitude

    def synthesize(self, text: str, lang: str = "", speed: float = 1.0) -> AudioClip:
        if not text.strip():
            raise ValueError("text must be non-empty")
        if speed <= 0:
            raise ValueError("speed must be positive")
        _sleep(self.delay_s)
        duration = len(text.split()) * self.seconds_per_word / speed
        samples = tone(self.freq_hz, duration, self.sample_rate_hz, self.amplitude)
        if len(samples) == 0:
            raise ProtocolError("synthesis produced no audio")
        return AudioClip(samples, self.sample_rate_hz)
