"""HTTP clients for model servers.

Wire formats (see ``docs/protocol.md``):

* ASR   ``POST /v1/audio/transcriptions`` base64 WAV in JSON, reply ``{text, language}``
* LLM   ``POST /v1/chat/completions`` chat-completion request, reply text in
  ``choices[0].message.content``
* TTS   ``POST /v1/audio/speech`` JSON ``{model, text, lang, speed}``, reply WAV bytes
"""

from __future__ import annotations

import base64
import json
import logging
from importlib import resources
from string import Template
from typing import Any, Sequence

import httpx

from ..audio import AudioClip, WavError, read_wav_bytes, wav_bytes
from ..vad import SpeechSegment
from .base import (BackendEndpoint, ProtocolError, RefineVerdict, TranscriptChunk,
                   TransientBackendError, TranslatedPhrase, BackendError)

log = logging.getLogger(__name__)

PROMPT_VERSION = "v1"


def load_prompt(name: str, version: str = PROMPT_VERSION) -> Template:
    text = resources.files("cascade_st.prompts").joinpath(f"{name}_{version}.txt").read_text("utf-8")
    return Template(text)


class HttpClient:
    """POST with a per-attempt timeout and bounded retries on transient failures.

    Worst-case blocking is ``timeout_ms * (max_retries + 1)``; there is no
    backoff sleep between attempts.
    """

    def __init__(self, endpoint: BackendEndpoint, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        base = endpoint.base_url.rstrip("/")
        if base.endswith("/v1"):
            base = base[:-3]
        self._client = httpx.Client(base_url=base, timeout=endpoint.timeout_ms / 1000.0,
                                    transport=transport)

    def post(self, path: str, **kwargs) -> httpx.Response:
        attempts = self.endpoint.max_retries + 1
        last: Exception | None = None
        for attempt in range(attempts):
            try:
                resp = self._client.post(path, **kwargs)
            except httpx.TimeoutException as exc:
                last = exc
            except httpx.TransportError as exc:
                last = exc
            else:
                if resp.status_code >= 500:
                    last = BackendError(f"HTTP {resp.status_code}")
                elif resp.status_code >= 400:
                    raise ProtocolError(f"{path}: HTTP {resp.status_code}: {resp.text[:200]}")
                else:
                    return resp
            log.debug("%s attempt %d/%d failed: %s", path, attempt + 1, attempts, last)
        raise TransientBackendError(f"{path}: {attempts} attempt(s) failed: {last}")

    def post_json(self, path: str, payload: dict) -> Any:
        resp = self.post(path, json=payload)
        try:
            return resp.json()
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ProtocolError(f"{path}: response is not JSON ({exc})") from None

    def chat(self, messages: list[dict]) -> str:
        body = self.post_json("/v1/chat/completions", {
            "model": self.endpoint.model_name,
            "messages": messages,
            "temperature": 0,
        })
        try:
            content = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError):
            raise ProtocolError("chat completion missing choices[0].message.content") from None
        if not isinstance(content, str):
            raise ProtocolError("chat completion content is not a string")
        return content

    def close(self) -> None:
        self._client.close()


class HttpASR:
    name = "http-asr"

    def __init__(self, endpoint: BackendEndpoint, transport: httpx.BaseTransport | None = None):
        self.client = HttpClient(endpoint, transport)

    def transcribe(self, segment: SpeechSegment, lang_hint: str | None = None) -> TranscriptChunk:
        body = self.client.post_json("/v1/audio/transcriptions", {
            "model": self.client.endpoint.model_name,
            "audio": base64.b64encode(wav_bytes(segment.clip)).decode("ascii"),
            "format": "wav",
            "language": lang_hint,
        })
        if not isinstance(body, dict) or not isinstance(body.get("text"), str):
            raise ProtocolError("transcription reply lacks a string 'text' field")
        lang = body.get("language") or lang_hint or "und"
        if not isinstance(lang, str):
            raise ProtocolError("transcription 'language' must be a string")
        return TranscriptChunk(body["text"].strip(), lang, segment.onset_s, segment.offset_s, self.name)


def parse_refine_reply(content: str) -> RefineVerdict:
    """Strict parse of ``{"complete": bool, "text": str}``; raises ``ValueError`` otherwise."""
    obj = json.loads(content.strip())
    if not isinstance(obj, dict) or set(obj) != {"complete", "text"}:
        raise ValueError("expected exactly the keys 'complete' and 'text'")
    if not isinstance(obj["complete"], bool) or not isinstance(obj["text"], str):
        raise ValueError("'complete' must be a boolean and 'text' a string")
    return RefineVerdict(obj["complete"], obj["text"].strip())


class LlmRefiner:
    """Completeness judge backed by a chat model.

    Never raises: transport errors and malformed replies degrade to an
    incomplete verdict carrying the candidate unchanged.
    """

    name = "llm-refine"

    def __init__(self, endpoint: BackendEndpoint, transport: httpx.BaseTransport | None = None,
                 template: Template | None = None):
        self.client = HttpClient(endpoint, transport)
        self.template = template or load_prompt("refine")
        self.degraded_count = 0

    def render(self, candidate: str, context: Sequence[str], lang: str) -> str:
        ctx = "\n".join(f"- {s}" for s in context) or "(none)"
        return self.template.substitute(lang=lang, context=ctx, candidate=candidate)

    def assess_phrase(self, candidate: str, context: Sequence[str] = (), lang: str = "en") -> RefineVerdict:
        prompt = self.render(candidate, context, lang)
        try:
            return parse_refine_reply(self.client.chat([{"role": "user", "content": prompt}]))
        except (BackendError, ValueError) as exc:
            self.degraded_count += 1
            log.warning("refine backend reply unusable, treating as incomplete: %s", exc)
            return RefineVerdict(False, candidate.strip())


class LlmTranslator:
    name = "llm-translate"
    is_identity = False

    def __init__(self, endpoint: BackendEndpoint, transport: httpx.BaseTransport | None = None,
                 template: Template | None = None):
        self.client = HttpClient(endpoint, transport)
        self.template = template or load_prompt("translate")

    def translate(self, phrase: str, source_lang: str, target_lang: str) -> TranslatedPhrase:
        if not phrase.strip():
            raise ValueError("phrase must be non-empty")
        prompt = self.template.substitute(source_lang=source_lang, target_lang=target_lang, phrase=phrase)
        reply = self.client.chat([{"role": "user", "content": prompt}]).strip()
        if not reply:
            raise ProtocolError("empty translation reply")
        return TranslatedPhrase(phrase, reply, source_lang, target_lang)


class HttpTTS:
    name = "http-tts"

    def __init__(self, endpoint: BackendEndpoint, transport: httpx.BaseTransport | None = None):
        self.client = HttpClient(endpoint, transport)

    def synthesize(self, text: str, lang: str = "", speed: float = 1.0) -> AudioClip:
        if not text.strip():
            raise ValueError("text must be non-empty")
        resp = self.client.post("/v1/audio/speech", json={
            "model": self.client.endpoint.model_name,
            "text": text,
            "lang": lang,
            "speed": speed,
        })
        try:
            clip = read_wav_bytes(resp.content)
        except WavError as exc:
            raise ProtocolError(f"speech reply is not a usable WAV: {exc}") from None
        if len(clip) == 0:
            raise ProtocolError("speech reply has zero duration")
        return clip
