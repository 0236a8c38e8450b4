"""Stage backends: contracts, built-in deterministic mocks and HTTP clients."""

from .base import (AsrBackend, BackendEndpoint, BackendError, ProtocolError, RefineBackend,
                   RefineVerdict, TranscriptChunk, TransientBackendError, TranslatedPhrase,
                   TranslateBackend, TtsBackend)
from .builtin import (DEFAULT_FILLERS, AlignmentMockASR, DictionaryTranslator, IdentityTranslator,
                      RuleRefiner, ToneTTS, is_complete)
from .http import HttpASR, HttpClient, HttpTTS, LlmRefiner, LlmTranslator, parse_refine_reply
from .tables import AlignmentEntry, AlignmentTable, TableError, load_alignment, load_dictionary

__all__ = [
    "AlignmentEntry", "AlignmentMockASR", "AlignmentTable", "AsrBackend", "BackendEndpoint",
    "BackendError", "DEFAULT_FILLERS", "DictionaryTranslator", "HttpASR", "HttpClient", "HttpTTS",
    "IdentityTranslator", "LlmRefiner", "LlmTranslator", "ProtocolError", "RefineBackend",
    "RefineVerdict", "RuleRefiner", "TableError", "ToneTTS", "TranscriptChunk",
    "TransientBackendError", "TranslatedPhrase", "TranslateBackend", "TtsBackend",
    "is_complete", "load_alignment", "load_dictionary", "parse_refine_reply",
]
