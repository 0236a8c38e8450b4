"""Streaming cascade speech translation: VAD-gated ASR, phrase refinement, MT and TTS."""

__version__ = "0.1.0"
