"""TOML run configuration.

Layout (every key optional; defaults shown in ``docs/config.md``)::

    source_lang = "en"
    target_lang = "es"
    queue_capacity = 16
    sequential = false
    realtime_factor = 0       # 0 = as fast as possible
    frame_ms = 30
    tts_speed = 1.0

    [vad]        threshold, noise_floor_dbfs, speech_ref_dbfs, hangover_ms, min_speech_ms, max_segment_s
    [asr]        backend = "alignment" | "http"; alignment = "file.jsonl"; delay_ms
    [refine]     backend = "rule" | "llm"; delay_ms; [refine.fillers] en = [...]
    [translate]  backend = "dictionary" | "identity" | "llm"; dictionary = "file.jsonl"; delay_ms
    [tts]        backend = "tone" | "http"; delay_ms
    [sink]       kind = "wav" | "null"

HTTP stages take ``base_url``, ``model``, ``timeout_ms`` and ``max_retries``.
Environment variables ``CASCADE_ST_<KEY>`` override file values; nested keys
use a double underscore, e.g. ``CASCADE_ST_ASR__BACKEND=http``. Relative paths
resolve against the config file's directory.
"""

from __future__ import annotations

import copy
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .backends import (AlignmentMockASR, AlignmentTable, BackendEndpoint, DictionaryTranslator,
                       HttpASR, HttpTTS, IdentityTranslator, LlmRefiner, LlmTranslator, RuleRefiner,
                       TableError, ToneTTS, load_alignment, load_dictionary)
from .vad import VadConfig

ENV_PREFIX = "CASCADE_ST_"


class ConfigError(ValueError):
    pass


DEFAULTS: dict[str, Any] = {
    "source_lang": "en",
    "target_lang": "es",
    "queue_capacity": 16,
    "sequential": False,
    "realtime_factor": 0.0,
    "frame_ms": 30,
    "tts_speed": 1.0,
    "vad": {},
    "asr": {"backend": "alignment", "delay_ms": 0},
    "refine": {"backend": "rule", "delay_ms": 0},
    "translate": {"backend": "dictionary", "delay_ms": 0},
    "tts": {"backend": "tone", "delay_ms": 0},
    "sink": {"kind": "wav"},
}


def _merge(base: dict, over: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _env_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def env_overrides(environ: Mapping[str, str] | None = None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX) or key == ENV_PREFIX + "PURE_PYTHON":
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = _env_value(raw)
    return out


@dataclass
class RunConfig:
    """Parsed configuration; ``base_dir`` anchors relative table paths."""

    data: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS))
    base_dir: Path = field(default_factory=Path.cwd)
    path: Path | None = None

    def __getitem__(self, key):
        return self.data[key]

    def get(self, key, default=None):
        return self.data.get(key, default)

    def resolve(self, p: str | os.PathLike) -> Path:
        p = Path(p)
        return p if p.is_absolute() else self.base_dir / p

    def vad_config(self) -> VadConfig:
        try:
            return VadConfig(**self.data.get("vad", {}))
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[vad]: {exc}") from None


def load_config(path: str | os.PathLike | None = None, overrides: Mapping | None = None,
                environ: Mapping[str, str] | None = None) -> RunConfig:
    """Defaults, then the TOML file, then environment variables, then explicit ``overrides``."""
    data = copy.deepcopy(DEFAULTS)
    base = Path.cwd()
    if path is not None:
        p = Path(path)
        try:
            with open(p, "rb") as f:
                data = _merge(data, tomllib.load(f))
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML in {p}: {exc}") from None
        base = p.resolve().parent
    data = _merge(data, env_overrides(environ))
    if overrides:
        data = _merge(data, overrides)
    return RunConfig(data, base, Path(path) if path is not None else None)


def _endpoint(stage: str, sect: Mapping) -> BackendEndpoint:
    if "base_url" not in sect:
        raise ConfigError(f"[{stage}] http backend needs base_url")
    try:
        return BackendEndpoint(sect["base_url"], sect.get("model", ""),
                               int(sect.get("timeout_ms", 10000)), int(sect.get("max_retries", 1)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{stage}] {exc}") from None


def _delay(sect: Mapping) -> float:
    return float(sect.get("delay_ms", 0)) / 1000.0


def build_asr(cfg: RunConfig, alignment: str | os.PathLike | None = None):
    sect = cfg["asr"]
    kind = sect.get("backend")
    if kind == "alignment":
        src = alignment if alignment is not None else sect.get("alignment")
        try:
            table = load_alignment(cfg.resolve(src)) if src else AlignmentTable()
        except (OSError, TableError) as exc:
            raise ConfigError(f"[asr] alignment: {exc}") from None
        return AlignmentMockASR(table, cfg["source_lang"], _delay(sect))
    if kind == "http":
        return HttpASR(_endpoint("asr", sect))
    raise ConfigError(f"[asr] unknown backend {kind!r}")


def build_refiner(cfg: RunConfig):
    sect = cfg["refine"]
    kind = sect.get("backend")
    if kind == "rule":
        return RuleRefiner(sect.get("fillers"), _delay(sect))
    if kind == "llm":
        return LlmRefiner(_endpoint("refine", sect))
    raise ConfigError(f"[refine] unknown backend {kind!r}")


def build_translator(cfg: RunConfig):
    sect = cfg["translate"]
    kind = sect.get("backend")
    if kind == "dictionary":
        src = sect.get("dictionary")
        try:
            table = load_dictionary(cfg.resolve(src)) if src else {}
        except (OSError, TableError) as exc:
            raise ConfigError(f"[translate] dictionary: {exc}") from None
        return DictionaryTranslator(table, _delay(sect))
    if kind == "identity":
        return IdentityTranslator(_delay(sect))
    if kind == "llm":
        return LlmTranslator(_endpoint("translate", sect))
    raise ConfigError(f"[translate] unknown backend {kind!r}")


def build_tts(cfg: RunConfig):
    sect = cfg["tts"]
    kind = sect.get("backend")
    if kind == "tone":
        return ToneTTS(_delay(sect))
    if kind == "http":
        return HttpTTS(_endpoint("tts", sect))
    raise ConfigError(f"[tts] unknown backend {kind!r}")


def pipeline_config(cfg: RunConfig, sink=None, alignment=None):
    """Assemble a :class:`~cascade_st.pipeline.PipelineConfig` from a run config."""
    from .pipeline import PipelineConfig

    rtf = float(cfg.get("realtime_factor") or 0.0)
    try:
        return PipelineConfig(
            asr=build_asr(cfg, alignment),
            refiner=build_refiner(cfg),
            translator=build_translator(cfg),
            tts=build_tts(cfg),
            source_lang=str(cfg["source_lang"]),
            target_lang=str(cfg["target_lang"]),
            vad=cfg.vad_config(),
            queue_capacity=int(cfg["queue_capacity"]),
            sink=sink,
            realtime_factor=rtf if rtf > 0 else None,
            sequential=bool(cfg["sequential"]),
            tts_speed=float(cfg["tts_speed"]),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from None
