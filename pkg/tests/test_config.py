import pytest

from cascade_st.backends import (AlignmentMockASR, DictionaryTranslator, HttpASR, IdentityTranslator,
                                 LlmRefiner, RuleRefiner, ToneTTS)
from cascade_st.config import ConfigError, env_overrides, load_config, pipeline_config
from cascade_st.vad import VadConfig

from helpers import GOLDEN


def test_defaults():
    cfg = load_config(environ={})
    assert cfg["source_lang"] == "en" and cfg["queue_capacity"] == 16
    assert cfg.vad_config() == VadConfig()
    pcfg = pipeline_config(cfg)
    assert isinstance(pcfg.asr, AlignmentMockASR) and isinstance(pcfg.refiner, RuleRefiner)
    assert isinstance(pcfg.translator, DictionaryTranslator) and isinstance(pcfg.tts, ToneTTS)
    assert pcfg.realtime_factor is None


def test_golden_config_resolves_relative_paths():
    pcfg = pipeline_config(load_config(GOLDEN / "config.toml", environ={}))
    assert len(pcfg.asr.table) == 5
    assert pcfg.translator.table["good morning"] == "buenos días"


def test_env_overrides_file(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('target_lang = "fr"\n[vad]\nthreshold = 0.4\n')
    env = {"CASCADE_ST_VAD__THRESHOLD": "0.7", "CASCADE_ST_TRANSLATE__BACKEND": "identity",
           "CASCADE_ST_QUEUE_CAPACITY": "4", "OTHER": "x"}
    cfg = load_config(p, environ=env)
    assert cfg["target_lang"] == "fr"
    assert cfg.vad_config().threshold == 0.7
    assert cfg["queue_capacity"] == 4
    assert isinstance(pipeline_config(cfg).translator, IdentityTranslator)


def test_env_value_parsing():
    env = env_overrides({"CASCADE_ST_A": "true", "CASCADE_ST_B": "http://x:1", "CASCADE_ST_C__D": "[1, 2]"})
    assert env == {"a": True, "b": "http://x:1", "c": {"d": [1, 2]}}


def test_explicit_overrides_win(tmp_path):
    cfg = load_config(None, {"source_lang": "de"}, environ={"CASCADE_ST_SOURCE_LANG": "it"})
    assert cfg["source_lang"] == "de"


def test_http_backends(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[asr]\nbackend = "http"\nbase_url = "http://127.0.0.1:1"\ntimeout_ms = 500\n'
                 '[refine]\nbackend = "llm"\nbase_url = "http://127.0.0.1:1"\nmodel = "llama"\n')
    pcfg = pipeline_config(load_config(p, environ={}))
    assert isinstance(pcfg.asr, HttpASR) and pcfg.asr.client.endpoint.timeout_ms == 500
    assert isinstance(pcfg.refiner, LlmRefiner) and pcfg.refiner.client.endpoint.model_name == "llama"


@pytest.mark.parametrize("text", [
    "this is = not toml [",
    '[asr]\nbackend = "whisper-in-process"\n',
    '[asr]\nbackend = "http"\n',
    '[vad]\nthreshold = 2.0\n',
    '[vad]\nbogus = 1\n',
    '[translate]\ndictionary = "missing.jsonl"\n',
    'source_lang = "en"\ntarget_lang = "en"\n',
    'queue_capacity = 0\n',
])
def test_config_errors(tmp_path, text):
    p = tmp_path / "c.toml"
    p.write_text(text)
    with pytest.raises(ConfigError):
        pipeline_config(load_config(p, environ={}))


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
