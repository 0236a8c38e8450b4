"""Corpus evaluation: run the cascade per item, score WER and BLEU, summarize latency.

A corpus is a directory holding ``manifest.jsonl``; each row names an item::

    {"id": "utt1", "audio": "utt1.wav", "transcript": "utt1.src.txt",
     "translation": "utt1.tgt.txt", "alignment": "utt1.align.jsonl"}

Paths are relative to the corpus directory. ``alignment`` is optional and only
used by the alignment ASR mock. Items missing the audio, transcript or
translation member are skipped and listed in the report.
"""

from __future__ import annotations

import csv
import json
import logging
import os
import statistics
from dataclasses import dataclass, field
from pathlib import Path

from .audio import wav_frames
from .config import ConfigError, RunConfig, pipeline_config
from .metrics import corpus_bleu, latency_summary, normalize_text, sentence_bleu, wer
from .pipeline import run_pipeline

log = logging.getLogger(__name__)

REPORT_SCHEMA_VERSION = 1
MANIFEST_NAME = "manifest.jsonl"
_MEMBERS = ("audio", "transcript", "translation")


@dataclass
class CorpusItem:
    id: str
    audio: Path
    transcript: Path
    translation: Path
    alignment: Path | None = None


@dataclass
class Corpus:
    items: list[CorpusItem] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)


def load_corpus(corpus_dir: str | os.PathLike) -> Corpus:
    root = Path(corpus_dir)
    manifest = root / MANIFEST_NAME
    if not manifest.is_file():
        raise ConfigError(f"corpus manifest not found: {manifest}")
    corpus = Corpus()
    rows = 0
    with open(manifest, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            rows += 1
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{manifest}:{lineno}: invalid JSON ({exc.msg})") from None
            item_id = str(row.get("id", f"line{lineno}"))
            missing = [m for m in _MEMBERS if not row.get(m) or not (root / row[m]).is_file()]
            if missing:
                log.warning("skipping corpus item %s: missing %s", item_id, ", ".join(missing))
                corpus.skipped.append({"id": item_id, "missing": missing})
                continue
            align = row.get("alignment")
            corpus.items.append(CorpusItem(item_id, root / row["audio"], root / row["transcript"],
                                           root / row["translation"], root / align if align else None))
    if rows == 0:
        raise ConfigError(f"corpus manifest is empty: {manifest}")
    return corpus


def evaluate_corpus(corpus: Corpus, cfg: RunConfig) -> tuple[dict, list[dict]]:
    """Run every item as fast as possible; return the JSON report and per-utterance CSV rows."""
    src_lang, tgt_lang = cfg["source_lang"], cfg["target_lang"]
    frame_ms = int(cfg["frame_ms"])
    rows, refs, hyps, records = [], [], [], []
    for item in corpus.items:
        ref_src = item.transcript.read_text(encoding="utf-8")
        ref_tgt = item.translation.read_text(encoding="utf-8")
        if not normalize_text(ref_src, src_lang):
            log.warning("skipping corpus item %s: empty reference transcript", item.id)
            corpus.skipped.append({"id": item.id, "missing": ["transcript"]})
            continue
        pcfg = pipeline_config(cfg, alignment=item.alignment)
        pcfg.realtime_factor = None
        result = run_pipeline(wav_frames(item.audio, frame_ms), pcfg)
        records.extend(result.records)
        hyp_src = result.transcript_text
        hyp_tgt = " ".join(p.target_text for p in result.phrases)
        w = wer(ref_src, hyp_src, src_lang)
        ref_toks, hyp_toks = normalize_text(ref_tgt, tgt_lang), normalize_text(hyp_tgt, tgt_lang)
        refs.append(ref_toks)
        hyps.append(hyp_toks)
        rows.append({
            "id": item.id,
            **w.to_json(),
            "sentence_bleu": sentence_bleu(ref_toks, hyp_toks).score,
            "phrases": len(result.phrases),
            "hypothesis_transcript": hyp_src,
            "hypothesis_translation": hyp_tgt,
        })

    report: dict = {"schema_version": REPORT_SCHEMA_VERSION, "items": len(rows),
                    "skipped": corpus.skipped}
    if rows:
        wers = [r["wer"] for r in rows]
        bleus = [r["sentence_bleu"] for r in rows]
        report["wer"] = {"median": statistics.median(wers), "mean": statistics.fmean(wers),
                         "per_utterance": [{k: r[k] for k in ("id", "wer", "substitutions", "insertions",
                                                               "deletions", "reference_words")}
                                           for r in rows]}
        report["bleu"] = {"corpus": corpus_bleu(refs, hyps).to_json(),
                          "median_sentence": statistics.median(bleus),
                          "per_sentence": [{"id": r["id"], "bleu": r["sentence_bleu"]} for r in rows]}
    else:
        report["wer"] = None
        report["bleu"] = None
    report["latency"] = latency_summary(records).to_json() if records else None
    report["comet"] = None
    return report, rows


CSV_FIELDS = ["id", "wer", "substitutions", "insertions", "deletions", "reference_words",
              "sentence_bleu", "phrases", "hypothesis_transcript", "hypothesis_translation"]


def write_report(report: dict, rows: list[dict], json_path: str | os.PathLike,
                 csv_path: str | os.PathLike) -> None:
    Path(json_path).write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        writer.writeheader()
        for r in rows:
            writer.writerow({k: r[k] for k in CSV_FIELDS})
