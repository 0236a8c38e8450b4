"""Command-line entry point: ``cascade-st {run,eval,vad,refine}``.

Exit codes: 0 success, 2 backend failure, 3 configuration or input error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import sys
import uuid
from pathlib import Path

from . import __version__
from .audio import WavError, WavFileSink, NullSink, wav_frames
from .backends import TranscriptChunk
from .config import ConfigError, build_refiner, load_config, pipeline_config
from .evaluation import evaluate_corpus, load_corpus, write_report
from .pipeline import PipelineAborted, latency_trace_write, run_pipeline
from .refiner import RefineBuffer, flush, push_chunk
from .vad import SpeechGate, speech_probability

log = logging.getLogger("cascade_st")

EXIT_OK = 0
EXIT_BACKEND = 2
EXIT_CONFIG = 3
VAD_SCHEMA_VERSION = 1


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _now() -> str:
    return dt.datetime.now(dt.timezone.utc).isoformat(timespec="milliseconds")


def _write_manifest(path: Path, manifest: dict) -> None:
    path.write_text(json.dumps(manifest, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")


def cmd_run(args) -> int:
    out_dir = Path(args.output_dir)
    overrides = {}
    if args.source_lang:
        overrides["source_lang"] = args.source_lang
    if args.target_lang:
        overrides["target_lang"] = args.target_lang
    if args.sequential:
        overrides["sequential"] = True
    if args.realtime_factor is not None:
        overrides["realtime_factor"] = args.realtime_factor
    if args.sink:
        overrides["sink"] = {"kind": args.sink}

    manifest = {
        "run_id": args.run_id or uuid.uuid4().hex,
        "tool_version": __version__,
        "command": "run",
        "config_path": str(args.config) if args.config else None,
        "inputs": [str(args.input)],
        "output_dir": str(out_dir),
        "artifacts": {},
        "started_at": _now(),
    }
    try:
        cfg = load_config(args.config, overrides)
        frames = wav_frames(args.input, int(cfg["frame_ms"]))
        sink_kind = cfg["sink"].get("kind", "wav")
        if sink_kind not in ("wav", "null"):
            raise ConfigError(f"[sink] unknown kind {sink_kind!r}")
        pcfg = pipeline_config(cfg)
        out_dir.mkdir(parents=True, exist_ok=True)
        artifacts = manifest["artifacts"]
        if sink_kind == "wav":
            artifacts["audio"] = str(out_dir / "output.wav")
            sink = WavFileSink(artifacts["audio"])
        else:
            sink = NullSink()
        pcfg.sink = sink
    except (ConfigError, WavError, ValueError, OSError) as exc:
        print(f"cascade-st run: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    status = EXIT_OK
    try:
        result = run_pipeline(frames, pcfg)
    except PipelineAborted as exc:
        print(f"cascade-st run: aborted: {exc}", file=sys.stderr)
        result = exc.result
        status = EXIT_BACKEND
    finally:
        sink.close()

    trace = Path(args.trace) if args.trace else out_dir / "trace.jsonl"
    latency_trace_write(result.records, trace)
    artifacts["trace"] = str(trace)
    artifacts["phrases"] = str(out_dir / "phrases.jsonl")
    with open(artifacts["phrases"], "w", encoding="utf-8") as f:
        for p in result.phrases:
            f.write(json.dumps({
                "phrase_id": p.phrase_id, "source_text": p.source_text, "target_text": p.target_text,
                "source_lang": p.source_lang, "target_lang": p.target_lang,
                "release_reason": p.release_reason, "source_chunk_count": p.source_chunk_count,
                "onset_s": p.onset_s, "audio_samples": len(p.audio),
            }, ensure_ascii=False) + "\n")
    artifacts["translations"] = str(out_dir / "translations.txt")
    Path(artifacts["translations"]).write_text(
        "".join(p.target_text + "\n" for p in result.phrases), encoding="utf-8")
    manifest.update(ended_at=_now(), exit_code=status, phrases=len(result.phrases))
    artifacts["manifest"] = str(out_dir / "manifest.json")
    _write_manifest(out_dir / "manifest.json", manifest)
    return status


def cmd_eval(args) -> int:
    started = _now()
    try:
        cfg = load_config(args.config)
        corpus = load_corpus(args.corpus)
        report, rows = evaluate_corpus(corpus, cfg)
    except (ConfigError, WavError) as exc:
        print(f"cascade-st eval: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PipelineAborted as exc:
        print(f"cascade-st eval: aborted: {exc}", file=sys.stderr)
        return EXIT_BACKEND

    report_path = Path(args.report)
    csv_path = Path(args.csv) if args.csv else report_path.with_suffix(".csv")
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report["run"] = {"run_id": args.run_id or uuid.uuid4().hex, "tool_version": __version__,
                     "config_path": str(args.config) if args.config else None,
                     "corpus": str(args.corpus), "started_at": started, "ended_at": _now(),
                     "artifacts": {"report": str(report_path), "csv": str(csv_path)}}
    write_report(report, rows, report_path, csv_path)
    return EXIT_OK


def cmd_vad(args) -> int:
    try:
        cfg = load_config(args.config)
        vcfg = cfg.vad_config()
        frames = wav_frames(args.input, int(cfg["frame_ms"]))
    except (ConfigError, WavError, ValueError) as exc:
        print(f"cascade-st vad: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        def emit(obj):
            out.write(json.dumps(obj) + "\n")

        emit({"type": "header", "schema_version": VAD_SCHEMA_VERSION, "frame_ms": int(cfg["frame_ms"]),
              "sample_rate_hz": frames[0].sample_rate_hz, "threshold": vcfg.threshold})
        gate = SpeechGate(vcfg)
        segments = []
        for fr in frames:
            p = speech_probability(fr, vcfg)
            emit({"type": "frame", "index": fr.index, "start_s": fr.start_time_s, "probability": p})
            segments.extend(gate.push(fr, p))
        segments.extend(gate.finish())
        for seg in segments:
            emit({"type": "segment", "onset_s": seg.onset_s, "offset_s": seg.offset_s,
                  "forced_split": seg.forced_split})
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_refine(args) -> int:
    """Feed text chunks (one per line) through the release policy and dump buffer state."""
    try:
        cfg = load_config(args.config)
        backend = build_refiner(cfg)
        lines = Path(args.chunks).read_text(encoding="utf-8").splitlines()
    except (ConfigError, OSError) as exc:
        print(f"cascade-st refine: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    buf = RefineBuffer(lang=args.lang or cfg["source_lang"])

    def dump(chunk, released):
        print(json.dumps({"chunk": chunk, "released": [
            {"text": r.text, "reason": r.release_reason.value, "chunks": r.source_chunk_count}
            for r in released], "buffer": buf.to_json()}, ensure_ascii=False))

    for k, line in enumerate(lines):
        _, released = push_chunk(buf, TranscriptChunk(line, buf.lang, float(k), float(k)), backend)
        dump(line, released)
    _, rel = flush(buf)
    dump(None, [rel] if rel else [])
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cascade-st", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("run", help="translate a WAV file through the cascade")
    p.add_argument("--config")
    p.add_argument("--input", required=True, help="input WAV file")
    p.add_argument("--source-lang")
    p.add_argument("--target-lang")
    p.add_argument("--sink", choices=["wav", "null"])
    p.add_argument("--trace", help="latency trace path (default: OUTPUT_DIR/trace.jsonl)")
    p.add_argument("--output-dir", default="out")
    p.add_argument("--run-id")
    p.add_argument("--sequential", action="store_true", help="run all stages in one thread")
    p.add_argument("--realtime-factor", type=float,
                   help="replay speed; 1.0 = real time, 0 = as fast as possible")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("eval", help="score a corpus (WER, BLEU, latency)")
    p.add_argument("--config")
    p.add_argument("--corpus", required=True, help="directory containing manifest.jsonl")
    p.add_argument("--report", required=True, help="JSON report path")
    p.add_argument("--csv", help="per-utterance CSV path (default: report path with .csv)")
    p.add_argument("--run-id")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("vad", help="dump per-frame speech probabilities and segments as JSON lines")
    p.add_argument("--config")
    p.add_argument("--input", required=True)
    p.add_argument("--output")
    p.set_defaults(func=cmd_vad)

    p = sub.add_parser("refine", help="dump refine-buffer state for text chunks (one per line)")
    p.add_argument("--config")
    p.add_argument("--chunks", required=True)
    p.add_argument("--lang")
    p.set_defaults(func=cmd_refine)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
