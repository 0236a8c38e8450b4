"""WER, corpus BLEU and latency summaries.

COMET is not computed here; reports carry a ``comet`` field set to ``None``
that an external neural scorer can fill in.
"""

from __future__ import annotations

import math
import statistics
import unicodedata
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from .kernels import edit_ops

_KEEP_INNER = "'-"
_APOSTROPHES = {"’": "'", "ʼ": "'"}


def normalize_text(text: str, lang: str = "") -> list[str]:
    """NFKC, lowercase, drop punctuation (except apostrophes/hyphens inside a word), split.

    ``lang`` is accepted for per-language rules; none are needed yet.
    """
    text = unicodedata.normalize("NFKC", text).lower()
    chars = []
    for ch in text:
        ch = _APOSTROPHES.get(ch, ch)
        if ch in _KEEP_INNER:
            chars.append(ch)
        elif unicodedata.category(ch).startswith("P"):
            chars.append(" ")
        else:
            chars.append(ch)
    tokens = []
    for tok in "".join(chars).split():
        tok = tok.strip(_KEEP_INNER)
        if tok:
            tokens.append(tok)
    return tokens


@dataclass(frozen=True)
class WerBreakdown:
    substitutions: int
    insertions: int
    deletions: int
    reference_words: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.insertions + self.deletions

    @property
    def wer(self) -> float:
        return self.errors / self.reference_words

    def to_json(self) -> dict:
        return {**asdict(self), "wer": self.wer}


def token_edit_ops(ref: Sequence[str], hyp: Sequence[str]) -> tuple[int, int, int]:
    """``(S, I, D)`` of a minimal alignment of two token sequences."""
    ids: dict[str, int] = {}
    r = [ids.setdefault(t, len(ids)) for t in ref]
    h = [ids.setdefault(t, len(ids)) for t in hyp]
    return edit_ops(r, h)


def wer(reference: str, hypothesis: str, lang: str = "") -> WerBreakdown:
    ref = normalize_text(reference, lang)
    if not ref:
        raise ValueError("reference is empty after normalization")
    s, i, d = token_edit_ops(ref, normalize_text(hypothesis, lang))
    return WerBreakdown(s, i, d, len(ref))


# ------------------------------------------------------------------------ BLEU

MAX_ORDER = 4


@dataclass(frozen=True)
class BleuScore:
    score: float
    precisions: tuple[float, ...]
    brevity_penalty: float
    hyp_len: int
    ref_len: int

    def to_json(self) -> dict:
        d = asdict(self)
        d["precisions"] = list(self.precisions)
        return d


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[k:k + n]) for k in range(len(tokens) - n + 1))


def _bleu_from_stats(matches: Sequence[int], totals: Sequence[int], hyp_len: int, ref_len: int) -> BleuScore:
    if hyp_len == 0:
        return BleuScore(0.0, (0.0,) * MAX_ORDER, 0.0, 0, ref_len)
    bp = min(1.0, math.exp(1.0 - ref_len / hyp_len))
    precisions = []
    for n in range(MAX_ORDER):
        m = matches[n]
        if m == 0 and n > 0:
            m = 1
        precisions.append(m / max(totals[n], 1))
    if precisions[0] == 0.0:
        return BleuScore(0.0, tuple(precisions), bp, hyp_len, ref_len)
    score = bp * math.exp(sum(math.log(p) for p in precisions) / MAX_ORDER)
    return BleuScore(min(score, bp), tuple(precisions), bp, hyp_len, ref_len)


def _sentence_stats(ref: Sequence[str], hyp: Sequence[str]) -> tuple[list[int], list[int]]:
    matches, totals = [], []
    for n in range(1, MAX_ORDER + 1):
        h = _ngrams(hyp, n)
        r = _ngrams(ref, n)
        matches.append(sum(min(c, r[g]) for g, c in h.items()))
        totals.append(max(len(hyp) - n + 1, 0))
    return matches, totals


def corpus_bleu(references: Sequence[Sequence[str]], hypotheses: Sequence[Sequence[str]]) -> BleuScore:
    """Single-reference corpus BLEU over pre-tokenized sentences.

    Clipped n-gram counts (n = 1..4) are summed over the corpus before the
    ratio. A zero match count for n >= 2 is replaced by 1; zero unigram
    matches give a score of 0. Orders with no hypothesis n-grams at all use a
    denominator of 1.
    """
    if len(references) != len(hypotheses):
        raise ValueError("references and hypotheses differ in length")
    if not references:
        raise ValueError("empty corpus")
    matches = [0] * MAX_ORDER
    totals = [0] * MAX_ORDER
    hyp_len = ref_len = 0
    for ref, hyp in zip(references, hypotheses):
        m, t = _sentence_stats(ref, hyp)
        for n in range(MAX_ORDER):
            matches[n] += m[n]
            totals[n] += t[n]
        hyp_len += len(hyp)
        ref_len += len(ref)
    return _bleu_from_stats(matches, totals, hyp_len, ref_len)


def sentence_bleu(reference: Sequence[str], hypothesis: Sequence[str]) -> BleuScore:
    return corpus_bleu([reference], [hypothesis])


# --------------------------------------------------------------------- latency

STAGES = ("asr", "refine", "translate", "tts")


def nearest_rank(sorted_values: Sequence[float], pct: float) -> float:
    if not sorted_values:
        raise ValueError("no values")
    rank = max(1, math.ceil(pct / 100.0 * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass(frozen=True)
class LatencySummary:
    count: int
    mean: float
    median: float
    p95: float
    max: float
    stage_means: dict = field(default_factory=dict)
    queue_wait_mean: float = 0.0

    def to_json(self) -> dict:
        return asdict(self)


def latency_summary(records: Iterable) -> LatencySummary:
    """Exact order statistics of end-to-end latency plus per-stage mean durations."""
    records = list(records)
    if not records:
        raise ValueError("no latency records")
    e2e = sorted(r.e2e_latency_s for r in records)
    durations = [r.stage_durations() for r in records]
    stage_means = {s: statistics.fmean(d[s] for d in durations) for s in STAGES}
    return LatencySummary(
        count=len(e2e),
        mean=statistics.fmean(e2e),
        median=statistics.median(e2e),
        p95=nearest_rank(e2e, 95),
        max=e2e[-1],
        stage_means=stage_means,
        queue_wait_mean=statistics.fmean(d["queue_wait"] for d in durations),
    )
