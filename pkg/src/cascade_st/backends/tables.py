"""JSON-lines tables backing the alignment ASR mock and the dictionary translator."""

from __future__ import annotations

import bisect
import json
import os
from dataclasses import dataclass
from typing import Iterator


class TableError(ValueError):
    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = path
        self.line = line


@dataclass(frozen=True)
class AlignmentEntry:
    start_s: float
    end_s: float
    text: str


class AlignmentTable:
    """Non-overlapping time ranges mapped to transcript text, kept sorted by start."""

    def __init__(self, entries=()):
        self._entries: list[AlignmentEntry] = sorted(entries, key=lambda e: e.start_s)
        self._starts = [e.start_s for e in self._entries]

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[AlignmentEntry]:
        return iter(self._entries)

    def overlapping(self, start: float, end: float) -> AlignmentEntry | None:
        k = bisect.bisect_left(self._starts, end)
        for e in self._entries[max(0, k - 1):k + 1]:
            if e.start_s < end and start < e.end_s:
                return e
        return None

    def add(self, entry: AlignmentEntry) -> None:
        k = bisect.bisect_right(self._starts, entry.start_s)
        self._starts.insert(k, entry.start_s)
        self._entries.insert(k, entry)

    def lookup(self, onset_s: float, offset_s: float) -> str:
        """Text of entries covering ``[onset_s, offset_s]``.

        An entry covers a segment when its midpoint falls inside the segment
        or the segment's midpoint falls inside it. Matches are joined in time
        order; no match gives ``""``.
        """
        seg_mid = 0.5 * (onset_s + offset_s)
        hits = []
        for e in self._entries:
            if e.start_s > offset_s:
                break
            mid = 0.5 * (e.start_s + e.end_s)
            if onset_s <= mid < offset_s or e.start_s <= seg_mid < e.end_s:
                hits.append(e.text)
        return " ".join(hits)


def _rows(path) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TableError(path, lineno, f"invalid JSON ({exc.msg})") from None
            if not isinstance(row, dict):
                raise TableError(path, lineno, "row must be a JSON object")
            yield lineno, row


def _number(path, lineno, row, key) -> float:
    v = row.get(key)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TableError(path, lineno, f"{key!r} must be a number")
    return float(v)


def _text(path, lineno, row, key) -> str:
    v = row.get(key)
    if not isinstance(v, str) or not v.strip():
        raise TableError(path, lineno, f"{key!r} must be a non-empty string")
    return v


def load_alignment(path: str | os.PathLike) -> AlignmentTable:
    """Load ``{start_s, end_s, text}`` rows; overlapping ranges are rejected."""
    table = AlignmentTable()
    for lineno, row in _rows(path):
        start = _number(path, lineno, row, "start_s")
        end = _number(path, lineno, row, "end_s")
        text = _text(path, lineno, row, "text")
        if start < 0 or not start < end:
            raise TableError(path, lineno, "require 0 <= start_s < end_s")
        clash = table.overlapping(start, end)
        if clash is not None:
            raise TableError(path, lineno,
                             f"range {start}-{end} overlaps {clash.start_s}-{clash.end_s}")
        table.add(AlignmentEntry(start, end, text.strip()))
    return table


def load_dictionary(path: str | os.PathLike) -> dict[str, str]:
    """Load ``{src, dst}`` rows into a mapping; later rows win on duplicate ``src``."""
    table: dict[str, str] = {}
    for lineno, row in _rows(path):
        src = _text(path, lineno, row, "src")
        dst = _text(path, lineno, row, "dst")
        table[src.strip()] = dst.strip()
    return table
