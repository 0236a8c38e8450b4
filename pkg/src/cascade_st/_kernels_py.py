"""Pure-Python fallback for the compiled kernels in ``_kernels.pyx``."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


def edit_ops(ref: Sequence[int], hyp: Sequence[int]) -> tuple[int, int, int]:
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        row, prev = d[i], d[i - 1]
        row[0] = i
        a = ref[i - 1]
        for j in range(1, m + 1):
            cost = 0 if a == hyp[j - 1] else 1
            row[j] = min(prev[j - 1] + cost, row[j - 1] + 1, prev[j] + 1)

    s = ins = dels = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            cost = 0 if ref[i - 1] == hyp[j - 1] else 1
            if d[i][j] == d[i - 1][j - 1] + cost:
                s += cost
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i][j] == d[i][j - 1] + 1:
            ins += 1
            j -= 1
        else:
            dels += 1
            i -= 1
    return s, ins, dels


def rms_dbfs(samples: np.ndarray) -> float:
    if len(samples) == 0:
        return -math.inf
    acc = float(np.dot(samples, samples))
    if acc == 0.0:
        return -math.inf
    return 20.0 * math.log10(math.sqrt(acc / len(samples)))
