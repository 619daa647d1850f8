"""Pure Python neighbor scan, used when the compiled kernel is unavailable.

Same contract as the native module: for each query row, the kmax nearest
training rows by squared Euclidean distance, ties broken by training
index (i.e. the first kmax entries of a stable sort on (d2, index)).
"""

from __future__ import annotations

import heapq

import numpy as np

NAME = "python"


def neighbors(train: np.ndarray, queries: np.ndarray, kmax: int,
              exclude: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    train_rows = train.tolist()
    query_rows = queries.tolist()
    excl = exclude.tolist()
    m = len(query_rows)
    out_d2 = np.empty((m, kmax), dtype=np.int64)
    out_idx = np.empty((m, kmax), dtype=np.int64)
    for qi, q in enumerate(query_rows):
        skip = excl[qi]
        pairs = []
        for j, row in enumerate(train_rows):
            if j == skip:
                continue
            d2 = 0
            for a, b in zip(row, q):
                diff = a - b
                d2 += diff * diff
            pairs.append((d2, j))
        best = heapq.nsmallest(kmax, pairs)
        for slot, (d2, j) in enumerate(best):
            out_d2[qi, slot] = d2
            out_idx[qi, slot] = j
    return out_d2, out_idx
