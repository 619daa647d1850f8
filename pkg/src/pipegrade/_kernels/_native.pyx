# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled neighbor scan: squared-distance computation plus partial
selection of the kmax nearest training rows per query, ties broken by
training index."""

import numpy as np

cimport numpy as cnp

cnp.import_array()

NAME = "native"


def neighbors(cnp.int64_t[:, ::1] train, cnp.int64_t[:, ::1] queries,
              Py_ssize_t kmax, cnp.int64_t[::1] exclude):
    cdef Py_ssize_t n = train.shape[0]
    cdef Py_ssize_t d = train.shape[1]
    cdef Py_ssize_t m = queries.shape[0]

    out_d2 = np.empty((m, kmax), dtype=np.int64)
    out_idx = np.empty((m, kmax), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] od = out_d2
    cdef cnp.int64_t[:, ::1] oi = out_idx

    cdef Py_ssize_t qi, j, t, count, pos, s
    cdef cnp.int64_t skip, d2, diff

    for qi in range(m):
        skip = exclude[qi]
        count = 0
        for j in range(n):
            if j == skip:
                continue
            d2 = 0
            for t in range(d):
                diff = train[j, t] - queries[qi, t]
                d2 += diff * diff
            if count == kmax and d2 >= od[qi, kmax - 1]:
                # equal distance keeps the earlier index already stored
                continue
            # first slot whose distance strictly exceeds d2; equal
            # distances stay ahead because their index is smaller
            pos = count if count < kmax else kmax - 1
            while pos > 0 and od[qi, pos - 1] > d2:
                pos -= 1
            s = count if count < kmax else kmax - 1
            while s > pos:
                od[qi, s] = od[qi, s - 1]
                oi[qi, s] = oi[qi, s - 1]
                s -= 1
            od[qi, pos] = d2
            oi[qi, pos] = j
            if count < kmax:
                count += 1
    return out_d2, out_idx
