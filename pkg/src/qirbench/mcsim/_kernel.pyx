# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled nested-repeater trial kernel (twin of ``_kernel_py``)."""

import numpy as np
cimport numpy as cnp
from libc.math cimport floor, log1p
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline uint64_t mix64(uint64_t z) nogil:
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef struct Trial:
    uint64_t state
    double p0
    double log_q
    double swap_p
    int64_t cutoff
    int64_t attempts


cdef inline double uniform(Trial* tr) nogil:
    tr.state += GOLDEN
    return <double>(mix64(tr.state) >> 11) * (1.0 / 9007199254740992.0)


cdef int64_t link(Trial* tr, int level, int64_t start) nogil:
    cdef int64_t k, t1, t2, t
    if level == 0:
        if tr.p0 >= 1.0:
            k = 1
        else:
            k = 1 + <int64_t>floor(log1p(-uniform(tr)) / tr.log_q)
        tr.attempts += k
        return start + k
    t1 = link(tr, level - 1, start)
    t2 = link(tr, level - 1, start)
    while True:
        if tr.cutoff >= 0:
            while (t1 - t2 if t1 > t2 else t2 - t1) > tr.cutoff:
                if t1 < t2:
                    t1 = link(tr, level - 1, t1 + tr.cutoff)
                else:
                    t2 = link(tr, level - 1, t2 + tr.cutoff)
        t = t1 if t1 > t2 else t2
        if uniform(tr) < tr.swap_p:
            return t
        t1 = link(tr, level - 1, t)
        t2 = link(tr, level - 1, t)


def run_trials(int nesting, double p0, double swap_p, long long cutoff, seed,
               long long first_trial, long long count):
    cdef cnp.ndarray[int64_t, ndim=1] out = np.empty(count, dtype=np.int64)
    cdef uint64_t useed = <uint64_t>(int(seed) & 0xFFFFFFFFFFFFFFFF)
    cdef Trial tr
    cdef long long i
    cdef int64_t attempts = 0
    cdef double log_q = log1p(-p0) if p0 < 1.0 else 0.0
    with nogil:
        for i in range(count):
            tr.state = mix64(useed + <uint64_t>(first_trial + i + 1) * GOLDEN)
            tr.p0 = p0
            tr.log_q = log_q
            tr.swap_p = swap_p
            tr.cutoff = cutoff
            tr.attempts = 0
            out[i] = link(&tr, nesting, 0)
            attempts += tr.attempts
    return out, int(attempts)
