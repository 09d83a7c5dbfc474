# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: batch energy evaluation and Gray-code enumeration."""
from libc.stdint cimport int32_t, int64_t, uint8_t, uint64_t
from libc.stdlib cimport malloc, free
from libc.string cimport memset

import numpy as np

from ._kernels_py import prepare_buckets as prepare_energy

cdef extern from *:
    int __builtin_ctzll(unsigned long long) nogil

cdef enum:
    LW = 4      # 64-bit words per variable per pass (256 samples)
    CTR = 28    # planes of the overflow counters


def batch_energy(lin, qi, qj, qw, int64_t offset, const uint8_t[:, ::1] X):
    return batch_energy_prepared(prepare_energy(lin, qi, qj, qw), offset, X)


cdef inline void _csa(uint64_t* hi, uint64_t* lo, const uint64_t* a, const uint64_t* b,
                      const uint64_t* c) noexcept nogil:
    cdef int t
    cdef uint64_t u
    for t in range(LW):
        u = a[t] ^ b[t]
        hi[t] = (a[t] & b[t]) | (u & c[t])
        lo[t] = u ^ c[t]


cdef inline void _ripple(uint64_t* ctr, int width, const uint64_t* m) noexcept nogil:
    # bit-sliced counter of ``width`` planes (LW words each) += mask
    cdef int t, p
    cdef uint64_t carry, x
    for t in range(LW):
        carry = m[t]
        p = 0
        while carry and p < width:
            x = ctr[p * LW + t]
            ctr[p * LW + t] = x ^ carry
            carry &= x
            p += 1


cdef inline void _and(uint64_t* out, const uint64_t* words, int32_t i, int32_t j) noexcept nogil:
    cdef int t
    for t in range(LW):
        out[t] = words[i * LW + t] & words[j * LW + t]


def batch_energy_prepared(prep, int64_t offset, const uint8_t[:, ::1] X):
    """Energies of the rows of ``X``.

    Bit-sliced: each machine word carries one variable for 64 samples, so a
    coupler costs one AND per word. Per (sign, bit) bucket the lane counts are
    accumulated branch-free with carry-save adders, eight masks at a time.
    """
    n, pi_a, pj_a, ptr_a, shift_a, sign_a = prep
    if X.shape[1] != n:
        raise ValueError("sample width does not match the instance")
    cdef const int32_t[::1] pi = pi_a
    cdef const int32_t[::1] pj = pj_a
    cdef const int64_t[::1] ptr = ptr_a
    cdef const int32_t[::1] shift = shift_a
    cdef const int32_t[::1] sign = sign_a
    cdef Py_ssize_t nb = shift_a.shape[0]
    cdef Py_ssize_t S = X.shape[0]
    cdef Py_ssize_t nv = n
    out = np.empty(S, dtype=np.int64)
    cdef int64_t[::1] o = out
    cdef uint64_t* words = <uint64_t*> malloc((nv + 1) * LW * sizeof(uint64_t))
    cdef int64_t* acc = <int64_t*> malloc(64 * LW * sizeof(int64_t))
    cdef uint64_t d[8 * LW]
    cdef uint64_t ones[LW]
    cdef uint64_t twos[LW]
    cdef uint64_t fours[LW]
    cdef uint64_t ta[LW]
    cdef uint64_t tb[LW]
    cdef uint64_t fa[LW]
    cdef uint64_t fb[LW]
    cdef uint64_t eights[LW]
    cdef uint64_t ctr[CTR * LW]
    cdef uint64_t rem[CTR * LW]
    cdef Py_ssize_t start, bs, s, v, k, kend, b
    cdef int t, p, x
    cdef int64_t val, lane
    if words == NULL or acc == NULL:
        free(words)
        free(acc)
        raise MemoryError()
    try:
        with nogil:
            start = 0
            while start < S:
                bs = S - start
                if bs > 64 * LW:
                    bs = 64 * LW
                memset(words, 0, (nv + 1) * LW * sizeof(uint64_t))
                for s in range(bs):
                    t = s >> 6
                    for v in range(nv):
                        words[v * LW + t] |= (<uint64_t> (X[start + s, v] & 1)) << (s & 63)
                for s in range(64 * LW):
                    acc[s] = offset
                for b in range(nb):
                    memset(ones, 0, sizeof(ones))
                    memset(twos, 0, sizeof(twos))
                    memset(fours, 0, sizeof(fours))
                    memset(ctr, 0, sizeof(ctr))
                    memset(rem, 0, sizeof(rem))
                    k = ptr[b]
                    kend = ptr[b + 1]
                    while k + 8 <= kend:
                        for x in range(8):
                            _and(&d[x * LW], words, pi[k + x], pj[k + x])
                        _csa(ta, ones, ones, &d[0], &d[LW])
                        _csa(tb, ones, ones, &d[2 * LW], &d[3 * LW])
                        _csa(fa, twos, twos, ta, tb)
                        _csa(ta, ones, ones, &d[4 * LW], &d[5 * LW])
                        _csa(tb, ones, ones, &d[6 * LW], &d[7 * LW])
                        _csa(fb, twos, twos, ta, tb)
                        _csa(eights, fours, fours, fa, fb)
                        _ripple(ctr, CTR, eights)
                        k += 8
                    while k < kend:
                        _and(&d[0], words, pi[k], pj[k])
                        _ripple(rem, CTR, &d[0])
                        k += 1
                    for s in range(bs):
                        t = s >> 6
                        x = s & 63
                        lane = ((ones[t] >> x) & 1) + 2 * ((twos[t] >> x) & 1) + 4 * ((fours[t] >> x) & 1)
                        for p in range(CTR):
                            lane += (<int64_t> ((ctr[p * LW + t] >> x) & 1)) << (p + 3)
                            lane += (<int64_t> ((rem[p * LW + t] >> x) & 1)) << p
                        val = lane << shift[b]
                        if sign[b] < 0:
                            acc[s] -= val
                        else:
                            acc[s] += val
                for s in range(bs):
                    o[start + s] = acc[s]
                start += bs
    finally:
        free(words)
        free(acc)
    return out


def gray_min_by_projection(int n, const int64_t[::1] lin, const int64_t[::1] indptr,
                           const int32_t[::1] indices, const int64_t[::1] data,
                           int64_t offset, const int32_t[::1] proj_bit, int n_proj):
    """Minimum energy per projection onto the marked variables, over all 2**n assignments.

    ``indptr/indices/data`` is the symmetric adjacency (each coupler stored in both rows).
    """
    cdef Py_ssize_t size = (<Py_ssize_t> 1) << n_proj
    mins_arr = np.full(size, np.iinfo(np.int64).max, dtype=np.int64)
    cdef int64_t[::1] mins = mins_arr
    cdef uint8_t* x = <uint8_t*> malloc(n if n > 0 else 1)
    cdef int64_t* h = <int64_t*> malloc((n if n > 0 else 1) * sizeof(int64_t))
    cdef uint64_t t, total = (<uint64_t> 1) << n
    cdef int64_t e = offset, delta
    cdef Py_ssize_t idx = 0, p, k
    cdef int i
    if x == NULL or h == NULL:
        free(x)
        free(h)
        raise MemoryError()
    try:
        with nogil:
            memset(x, 0, n)
            for i in range(n):
                h[i] = lin[i]
            mins[0] = e
            t = 1
            while t < total:
                k = __builtin_ctzll(t)
                if x[k]:
                    e -= h[k]
                    delta = -1
                    x[k] = 0
                else:
                    e += h[k]
                    delta = 1
                    x[k] = 1
                for p in range(indptr[k], indptr[k + 1]):
                    h[indices[p]] += delta * data[p]
                if proj_bit[k] >= 0:
                    idx ^= (<Py_ssize_t> 1) << proj_bit[k]
                if e < mins[idx]:
                    mins[idx] = e
                t += 1
    finally:
        free(x)
        free(h)
    return mins_arr
