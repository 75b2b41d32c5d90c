# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: log-space binomial tails, log-space convolution,
and the per-ballot Bravo first-crossing recursion.

Same contract as ``pollaudit._kernels._ref``; selected at import by
``pollaudit._kernels``.
"""

from libc.math cimport lgamma, log, log1p, exp, floor, ceil, INFINITY

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "compiled"

cdef double _TERM_EPS = 1e-18


cdef double _log_pmf(double k, double n, double p) nogil:
    return (lgamma(n + 1.0) - lgamma(k + 1.0) - lgamma(n - k + 1.0)
            + k * log(p) + (n - k) * log1p(-p))


def log_binom_pmf(k, n, p):
    """ln C(n,k) + k ln p + (n-k) ln(1-p), via log-gamma."""
    return _log_pmf(<double> k, <double> n, <double> p)


cdef double _log_sf(long k, long n, double p) nogil:
    cdef double base, total, term, odds, log_cdf
    cdef long i, mode
    if k <= 0:
        return 0.0
    if k > n:
        return -INFINITY
    mode = <long> floor((n + 1) * p)
    if k > mode:
        base = _log_pmf(k, n, p)
        total = 1.0
        term = 1.0
        odds = p / (1.0 - p)
        for i in range(k, n):
            term *= (n - i) / (i + 1.0) * odds
            total += term
            if term < _TERM_EPS * total:
                break
        return base + log(total)
    base = _log_pmf(k - 1, n, p)
    total = 1.0
    term = 1.0
    odds = (1.0 - p) / p
    for i in range(k - 1, 0, -1):
        term *= i / (n - i + 1.0) * odds
        total += term
        if term < _TERM_EPS * total:
            break
    log_cdf = base + log(total)
    return log1p(-exp(log_cdf))


def log_binom_sf(k, n, p):
    """ln Pr[K >= k] for K ~ Binomial(n, p)."""
    return _log_sf(<long> k, <long> n, <double> p)


def log_convolve_binom(cnp.ndarray[cnp.float64_t, ndim=1] prior_log, m, p):
    """Log-space convolution with Binomial(m, p), max-shifted per output cell."""
    cdef long mm = <long> m
    cdef double pp = <double> p
    cdef long np_ = prior_log.shape[0]
    cdef long nout = np_ + mm
    cdef cnp.ndarray[cnp.float64_t, ndim=1] lpmf = np.empty(mm + 1, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(nout, dtype=np.float64)
    cdef double[:] a = prior_log
    cdef double[:] b = lpmf
    cdef double[:] o = out
    cdef long j, i, i0, i1
    cdef double best, acc, v
    with nogil:
        for j in range(mm + 1):
            b[j] = _log_pmf(j, mm, pp)
        for j in range(nout):
            i0 = j - mm
            if i0 < 0:
                i0 = 0
            i1 = j
            if i1 > np_ - 1:
                i1 = np_ - 1
            best = -INFINITY
            for i in range(i0, i1 + 1):
                v = a[i] + b[j - i]
                if v > best:
                    best = v
            if best == -INFINITY:
                o[j] = -INFINITY
                continue
            acc = 0.0
            for i in range(i0, i1 + 1):
                v = a[i] + b[j - i]
                if v != -INFINITY:
                    acc += exp(v - best)
            o[j] = best + log(acc)
    return out


def so_crossing_curve(m, p, start_n, start_k, log_one_over_alpha, log_odds_a, log_odds_b):
    """Cumulative per-ballot Bravo crossing probability after each of m draws.

    See the reference implementation for the state-space and pruning notes.
    """
    cdef long mm = <long> m
    cdef double pp = <double> p
    cdef long sn = <long> start_n
    cdef long sk = <long> start_k
    cdef double la = <double> log_one_over_alpha
    cdef double oa = <double> log_odds_a
    cdef double ob = <double> log_odds_b
    cdef double denom = oa + ob
    cdef cnp.ndarray[cnp.float64_t, ndim=1] curve = np.empty(mm, dtype=np.float64)
    cdef double[:] cv = curve
    cdef long c0 = <long> ceil((la + sn * ob) / denom)
    if sk >= c0:
        curve[:] = 1.0
        return curve
    # q holds live cells; lo = marginal tally of q[0]; size = live length
    cdef cnp.ndarray[cnp.float64_t, ndim=1] qa = np.zeros(mm + 2, dtype=np.float64)
    cdef double[:] q = qa
    cdef long lo = 0, size = 1, t, c, cut, hi, drop, i
    cdef double crossed = 0.0, total, acc, pr = 1e-15, q1 = 1.0 - pp
    q[0] = 1.0
    with nogil:
        for t in range(1, mm + 1):
            # advance one ballot: shift-up with prob p, stay with prob 1-p
            for i in range(size, 0, -1):
                q[i] = q[i] * q1 + q[i - 1] * pp
            q[0] *= q1
            size += 1
            c = <long> ceil((la + (sn + t) * ob) / denom) - sk
            hi = lo + size - 1
            if c <= hi:
                cut = c - lo
                if cut < 0:
                    cut = 0
                for i in range(cut, size):
                    crossed += q[i]
                    q[i] = 0.0
                size = cut
            if size == 0:
                for i in range(t - 1, mm):
                    cv[i] = crossed
                break
            total = 0.0
            for i in range(size):
                total += q[i]
            if size > 8:
                acc = 0.0
                drop = 0
                for i in range(size):
                    acc += q[i]
                    if acc >= pr * total:
                        drop = i
                        break
                if drop > 0:
                    for i in range(drop, size):
                        q[i - drop] = q[i]
                    size -= drop
                    lo += drop
                    for i in range(size, size + drop):
                        q[i] = 0.0
            cv[t - 1] = crossed
    return curve
