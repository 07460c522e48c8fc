# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops.

Every function here has a numpy twin in ``_kernels_py`` with the same
signature and the same summation order; ``_backend`` picks one at import.
Inputs are C-contiguous float64 arrays prepared by the Python layer
(absolute values, dual weights, ... are formed there).  All loops run
without the GIL.
"""

import numpy as np
from libc.math cimport pow, fabs, exp
from libc.stdlib cimport malloc, free

NAME = "cython"


cdef inline bint _less3(Py_ssize_t a, Py_ssize_t b, Py_ssize_t c,
                        Py_ssize_t a2, Py_ssize_t b2, Py_ssize_t c2) noexcept nogil:
    if a != a2:
        return a < a2
    if b != b2:
        return b < b2
    return c < c2


cdef inline bint _less2(Py_ssize_t a, Py_ssize_t b, Py_ssize_t a2, Py_ssize_t b2) noexcept nogil:
    if a != a2:
        return a < a2
    return b < b2


# ---------------------------------------------------------------------------
# one-sided maximal functions
# ---------------------------------------------------------------------------

def maximal_plus_naive(const double[::1] a):
    """out[i] = max_{j>=i} mean(a[i..j]) by direct scan (a >= 0)."""
    cdef Py_ssize_t n = a.shape[0], i, j
    cdef double s, m, v
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            s = 0.0
            m = 0.0
            for j in range(i, n):
                s += a[j]
                v = s / (j - i + 1)
                if v > m:
                    m = v
            o[i] = m
    return out


cdef void _hull_row(const double* a, Py_ssize_t n, double* P, Py_ssize_t* st, double* o) noexcept nogil:
    cdef Py_ssize_t i, k, top, t1, t2
    P[0] = 0.0
    for k in range(n):
        P[k + 1] = P[k] + a[k]
    top = 0
    st[0] = n
    i = n - 1
    while i >= 0:
        while top >= 1:
            t1 = st[top]
            t2 = st[top - 1]
            if (P[t1] - P[i]) * (t2 - i) <= (P[t2] - P[i]) * (t1 - i):
                top -= 1
            else:
                break
        t1 = st[top]
        o[i] = (P[t1] - P[i]) / (t1 - i)
        # prefix-sum differences can cancel a[i] away; the single-cell window is always admissible
        if o[i] < a[i]:
            o[i] = a[i]
        top += 1
        st[top] = i
        i -= 1


def maximal_plus_hull(const double[::1] a):
    """Same output as :func:`maximal_plus_naive` via the upper hull of prefix sums, O(n)."""
    cdef Py_ssize_t n = a.shape[0]
    out = np.empty(n)
    cdef double[::1] o = out
    cdef double* P = <double*> malloc((n + 1) * sizeof(double))
    cdef Py_ssize_t* st = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
    if P == NULL or st == NULL:
        free(P); free(st)
        raise MemoryError()
    try:
        with nogil:
            _hull_row(&a[0], n, P, st, &o[0])
    finally:
        free(P)
        free(st)
    return out


def maximal_plus_hull_rows(const double[:, ::1] A):
    cdef Py_ssize_t m = A.shape[0], n = A.shape[1], r
    out = np.empty((m, n))
    cdef double[:, ::1] o = out
    cdef double* P = <double*> malloc((n + 1) * sizeof(double))
    cdef Py_ssize_t* st = <Py_ssize_t*> malloc((n + 1) * sizeof(Py_ssize_t))
    if P == NULL or st == NULL:
        free(P); free(st)
        raise MemoryError()
    try:
        with nogil:
            for r in range(m):
                _hull_row(&A[r, 0], n, P, st, &o[r, 0])
    finally:
        free(P)
        free(st)
    return out


def fractional_maximal_plus(const double[::1] a, double h, double alpha):
    """out[i] = max_{j>=i} (h L)^(alpha-1) * h * sum(a[i..j]), L = j-i+1."""
    cdef Py_ssize_t n = a.shape[0], i, j
    cdef double s, m, v
    cdef double ha = pow(h, alpha)
    Lp = np.power(np.arange(1, n + 1, dtype=np.float64), alpha - 1.0)
    cdef double[::1] lp = Lp
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            s = 0.0
            m = 0.0
            for j in range(i, n):
                s += a[j]
                v = lp[j - i] * s
                if v > m:
                    m = v
            o[i] = ha * m
    return out


def weighted_maximal(const double[::1] g, const double[::1] s, bint two_sided):
    """Maximal averages of g/s with respect to the measure s.

    two-sided: out[i] = max over intervals containing cell i of sum(g)/sum(s);
    otherwise windows start at cell i (plus direction).
    """
    cdef Py_ssize_t n = g.shape[0], lo, hi, i
    cdef double sg, ss, r
    out = np.zeros(n)
    R = np.empty(n + 1)
    cdef double[::1] o = out
    cdef double[::1] rr = R
    with nogil:
        for lo in range(n):
            sg = 0.0
            ss = 0.0
            for hi in range(lo + 1, n + 1):
                sg += g[hi - 1]
                ss += s[hi - 1]
                rr[hi] = sg / ss
            # suffix maxima: rr[hi] <- max_{hi' >= hi} value(lo, hi')
            hi = n - 1
            while hi > lo:
                if rr[hi + 1] > rr[hi]:
                    rr[hi] = rr[hi + 1]
                hi -= 1
            if two_sided:
                for i in range(lo, n):
                    r = rr[i + 1]
                    if r > o[i]:
                        o[i] = r
            else:
                o[lo] = rr[lo + 1]
    return out


def forward_correlate(const double[::1] f, const double[::1] table, Py_ssize_t shift):
    """out[i] = sum_{m >= shift} f[i+m] * table[m]  (fixed order: m ascending)."""
    cdef Py_ssize_t n = f.shape[0], i, m
    cdef double s
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            s = 0.0
            for m in range(shift, n - i):
                s += f[i + m] * table[m]
            o[i] = s
    return out


# ---------------------------------------------------------------------------
# weight constants
# ---------------------------------------------------------------------------

def triple_max(const double[::1] u, const double[::1] v, double eL, double eR):
    """max over edges a<b<c of (U(a,b)/L)^eL (V(b,c)/L)^eR, L = c-a.

    U(a,b) = sum u[a..b-1], V(b,c) = sum v[b..c-1].  Ties resolve to the
    lexicographically first (a, b, c).
    """
    cdef Py_ssize_t n = u.shape[0], a, b, c
    cdef double s, val, best = -1.0
    cdef Py_ssize_t ba = 0, bb = 0, bc = 0
    pA_ = np.empty(n + 1)
    pC_ = np.empty(n + 1)
    Lp_ = np.empty(n + 1)
    Lp_[1:] = np.power(np.arange(1, n + 1, dtype=np.float64), -(eL + eR))
    cdef double[::1] pA = pA_
    cdef double[::1] pC = pC_
    cdef double[::1] Lp = Lp_
    with nogil:
        for b in range(1, n):
            s = 0.0
            a = b - 1
            while a >= 0:
                s += u[a]
                pA[a] = pow(s, eL)
                a -= 1
            s = 0.0
            for c in range(b + 1, n + 1):
                s += v[c - 1]
                pC[c] = pow(s, eR)
            for a in range(b):
                for c in range(b + 1, n + 1):
                    val = pA[a] * pC[c] * Lp[c - a]
                    if val > best or (val == best and _less3(a, b, c, ba, bb, bc)):
                        best = val
                        ba = a
                        bb = b
                        bc = c
    return best, ba, bb, bc


def interval_max(const double[::1] u, const double[::1] v, double eL, double eR):
    """max over intervals (lo,hi) of (U/L)^eL (V/L)^eR with both sums over the interval."""
    cdef Py_ssize_t n = u.shape[0], lo, hi
    cdef double su, sv, val, best = -1.0
    cdef Py_ssize_t blo = 0, bhi = 0
    Lp_ = np.empty(n + 1)
    Lp_[1:] = np.power(np.arange(1, n + 1, dtype=np.float64), -(eL + eR))
    cdef double[::1] Lp = Lp_
    with nogil:
        for lo in range(n):
            su = 0.0
            sv = 0.0
            for hi in range(lo + 1, n + 1):
                su += u[hi - 1]
                sv += v[hi - 1]
                val = pow(su, eL) * pow(sv, eR) * Lp[hi - lo]
                if val > best or (val == best and _less2(lo, hi, blo, bhi)):
                    best = val
                    blo = lo
                    bhi = hi
    return best, blo, bhi


def ainf_minus(const double[::1] w):
    """max over intervals I of sum_{i in I} M^+(chi_I w)(i) / sum_{i in I} w(i).

    For a fixed right end ``hi`` the truncated forward maximal function on
    cells i < hi does not depend on the left end, so it is updated
    incrementally as ``hi`` grows; total cost O(n^2).
    """
    cdef Py_ssize_t n = w.shape[0], lo, hi, i
    cdef double s, sm, sw, val, best = -1.0
    cdef Py_ssize_t blo = 0, bhi = 0
    M_ = np.zeros(n)
    S_ = np.empty(n)
    cdef double[::1] M = M_
    cdef double[::1] S = S_
    with nogil:
        for hi in range(1, n + 1):
            s = 0.0
            i = hi - 1
            while i >= 0:
                s += w[i]
                S[i] = s
                val = s / (hi - i)
                if val > M[i]:
                    M[i] = val
                i -= 1
            sm = 0.0
            lo = hi - 1
            while lo >= 0:
                sm += M[lo]
                sw = S[lo]
                val = sm / sw
                if val > best or (val == best and _less2(lo, hi, blo, bhi)):
                    best = val
                    blo = lo
                    bhi = hi
                lo -= 1
    return best, blo, bhi


def gap_max(const double[::1] v, const double[::1] sig, Py_ssize_t t, double e):
    """max over intervals (a, a+t*m) of mean(v first block) * mean(sig last block)^e."""
    cdef Py_ssize_t n = v.shape[0], a, m, k, start
    cdef double sv, ss, val, best = -1.0
    cdef Py_ssize_t ba = 0, bb = 0
    with nogil:
        for a in range(n):
            sv = 0.0
            m = 1
            while a + t * m <= n:
                sv += v[a + m - 1]
                start = a + (t - 1) * m
                ss = 0.0
                for k in range(start, start + m):
                    ss += sig[k]
                val = (sv / m) * pow(ss / m, e)
                if val > best or (val == best and _less2(a, a + t * m, ba, bb)):
                    best = val
                    ba = a
                    bb = a + t * m
                m += 1
    return best, ba, bb


def bmo_max(const double[::1] b):
    """max over intervals of mean |b - mean(b)|."""
    cdef Py_ssize_t n = b.shape[0], lo, hi, k
    cdef double s, mean, osc, val, best = -1.0
    cdef Py_ssize_t blo = 0, bhi = 0
    with nogil:
        for lo in range(n):
            s = 0.0
            for hi in range(lo + 1, n + 1):
                s += b[hi - 1]
                mean = s / (hi - lo)
                osc = 0.0
                for k in range(lo, hi):
                    osc += fabs(b[k] - mean)
                val = osc / (hi - lo)
                if val > best or (val == best and _less2(lo, hi, blo, bhi)):
                    best = val
                    blo = lo
                    bhi = hi
    return best, blo, bhi


def jn_max(const double[::1] b, double c):
    """max over intervals of mean exp(c |b - mean(b)|)."""
    cdef Py_ssize_t n = b.shape[0], lo, hi, k
    cdef double s, mean, acc, val, best = -1.0
    cdef Py_ssize_t blo = 0, bhi = 0
    with nogil:
        for lo in range(n):
            s = 0.0
            for hi in range(lo + 1, n + 1):
                s += b[hi - 1]
                mean = s / (hi - lo)
                acc = 0.0
                for k in range(lo, hi):
                    acc += exp(c * fabs(b[k] - mean))
                val = acc / (hi - lo)
                if val > best or (val == best and _less2(lo, hi, blo, bhi)):
                    best = val
                    blo = lo
                    bhi = hi
    return best, blo, bhi


def rh_max_ratio(const double[::1] w, double eps):
    """max over a<b<c of (b-a)^eps * sum_{b..c-1} w^(1+eps) / (2 (sum_{a..c-1} w)^(1+eps))."""
    cdef Py_ssize_t n = w.shape[0], a, b, c
    cdef double s, val, best = -1.0, e1 = 1.0 + eps
    cdef Py_ssize_t ba = 0, bb = 0, bc = 0
    A_ = np.empty(n + 1)
    B_ = np.empty(n + 1)
    T_ = np.empty(n + 1)
    Lp_ = np.power(np.arange(0, n + 1, dtype=np.float64), eps)
    we_ = np.power(np.asarray(w), e1)
    cdef double[::1] A = A_
    cdef double[::1] B = B_
    cdef double[::1] T = T_
    cdef double[::1] Lp = Lp_
    cdef double[::1] we = we_
    with nogil:
        for b in range(1, n):
            s = 0.0
            a = b - 1
            while a >= 0:
                s += w[a]
                A[a] = s
                a -= 1
            s = 0.0
            val = 0.0
            for c in range(b + 1, n + 1):
                s += w[c - 1]
                B[c] = s
                val += we[c - 1]
                T[c] = val
            for a in range(b):
                for c in range(b + 1, n + 1):
                    val = Lp[b - a] * T[c] / (2.0 * pow(A[a] + B[c], e1))
                    if val > best or (val == best and _less3(a, b, c, ba, bb, bc)):
                        best = val
                        ba = a
                        bb = b
                        bc = c
    return best, ba, bb, bc
