"""Pure numpy implementations of the kernels in ``_kernels_c.pyx``.

Running sums use ``np.cumsum`` (sequential accumulation), which matches the
loop order of the compiled version, so the two backends agree to rounding
and usually bit for bit.
"""

import numpy as np

NAME = "numpy"


def _lex_first(mask_idx):
    """First index tuple in row-major order."""
    return tuple(int(k) for k in mask_idx[0])


def maximal_plus_naive(a):
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    out = np.empty(n)
    for i in range(n):
        s = np.cumsum(a[i:])
        out[i] = max(0.0, np.max(s / np.arange(1, n - i + 1)))
    return out


def _hull_row(a):
    n = a.shape[0]
    P = np.concatenate(([0.0], np.cumsum(a))).tolist()
    a = a.tolist()
    out = [0.0] * n
    st = [n]
    for i in range(n - 1, -1, -1):
        Pi = P[i]
        while len(st) >= 2:
            t1 = st[-1]
            t2 = st[-2]
            if (P[t1] - Pi) * (t2 - i) <= (P[t2] - Pi) * (t1 - i):
                st.pop()
            else:
                break
        t1 = st[-1]
        # prefix-sum differences can cancel a[i] away; the single-cell window is always admissible
        out[i] = max((P[t1] - Pi) / (t1 - i), a[i])
        st.append(i)
    return np.array(out)


def maximal_plus_hull(a):
    return _hull_row(np.asarray(a, dtype=float))


def maximal_plus_hull_rows(A):
    A = np.asarray(A, dtype=float)
    return np.array([_hull_row(row) for row in A]).reshape(A.shape)


def fractional_maximal_plus(a, h, alpha):
    a = np.asarray(a, dtype=float)
    n = a.shape[0]
    lp = np.power(np.arange(1, n + 1, dtype=float), alpha - 1.0)
    out = np.empty(n)
    for i in range(n):
        out[i] = max(0.0, np.max(lp[: n - i] * np.cumsum(a[i:])))
    return h ** alpha * out


def weighted_maximal(g, s, two_sided):
    g = np.asarray(g, dtype=float)
    s = np.asarray(s, dtype=float)
    n = g.shape[0]
    out = np.zeros(n)
    for lo in range(n):
        r = np.cumsum(g[lo:]) / np.cumsum(s[lo:])
        r = np.maximum.accumulate(r[::-1])[::-1]
        if two_sided:
            out[lo:] = np.maximum(out[lo:], r)
        else:
            out[lo] = r[0]
    return out


def forward_correlate(f, table, shift):
    f = np.asarray(f, dtype=float)
    table = np.asarray(table, dtype=float)
    n = f.shape[0]
    out = np.zeros(n)
    for i in range(n):
        if n - i > shift:
            terms = f[i + shift:] * table[shift: n - i]
            out[i] = np.cumsum(terms)[-1]
    return out


def triple_max(u, v, eL, eR):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.shape[0]
    Lp = np.empty(n + 1)
    Lp[1:] = np.power(np.arange(1, n + 1, dtype=float), -(eL + eR))
    best, arg = -1.0, (0, 0, 0)
    for b in range(1, n):
        pA = np.power(np.cumsum(u[b - 1::-1])[::-1], eL)          # a = 0..b-1
        pC = np.power(np.cumsum(v[b:]), eR)                        # c = b+1..n
        a_idx = np.arange(b)
        c_idx = np.arange(b + 1, n + 1)
        vals = pA[:, None] * pC[None, :] * Lp[c_idx[None, :] - a_idx[:, None]]
        m = vals.max()
        if m < best:
            continue
        ia, ic = _lex_first(np.argwhere(vals == m))
        cand = (ia, b, ic + b + 1)
        if m > best or cand < arg:
            best, arg = float(m), cand
    return (best,) + arg


def interval_max(u, v, eL, eR):
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    n = u.shape[0]
    Lp = np.power(np.arange(1, n + 1, dtype=float), -(eL + eR))
    best, arg = -1.0, (0, 0)
    for lo in range(n):
        vals = np.power(np.cumsum(u[lo:]), eL) * np.power(np.cumsum(v[lo:]), eR) * Lp[: n - lo]
        m = vals.max()
        if m > best:
            best, arg = float(m), (lo, lo + 1 + int(np.argmax(vals)))
    return (best,) + arg


def ainf_minus(w):
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    M = np.zeros(n)
    best, arg = -1.0, (0, 0)
    for hi in range(1, n + 1):
        S = np.cumsum(w[hi - 1::-1])                 # S[k] = sum w[hi-1-k .. hi-1]
        avg = S / np.arange(1, hi + 1)
        Mr = np.maximum(M[hi - 1::-1], avg)
        M[:hi] = Mr[::-1]
        vals = np.cumsum(Mr) / S                     # index k <-> lo = hi-1-k
        m = vals.max()
        if m < best:
            continue
        k = int(np.flatnonzero(vals == m)[-1])       # largest k = smallest lo
        cand = (hi - 1 - k, hi)
        if m > best or cand < arg:
            best, arg = float(m), cand
    return (best,) + arg


def gap_max(v, sig, t, e):
    v = np.asarray(v, dtype=float)
    sig = np.asarray(sig, dtype=float)
    n = v.shape[0]
    best, arg = -1.0, (0, 0)
    for a in range(n):
        mmax = (n - a) // t
        if mmax < 1:
            continue
        m = np.arange(1, mmax + 1)
        sv = np.cumsum(v[a:a + mmax])
        ss = np.array([np.cumsum(sig[a + (t - 1) * k: a + t * k])[-1] for k in m])
        vals = (sv / m) * np.power(ss / m, e)
        mx = vals.max()
        if mx > best:
            k = int(np.argmax(vals))
            best, arg = float(mx), (a, a + t * (k + 1))
    return (best,) + arg


def _interval_stat(b, fn):
    b = np.asarray(b, dtype=float)
    n = b.shape[0]
    best, arg = -1.0, (0, 0)
    for lo in range(n):
        sub = b[lo:]
        L = np.arange(1, n - lo + 1)
        means = np.cumsum(sub) / L
        D = fn(np.abs(sub[None, :] - means[:, None]))
        D[np.triu_indices(n - lo, 1)] = 0.0
        vals = np.cumsum(D, axis=1)[:, -1] / L
        m = vals.max()
        if m > best:
            best, arg = float(m), (lo, lo + 1 + int(np.argmax(vals)))
    return (best,) + arg


def bmo_max(b):
    return _interval_stat(b, lambda d: d)


def jn_max(b, c):
    return _interval_stat(b, lambda d: np.exp(c * d))


def rh_max_ratio(w, eps):
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    e1 = 1.0 + eps
    Lp = np.power(np.arange(0, n + 1, dtype=float), eps)
    we = np.power(w, e1)
    best, arg = -1.0, (0, 0, 0)
    for b in range(1, n):
        A = np.cumsum(w[b - 1::-1])[::-1]            # a = 0..b-1
        B = np.cumsum(w[b:])                         # c = b+1..n
        T = np.cumsum(we[b:])
        a_idx = np.arange(b)
        vals = Lp[b - a_idx][:, None] * T[None, :] / (2.0 * np.power(A[:, None] + B[None, :], e1))
        m = vals.max()
        if m < best:
            continue
        ia, ic = _lex_first(np.argwhere(vals == m))
        cand = (ia, b, ic + b + 1)
        if m > best or cand < arg:
            best, arg = float(m), cand
    return (best,) + arg
