"""Kernel backends against brute-force loops and against each other."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from onesided import _backend

MODS = [_backend.available()[k] for k in sorted(_backend.available())]
IDS = sorted(_backend.available())

pos = st.lists(st.floats(0.05, 20.0), min_size=2, max_size=12).map(np.array)
real = st.lists(st.floats(-10.0, 10.0), min_size=2, max_size=12).map(np.array)


def close(a, b, rel=1e-12):
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-300)


# ---------------------------------------------------------------- brute oracles

def brute_maximal_plus(a):
    n = len(a)
    return np.array([max(0.0, max(sum(a[i:k]) / (k - i) for k in range(i + 1, n + 1)))
                     for i in range(n)])


def brute_triple(u, v, eL, eR):
    n = len(u)
    best, arg = -1.0, None
    for a, b, c in itertools.combinations(range(n + 1), 3):
        val = sum(u[a:b]) ** eL * sum(v[b:c]) ** eR / (c - a) ** (eL + eR)
        if val > best * (1 + 1e-13):
            best, arg = val, (a, b, c)
    return best, arg


def brute_interval(u, v, eL, eR):
    n = len(u)
    best = -1.0
    for lo, hi in itertools.combinations(range(n + 1), 2):
        best = max(best, sum(u[lo:hi]) ** eL * sum(v[lo:hi]) ** eR / (hi - lo) ** (eL + eR))
    return best


def brute_ainf_minus(w):
    n = len(w)
    best = -1.0
    for lo, hi in itertools.combinations(range(n + 1), 2):
        M = [max(np.mean(w[j:k]) for k in range(j + 1, hi + 1)) for j in range(lo, hi)]
        best = max(best, sum(M) / sum(w[lo:hi]))
    return best


def brute_gap(v, s, t, e):
    n = len(v)
    best = -1.0
    for a in range(n):
        for m in range(1, (n - a) // t + 1):
            sv = np.mean(v[a:a + m])
            ss = np.mean(s[a + (t - 1) * m:a + t * m])
            best = max(best, sv * ss ** e)
    return best


def brute_stat(b, fn):
    n = len(b)
    best = -1.0
    for lo, hi in itertools.combinations(range(n + 1), 2):
        seg = np.asarray(b[lo:hi])
        best = max(best, np.mean(fn(np.abs(seg - seg.mean()))))
    return best


def brute_rh(w, eps):
    n = len(w)
    best = -1.0
    for a, b, c in itertools.combinations(range(n + 1), 3):
        val = (b - a) ** eps * sum(w[b:c] ** (1 + eps)) / (2 * sum(w[a:c]) ** (1 + eps))
        best = max(best, val)
    return best


def brute_weighted(g, s, two_sided):
    n = len(g)
    out = np.zeros(n)
    for lo, hi in itertools.combinations(range(n + 1), 2):
        r = sum(g[lo:hi]) / sum(s[lo:hi])
        cells = range(lo, hi) if two_sided else [lo]
        for i in cells:
            out[i] = max(out[i], r)
    return out


# ---------------------------------------------------------------- per-backend checks

@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(a=st.lists(st.floats(0.0, 10.0), min_size=2, max_size=12).map(np.array))
def test_maximal_plus_variants(k, a):
    # callers pass |f|, so the kernels are specified on nonnegative input
    ref = brute_maximal_plus(a)
    scale = np.abs(a).max() + 1
    assert np.allclose(k.maximal_plus_naive(a), ref, rtol=1e-12, atol=1e-12 * scale)
    assert np.allclose(k.maximal_plus_hull(a), ref, rtol=1e-12, atol=1e-12 * scale)
    rows = k.maximal_plus_hull_rows(np.vstack([a, a[::-1]]))
    assert np.allclose(rows[1], brute_maximal_plus(a[::-1]), rtol=1e-12, atol=1e-12 * scale)


@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(a=pos, alpha=st.floats(0.05, 0.95))
def test_fractional_maximal(k, a, alpha):
    n, h = len(a), 0.25
    ref = [h ** alpha * max(k_ ** (alpha - 1) * sum(a[i:i + k_]) for k_ in range(1, n - i + 1))
           for i in range(n)]
    assert np.allclose(k.fractional_maximal_plus(a, h, alpha), ref, rtol=1e-12)


@pytest.mark.parametrize("k", MODS, ids=IDS)
@pytest.mark.parametrize("two_sided", [False, True])
@given(g=pos, data=st.data())
def test_weighted_maximal(k, two_sided, g, data):
    s = np.array(data.draw(st.lists(st.floats(0.05, 20.0), min_size=len(g), max_size=len(g))))
    assert np.allclose(k.weighted_maximal(g, s, two_sided), brute_weighted(g, s, two_sided), rtol=1e-12)


@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(f=real, shift=st.integers(0, 3))
def test_forward_correlate(k, f, shift):
    n = len(f)
    table = np.arange(1.0, n + 1) ** -0.5
    ref = [sum(f[i + j] * table[j] for j in range(shift, n - i)) for i in range(n)]
    assert np.allclose(k.forward_correlate(f, table, shift), ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(u=pos, data=st.data(), eL=st.sampled_from([1.0, 0.5, 2.0]), eR=st.sampled_from([1.0, 1.5]))
def test_triple_and_interval(k, u, data, eL, eR):
    v = np.array(data.draw(st.lists(st.floats(0.05, 20.0), min_size=len(u), max_size=len(u))))
    val, a, b, c = k.triple_max(u, v, eL, eR)
    assert close(val, brute_triple(u, v, eL, eR)[0])
    assert close(val, sum(u[a:b]) ** eL * sum(v[b:c]) ** eR / (c - a) ** (eL + eR))
    ival, lo, hi = k.interval_max(u, v, eL, eR)
    assert close(ival, brute_interval(u, v, eL, eR))
    assert close(ival, sum(u[lo:hi]) ** eL * sum(v[lo:hi]) ** eR / (hi - lo) ** (eL + eR))


@pytest.mark.parametrize("k", MODS, ids=IDS)
def test_triple_tie_break_is_lexicographic(k):
    one = np.ones(6)
    val, a, b, c = k.triple_max(one, one, 1.0, 1.0)
    assert val == 0.25 and (a, b, c) == (0, 1, 2)
    val, lo, hi = k.interval_max(one, one, 1.0, 1.0)
    assert val == 1.0 and (lo, hi) == (0, 1)


@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(w=pos)
def test_ainf_minus(k, w):
    val, lo, hi = k.ainf_minus(w)
    assert close(val, brute_ainf_minus(w))
    assert val >= 1 - 1e-12


@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(v=pos, data=st.data(), t=st.integers(2, 4), e=st.sampled_from([1.0, 0.5, 2.0]))
def test_gap(k, v, data, t, e):
    if len(v) < t:
        return
    s = np.array(data.draw(st.lists(st.floats(0.05, 20.0), min_size=len(v), max_size=len(v))))
    val, lo, hi = k.gap_max(v, s, t, e)
    assert close(val, brute_gap(v, s, t, e))
    assert (hi - lo) % t == 0


@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(b=real, c=st.floats(0.0, 2.0))
def test_bmo_and_jn(k, b, c):
    val, lo, hi = k.bmo_max(b)
    assert math.isclose(val, brute_stat(b, lambda d: d), rel_tol=1e-11, abs_tol=1e-11)
    jv, _, _ = k.jn_max(b, c)
    assert math.isclose(jv, brute_stat(b, lambda d: np.exp(c * d)), rel_tol=1e-11)


@pytest.mark.parametrize("k", MODS, ids=IDS)
@given(w=pos, eps=st.floats(0.0, 3.0))
def test_rh_ratio(k, w, eps):
    val, a, b, c = k.rh_max_ratio(w, eps)
    assert close(val, brute_rh(w, eps), rel=1e-11)


# ---------------------------------------------------------------- backend agreement

@pytest.mark.skipif(len(MODS) < 2, reason="compiled backend not built")
@given(a=st.lists(st.floats(0.05, 20.0), min_size=2, max_size=40).map(np.array), data=st.data())
def test_backends_agree(a, data):
    py, cy = _backend.available()["numpy"], _backend.available()["cython"]
    b = np.array(data.draw(st.lists(st.floats(0.05, 20.0), min_size=len(a), max_size=len(a))))
    pairs = [
        (lambda k: k.maximal_plus_hull(a), True),
        (lambda k: k.fractional_maximal_plus(a, 0.1, 0.3), True),
        (lambda k: k.weighted_maximal(a, b, True), True),
        (lambda k: k.triple_max(a, b, 1.0, 0.5), False),
        (lambda k: k.interval_max(a, b, 1.0, 1.0), False),
        (lambda k: k.ainf_minus(a), False),
        (lambda k: k.gap_max(a, b, 2, 1.0), False),
        (lambda k: k.bmo_max(a), False),
        (lambda k: k.jn_max(a, 0.1), False),
        (lambda k: k.rh_max_ratio(a, 0.5), False),
    ]
    for fn, is_array in pairs:
        x, y = fn(py), fn(cy)
        if is_array:
            assert np.allclose(x, y, rtol=1e-12, atol=1e-12)
        else:
            assert math.isclose(x[0], y[0], rel_tol=1e-12)
            assert tuple(x[1:]) == tuple(y[1:])
