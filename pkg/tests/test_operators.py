import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from onesided.errors import DomainError, ParameterError, RangeError, SpecError
from onesided.grid import Grid, GridFunction, synthesize
from onesided.operators import (
    IDENTITY,
    ContourParams,
    Direction,
    cauchy_commutator,
    commutator_expansion,
    commutator_iterated,
    conjugate_operator,
    fractional_integral_plus,
    fractional_maximal,
    maximal,
    maximal_rows,
    parse_operator,
    singular_onesided,
    weighted_maximal,
)

from conftest import func_from, unit_grid, weight_from

# [-1, 2) with h = 1/4: edge -1 is cell 0, edge 0 is cell 4
WIDE = Grid(-1.0, 0.25, 12)
CHI01 = synthesize("indicator:a=0,b=1", WIDE)

nonneg = st.lists(st.floats(0.0, 50.0), min_size=2, max_size=30).map(np.array)
signed = st.lists(st.floats(-50.0, 50.0), min_size=2, max_size=30).map(np.array)
positive = st.lists(st.floats(0.01, 50.0), min_size=2, max_size=30).map(np.array)


def fracint_op(alpha=0.5):
    return parse_operator(f"fracint:alpha={alpha}")


# ---------------------------------------------------------------- maximal functions

def test_maximal_examples(backend):
    g = unit_grid(10)
    assert np.all(maximal(GridFunction.constant(g, 2.5)).values == 2.5)
    assert maximal(CHI01).values[0] == 0.5
    assert np.all(maximal(GridFunction.constant(g)).values == 1.0)


def test_hull_equals_naive_on_random_inputs(backend):
    rng = np.random.default_rng(0)
    g = unit_grid(40)
    for _ in range(1000):
        f = func_from(rng.exponential(size=40), g)
        hull, naive = maximal(f, method="hull").values, maximal(f, method="naive").values
        assert np.allclose(hull, naive, rtol=1e-12, atol=0)


def test_maximal_rejects_complex():
    with pytest.raises(DomainError):
        maximal(func_from([1 + 1j, 2.0]))


@given(signed)
def test_maximal_invariants(a):
    f = func_from(a)
    plus = maximal(f, Direction.PLUS)
    minus = maximal(f, Direction.MINUS)
    assert np.array_equal(minus.values, maximal(f.reflect(), Direction.PLUS).reflect().values)
    assert np.all(plus.values >= np.abs(a) * (1 - 1e-12))
    assert np.all(minus.values >= np.abs(a) * (1 - 1e-12))


@given(signed, st.data())
def test_maximal_sublinear(a, data):
    b = np.array(data.draw(st.lists(st.floats(-50.0, 50.0), min_size=len(a), max_size=len(a))))
    f, g = func_from(a), func_from(b)
    lhs = maximal(f + g).values
    rhs = maximal(f).values + maximal(g).values
    assert np.all(lhs <= rhs + 1e-12 * (1 + rhs))


def test_maximal_rows_match_single(backend):
    rng = np.random.default_rng(3)
    F = rng.normal(size=(5, 16))
    g = unit_grid(16)
    for d in (Direction.PLUS, Direction.MINUS):
        rows = maximal_rows(F, d)
        for r in range(5):
            assert np.allclose(rows[r], maximal(func_from(F[r], g), d).values, rtol=1e-13)


def test_fractional_maximal_examples(backend):
    n, h, alpha = 8, 0.25, 0.3
    g = Grid(0.0, h, n)
    out = fractional_maximal(GridFunction.constant(g), Direction.PLUS, alpha).values
    # the longest admissible window (to the right end) dominates
    assert np.allclose(out, ((n - np.arange(n)) * h) ** alpha, rtol=1e-13)
    assert fractional_maximal(CHI01, Direction.PLUS, 0.5).values[4] == pytest.approx(1.0, rel=1e-15)


def test_fractional_maximal_small_alpha_limit():
    f = func_from(np.random.default_rng(1).exponential(size=20))
    a = fractional_maximal(f, Direction.PLUS, 1e-9).values
    b = maximal(f, Direction.PLUS).values
    assert np.allclose(a, b, rtol=1e-6)


@given(nonneg, st.floats(0.05, 0.95))
def test_fractional_maximal_reflection(a, alpha):
    f = func_from(a)
    minus = fractional_maximal(f, Direction.MINUS, alpha).values
    assert np.array_equal(minus, fractional_maximal(f.reflect(), Direction.PLUS, alpha).reflect().values)


@pytest.mark.parametrize("alpha", [0.0, 1.0, -0.5, 1.5])
def test_alpha_range(alpha):
    f = func_from([1.0, 2.0])
    with pytest.raises(ParameterError):
        fractional_maximal(f, Direction.PLUS, alpha)
    with pytest.raises(ParameterError):
        fractional_integral_plus(f, alpha)


# ---------------------------------------------------------------- weighted maximal

def test_weighted_maximal_reductions(backend):
    rng = np.random.default_rng(2)
    g = unit_grid(12)
    f = func_from(rng.normal(size=12), g)
    one = GridFunction.constant(g).as_weight()
    a = np.abs(f.values)
    hl = [max(a[lo:hi].mean() for lo in range(i + 1) for hi in range(i + 1, 13)) for i in range(12)]
    assert np.allclose(weighted_maximal(f, one).values, hl, rtol=1e-13)
    sigma = weight_from(rng.uniform(0.1, 3, 12), g)
    assert np.allclose(weighted_maximal(GridFunction.constant(g, 3.0), sigma).values, 3.0, rtol=1e-13)


@pytest.mark.parametrize("direction,constant", [(Direction.PLUS, 1.0), (Direction.MINUS, 1.0), (None, 2.0)])
def test_weighted_maximal_weak_type(direction, constant):
    rng = np.random.default_rng(11)
    g = unit_grid(24)
    worst = 0.0
    for _ in range(200):
        f = func_from(rng.exponential(size=24) * (rng.random(24) < 0.5), g)
        sigma = weight_from(np.exp(rng.normal(size=24)), g)
        M = weighted_maximal(f, sigma, direction).values
        s = rng.uniform(0.05, 1.0) * M.max()
        lhs = np.sum(sigma.values[M > s]) * g.step
        rhs = np.sum(np.abs(f.values) * sigma.values) * g.step / s
        worst = max(worst, lhs / rhs)
    assert worst <= constant * (1 + 1e-12)


# ---------------------------------------------------------------- fractional integral / singular

def test_fractional_integral_examples(backend):
    for alpha in (0.25, 0.5, 0.75):
        assert fractional_integral_plus(CHI01, alpha).values[4] == pytest.approx(1 / alpha, rel=1e-14)
    assert fractional_integral_plus(CHI01, 0.5).values[0] == pytest.approx(2 * (math.sqrt(2) - 1), rel=1e-14)
    assert np.all(fractional_integral_plus(GridFunction.constant(WIDE, 0.0), 0.5).values == 0)


def test_singular_examples(backend):
    out = singular_onesided(CHI01, "inv").values
    assert out[0] == pytest.approx(-math.log(2), rel=1e-13)
    assert np.all(singular_onesided(GridFunction.constant(WIDE, 0.0)).values == 0)


@given(signed, st.data())
def test_linear_operators_are_linear(a, data):
    b = np.array(data.draw(st.lists(st.floats(-50.0, 50.0), min_size=len(a), max_size=len(a))))
    f, g = func_from(a), func_from(b)
    for op in (lambda u: singular_onesided(u, "sinlog"), lambda u: fractional_integral_plus(u, 0.4)):
        lhs = op(f + g).values
        rhs = op(f).values + op(g).values
        scale = np.abs(op(f.abs()).values).max() + np.abs(op(g.abs()).values).max() + 1
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * scale


def test_complex_input_splits():
    f = func_from(np.array([1.0, 2j, -1.0, 0.5 + 0.5j]))
    out = fractional_integral_plus(f, 0.5).values
    expect = fractional_integral_plus(func_from(f.values.real), 0.5).values \
        + 1j * fractional_integral_plus(func_from(f.values.imag), 0.5).values
    assert np.allclose(out, expect, rtol=1e-15)


# ---------------------------------------------------------------- operator specs

@pytest.mark.parametrize("text,linear", [
    ("maxplus", False), ("maxminus", False), ("fracmax:+,alpha=0.3", False), ("fracmax:-", False),
    ("fracint:alpha=0.5", True), ("singular:kernel=sinlog", True), ("singular:kernel=inv", True),
    ("haar:L=3,signs=+-+-+-+", True), ("haar:L=3,signs=5", True), ("identity", True),
])
def test_parse_operator(text, linear):
    T = parse_operator(text)
    assert T.linear is linear
    f = func_from(np.linspace(-1, 1, 8))
    out = T(f)
    assert out.n == 8
    rows = T.apply_rows(f.grid, np.vstack([f.values, 2 * f.values]))
    assert np.allclose(rows[0], out.values, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("text", ["nosuch", "fracint:alpha=x", "singular:kernel=nope", "haar:signs=+"])
def test_parse_operator_errors(text):
    with pytest.raises((SpecError, ParameterError)):
        parse_operator(text)


# ---------------------------------------------------------------- commutators

def test_commutator_trivial_cases():
    g = unit_grid(16)
    f = func_from(np.random.default_rng(0).normal(size=16), g)
    const = GridFunction.constant(g, 2.0)
    b = synthesize("linear", g)
    for k in (1, 2, 3):
        assert np.max(np.abs(commutator_iterated(fracint_op(), const, f, k).values)) <= 1e-12
        assert np.max(np.abs(commutator_iterated(IDENTITY, b, f, k).values)) == 0
    with pytest.raises(ParameterError):
        commutator_iterated(IDENTITY, b, f, 0)


def test_recursion_equals_expansion():
    rng = np.random.default_rng(5)
    g = unit_grid(24)
    T = fracint_op(0.3)
    for _ in range(20):
        b = func_from(rng.normal(size=24), g)
        f = func_from(rng.normal(size=24), g)
        for k in (1, 2, 3):
            rec = commutator_iterated(T, b, f, k, check=False).values
            exp, scale = commutator_expansion(T, b, f, k)
            assert np.max(np.abs(rec - exp.values)) <= 1e-9 * scale


def test_commutator_rejects_complex_symbol():
    f = func_from([1.0, 2.0])
    with pytest.raises(DomainError):
        commutator_iterated(IDENTITY, func_from([1j, 0.0]), f, 1)


def test_conjugate_operator():
    g = unit_grid(16)
    rng = np.random.default_rng(8)
    f = func_from(rng.normal(size=16), g)
    b = synthesize("linear:slope=2", g)
    T = fracint_op()
    assert np.array_equal(conjugate_operator(T, b, 0, f).values, T(f).values)
    c = GridFunction.constant(g, 1.5)
    assert np.allclose(conjugate_operator(T, c, 0.3 + 0.4j, f).values, T(f).values, rtol=1e-13, atol=1e-13)
    comm = commutator_iterated(T, b, f, 1).values
    errs = []
    for z in (1e-2, 5e-3):
        d = (conjugate_operator(T, b, z, f).values - conjugate_operator(T, b, -z, f).values) / (2 * z)
        errs.append(np.max(np.abs(d.real - comm)))
    assert errs[1] < errs[0] / 3          # O(z^2)
    assert errs[1] < 1e-4 * np.max(np.abs(comm))


def test_conjugate_overflow_guard():
    g = unit_grid(8)
    b = synthesize("linear:slope=1000", g)
    f = func_from(np.ones(8), g)
    with pytest.raises(RangeError):
        conjugate_operator(IDENTITY, b, 1.0, f)
    with pytest.raises(RangeError):
        cauchy_commutator(IDENTITY, b, f, ContourParams(1.0))


def test_contour_params_validation():
    for bad in (dict(radius=0), dict(radius=1, nodes=7), dict(radius=1, nodes=9), dict(radius=1, order=0)):
        with pytest.raises(ParameterError):
            ContourParams(**bad)


def test_cauchy_commutator():
    g = unit_grid(32)
    rng = np.random.default_rng(4)
    f = func_from(rng.normal(size=32), g)
    T = fracint_op()
    const = GridFunction.constant(g, 0.7)
    assert np.max(np.abs(cauchy_commutator(T, const, f, ContourParams(1.0)).values)) <= 1e-10
    b = synthesize("linear", g)
    for k in (1, 2):
        direct = commutator_iterated(T, b, f, k).values
        scale = np.max(np.abs(direct))
        errs = []
        for m in (8, 16, 32, 64):
            out, imag = cauchy_commutator(T, b, f, ContourParams(1.0, m, k), return_residue=True)
            errs.append(np.max(np.abs(out.values - direct)) / scale)
        assert errs[-1] <= 1e-6
        assert all(e1 <= e0 or e1 < 1e-13 for e0, e1 in zip(errs, errs[1:]))
        assert imag <= 1e-6 * scale
