import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from onesided.errors import DomainError, ModeError, ParameterError
from onesided.grid import Grid, GridFunction, synthesize
from onesided.weights import (
    FULL_ENUMERATION_CAP,
    GapParams,
    Mode,
    WeightClass,
    a1_constant,
    ainfty_constant,
    ap_constant,
    apq_constant,
    bmo_norm,
    conjugate_exponent,
    dual_weight,
    gap_constant,
    john_nirenberg_sup,
    joint_ap_constant,
    joint_ap_plus_constant,
    recompute,
    rh_epsilon_max,
    rh_ratio,
)

from conftest import func_from, unit_grid, weight_from

AP = WeightClass.AP
APP = WeightClass.AP_PLUS
APM = WeightClass.AP_MINUS

weights = st.lists(st.floats(0.05, 20.0), min_size=3, max_size=14).map(np.array)
exponents = st.sampled_from([1.25, 1.5, 2.0, 3.0, 5.0])

FAMILY = ["power:delta=0.5,x0=1", "power:delta=2,x0=0", "power:delta=-0.5,x0=0",
          "exp:lambda=3", "exp:lambda=-2", "randlog:seed=3", "const"]


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), 1e-300)


# ---------------------------------------------------------------- worked examples

@pytest.mark.parametrize("n", [8, 16, 64])
def test_constant_weight(n, backend):
    one = GridFunction.constant(unit_grid(n)).as_weight()
    assert ap_constant(one, 2, APP).value == 0.25
    for p in (1.5, 2, 3, 7):
        assert ap_constant(one, p, AP).value == pytest.approx(1.0, rel=1e-15)
    assert a1_constant(one, "+").value == 1.0
    assert a1_constant(one, "-").value == 1.0
    assert ainfty_constant(one, "+").value == pytest.approx(1.0, rel=1e-15)
    assert ainfty_constant(one, "-").value == pytest.approx(1.0, rel=1e-15)
    assert apq_constant(one, 2, 2).value == 0.25
    assert joint_ap_plus_constant(one, one, 2).value == 0.25
    assert gap_constant(one, one, GapParams(4, 2.5)).value == pytest.approx(1.0, rel=1e-15)


def test_argmax_of_constant_weight_is_midpoint_split():
    one = GridFunction.constant(unit_grid(8)).as_weight()
    r = ap_constant(one, 2, APP)
    a, b, c = r.argmax
    assert b - a == c - b and r.argmax == (0, 1, 2)


def test_exponential_one_vs_two_sided():
    two, one = [], []
    for length in (4, 8, 16):
        w = synthesize("exp:lambda=1", Grid(0.0, 0.25, 4 * length))
        two.append(ap_constant(w, 2, AP).value)
        one.append(ap_constant(w, 2, APP).value)
    assert two[0] < two[1] < two[2] and two[2] > 50 * two[0]
    assert max(one) < 1.0 and max(one) / min(one) < 1.05


def test_a1_exponential():
    for lam in (0.5, 2.0):
        w = synthesize(f"exp:lambda={lam}", unit_grid(32))
        assert a1_constant(w, "+").value == pytest.approx(1.0, rel=1e-13)
        assert a1_constant(w, "-").value > 1.0


def test_bmo_examples(backend):
    assert bmo_norm(GridFunction.constant(unit_grid(10), 4.2)).value == 0
    for n in (6, 12, 30):
        chi = synthesize("indicator:a=0,b=1", Grid(-1.0, 3.0 / n, n))
        assert bmo_norm(chi).value == pytest.approx(0.5, rel=1e-14)
    for n in (8, 64):
        assert bmo_norm(synthesize("linear", unit_grid(n))).value == pytest.approx(0.25, rel=1e-14)


def test_john_nirenberg(backend):
    chi = synthesize("indicator:a=0,b=1", Grid(-1.0, 0.25, 12))
    # frozen brute-force value: the interval split in half by the jump gives e
    assert john_nirenberg_sup(chi, 1.0) == pytest.approx(math.e, rel=1e-13)
    rng = np.random.default_rng(4)
    for _ in range(10):
        b = func_from(rng.normal(size=20))
        assert john_nirenberg_sup(b, 0.0) == pytest.approx(1.0, rel=1e-15)
        vals = [john_nirenberg_sup(b, lam) for lam in (0.1, 0.5, 1.0, 2.0)]
        assert all(x <= y for x, y in zip(vals, vals[1:]))
    with pytest.raises(DomainError):
        john_nirenberg_sup(GridFunction.constant(unit_grid(4)), 1.0)
    with pytest.raises(ParameterError):
        john_nirenberg_sup(chi, -1.0)


def test_rh_epsilon_max_examples():
    g = unit_grid(64)
    assert rh_epsilon_max(GridFunction.constant(g).as_weight(), side="-") == math.inf
    big = rh_epsilon_max(synthesize("power:delta=3,x0=0", g), side="-")
    small = rh_epsilon_max(synthesize("power:delta=0.2,x0=0", g), side="-")
    assert 0 < big < small < math.inf


def test_rh_epsilon_max_is_boundary():
    w = synthesize("power:delta=2,x0=0", unit_grid(48))
    grid = tuple(np.geomspace(16, 1e-3, 121))
    e = rh_epsilon_max(w, side="-", eps_grid=grid)
    assert rh_ratio(w, e, "-")[0] <= 1.0
    nxt = min(x for x in grid if x > e)
    assert rh_ratio(w, nxt, "-")[0] > 1.0
    with pytest.raises(ParameterError):
        rh_epsilon_max(w, eps_grid=(0.0, 1.0))


def test_rh_reflection():
    w = synthesize("randlog:seed=2", unit_grid(24))
    r1, (a, b, c) = rh_ratio(w, 0.7, "+")
    r2, (a2, b2, c2) = rh_ratio(w.reflect(), 0.7, "-")
    assert r1 == r2 and (a, b, c) == (24 - c2, 24 - b2, 24 - a2)


def test_ainf_ap_comparison_is_stable():
    ratios = []
    for spec in FAMILY:
        w = synthesize(spec, unit_grid(64))
        ratios.append(ainfty_constant(w, "+").value / ap_constant(w, 2, APP).value)
    assert all(math.isfinite(r) and r > 0 for r in ratios)
    assert max(ratios) / min(ratios) < 10


def test_gap_relation_to_joint_constant():
    rng = np.random.default_rng(9)
    for _ in range(10):
        w = weight_from(np.exp(rng.normal(size=24)))
        K = gap_constant(w, w, GapParams(2, 2)).value
        assert K <= 2 ** 2 * joint_ap_plus_constant(w, w, 2).value * (1 + 1e-12)


# ---------------------------------------------------------------- errors and modes

def test_parameter_errors():
    w = weight_from([1.0, 2.0, 3.0])
    for p in (1.0, 0.5, -2):
        with pytest.raises(ParameterError):
            ap_constant(w, p)
    with pytest.raises(ParameterError):
        apq_constant(w, 2, 0)
    with pytest.raises(ParameterError):
        GapParams(1, 2)
    with pytest.raises(ParameterError):
        GapParams(2.5, 2)
    with pytest.raises(DomainError):
        gap_constant(w, w, GapParams(4, 2))
    with pytest.raises(ParameterError):
        Mode.parse("sparse")
    with pytest.raises(ParameterError):
        WeightClass.parse("a7")


def test_full_mode_cap():
    w = GridFunction.constant(unit_grid(FULL_ENUMERATION_CAP + 1)).as_weight()
    with pytest.raises(ModeError, match="dyadic"):
        ap_constant(w, 2, APP, Mode.FULL)
    r = ap_constant(w, 2, APP, Mode.DYADIC)
    assert r.mode is Mode.DYADIC and r.value == 0.25


def test_report_dict():
    w = synthesize("power:delta=1,x0=0", unit_grid(16))
    d = apq_constant(w, 2, 3).as_dict()
    assert d["class"] == "apq+" and d["p"] == 2 and d["q"] == 3 and d["mode"] == "full"
    assert len(d["argmax"]) == 3


# ---------------------------------------------------------------- invariants

@given(weights, exponents)
def test_duality(u, p):
    w = weight_from(u)
    pp = conjugate_exponent(p)
    lhs = ap_constant(dual_weight(w, p), pp, APM).value
    rhs = ap_constant(w, p, APP).value ** (pp - 1)
    assert rel(lhs, rhs) <= 1e-10


@given(weights, exponents)
def test_reflection(u, p):
    w = weight_from(u)
    assert rel(ap_constant(w.reflect(), p, APM).value, ap_constant(w, p, APP).value) <= 1e-13
    assert rel(ainfty_constant(w.reflect(), "-").value, ainfty_constant(w, "+").value) <= 1e-13
    assert a1_constant(w.reflect(), "-").value == pytest.approx(a1_constant(w, "+").value, rel=1e-13)


@given(weights, exponents)
def test_one_sided_below_two_sided(u, p):
    w = weight_from(u)
    two = ap_constant(w, p, AP).value
    assert ap_constant(w, p, APP).value <= two * (1 + 1e-12)
    assert ap_constant(w, p, APM).value <= two * (1 + 1e-12)


@given(weights, exponents, st.floats(1e-3, 1e3))
def test_scale_invariance(u, p, lam):
    w = weight_from(u)
    W = weight_from(lam * u)
    for f in (lambda x: ap_constant(x, p, APP), lambda x: ap_constant(x, p, AP),
              lambda x: apq_constant(x, p, 1.5), lambda x: a1_constant(x, "+"),
              lambda x: ainfty_constant(x, "-")):
        assert rel(f(w).value, f(W).value) <= 1e-12
    assert rh_ratio(w, 0.5)[0] == pytest.approx(rh_ratio(W, 0.5)[0], rel=1e-12)


def test_dilation_invariance():
    u = np.exp(np.random.default_rng(6).normal(size=20))
    w = weight_from(u, Grid(0.0, 0.05, 20))
    W = weight_from(u, Grid(-7.0, 3.0, 20))
    for p in (1.5, 3.0):
        for var in (AP, APP, APM):
            assert ap_constant(w, p, var).value == ap_constant(W, p, var).value
    assert ainfty_constant(w).value == ainfty_constant(W).value
    assert bmo_norm(w).value == bmo_norm(W).value


@given(weights, exponents, st.sampled_from([0.5, 1.0, 2.0, 3.5]))
def test_apq_identities(u, p, q):
    w = weight_from(u)
    pp = conjugate_exponent(p)
    r = 1 + q / pp
    val = apq_constant(w, p, q).value
    assert rel(val, ap_constant(w.power(q), r, APP).value) <= 1e-10
    assert rel(val ** (pp / q), ap_constant(w.power(-pp), conjugate_exponent(r), APM).value) <= 1e-10


@given(weights, weights, exponents, st.floats(0.01, 100))
def test_joint_constant(u, v, p, lam):
    n = min(len(u), len(v))
    w, vv = weight_from(u[:n]), weight_from(v[:n])
    assert joint_ap_plus_constant(w, w, p).value == ap_constant(w, p, APP).value
    scaled = joint_ap_plus_constant(weight_from(lam * v[:n]), w, p).value
    assert rel(scaled, lam * joint_ap_plus_constant(vv, w, p).value) <= 1e-12
    assert joint_ap_plus_constant(vv, w, p).value <= joint_ap_constant(vv, w, p).value * (1 + 1e-12)


@given(weights, exponents)
def test_argmax_recompute(u, p):
    w = weight_from(u)
    v = weight_from(u[::-1].copy())
    reports = [
        (ap_constant(w, p, APP), None), (ap_constant(w, p, APM), None), (ap_constant(w, p, AP), None),
        (apq_constant(w, p, 2.0, "+"), None), (apq_constant(w, p, 0.7, "-"), None),
        (a1_constant(w, "+"), None), (a1_constant(w, "-"), None),
        (ainfty_constant(w, "+"), None), (ainfty_constant(w, "-"), None),
        (joint_ap_plus_constant(v, w, p), v), (joint_ap_constant(v, w, p), v),
        (bmo_norm(w), None),
    ]
    if len(u) >= 3:
        reports.append((gap_constant(v, w, GapParams(3, p)), v))
    for rep, vv in reports:
        assert rel(rep.value, recompute(rep, w, vv)) <= 1e-12, rep.cls


@given(st.lists(st.floats(0.05, 20.0), min_size=4, max_size=40).map(np.array), exponents)
def test_dyadic_below_full(u, p):
    w = weight_from(u)
    for var in (AP, APP, APM):
        full = ap_constant(w, p, var, Mode.FULL)
        dy = ap_constant(w, p, var, Mode.DYADIC)
        assert dy.value <= full.value * (1 + 1e-12)
        assert rel(dy.value, recompute(dy, w)) <= 1e-12


@given(weights)
def test_lower_bounds_by_definition(u):
    w = weight_from(u)
    assert a1_constant(w, "+").value >= 1 - 1e-12
    assert a1_constant(w, "-").value >= 1 - 1e-12
    assert ainfty_constant(w, "+").value >= 1 - 1e-12
    assert ainfty_constant(w, "-").value >= 1 - 1e-12
    assert ap_constant(w, 2, AP).value >= 1 - 1e-12
