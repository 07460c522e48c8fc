import math

import numpy as np
import pytest

from onesided.czkernels import KERNELS, KernelSpec, get_kernel, kernel_constants
from onesided.errors import KernelError, SpecError


def test_kernels_vanish_on_positive_half_line():
    for K in KERNELS.values():
        assert np.all(K(np.array([0.0, 0.5, 3.0])) == 0)


@pytest.mark.parametrize("name", sorted(KERNELS))
def test_antiderivative_matches_quadrature(name):
    K = KERNELS[name]
    plain = KernelSpec("q", K.K)
    lo = -np.array([2.0, 3.5, 10.0, 1.75])
    hi = -np.array([1.0, 3.0, 9.0, 1.25])
    assert np.allclose(K.integral(lo, hi), plain.integral(lo, hi), rtol=1e-9, atol=1e-12)


def test_cell_table():
    t = KERNELS["inv"].cell_table(0.5, 4)
    assert t[0] == 0
    # integral of 1/(-s) over [m h, (m+1) h]
    assert t[1:] == pytest.approx([-math.log(2), -math.log(1.5), -math.log(4 / 3)], rel=1e-14)


def test_inv_kernel_constants():
    B = kernel_constants("inv", r_list=(math.inf,), m_max=20)
    assert B.B2 == pytest.approx(1.0, rel=1e-12)
    assert math.isfinite(B.C[math.inf])
    # shell sup of |K(x-y)-K(x)| <= |y|/(|x|(|x|-|y|)); with |x| >= 2^m R and R >= c|y|
    # the shell sum is at most sum_m 2^m R * |y| / (2^m R (2^m R - |y|)) <= 2 / (c - 1)
    assert B.C[math.inf] <= 2.0 / (2.0 * 1.01 - 1.0)


def test_smooth_compact_kernel_is_finite():
    B = kernel_constants("bump", m_max=20)
    vals = [B.B1, B.B2, B.B3, *B.C.values()]
    assert all(math.isfinite(v) and v >= 0 for v in vals)
    d = B.as_dict()
    assert set(d["C"]) == {"1.0", "2.0", "inf"}


def test_default_kernel_bounded_size():
    B = kernel_constants("sinlog", r_list=(2.0,), m_max=12)
    assert B.B2 == pytest.approx(1.0, rel=1e-3)
    assert B.B1 <= 2.0 + 1e-12       # |cos(log e) - cos(log n)| <= 2


def test_unknown_and_nonintegrable():
    with pytest.raises(SpecError):
        get_kernel("nope")
    bad = KernelSpec("bad", lambda u: 1.0 / (u + 1.0), lambda u: np.log(np.abs(u + 1.0)))
    with pytest.raises(KernelError):
        bad.cell_table(0.5, 4)
