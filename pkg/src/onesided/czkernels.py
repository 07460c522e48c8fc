"""Kernels supported on the negative half-line and their size/smoothness constants.

A :class:`KernelSpec` gives ``K(u)`` for ``u < 0`` (zero for ``u >= 0``) and,
when known, an antiderivative so that cell integrals are exact.  Kernels
without an antiderivative are integrated by composite Gauss-Legendre
quadrature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import KernelError, SpecError

__all__ = ["KernelSpec", "KernelBounds", "KERNELS", "get_kernel", "kernel_constants"]

_GL16 = np.polynomial.legendre.leggauss(16)


@dataclass(frozen=True)
class KernelSpec:
    name: str
    K: Callable[[np.ndarray], np.ndarray]
    antiderivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    description: str = ""

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        neg = u < 0
        with np.errstate(all="ignore"):
            out[neg] = self.K(u[neg])
        return out

    def integral(self, lo, hi):
        """Integral of K over [lo, hi] (both <= 0), vectorised over arrays."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if self.antiderivative is not None:
            with np.errstate(all="ignore"):
                val = self.antiderivative(hi) - self.antiderivative(lo)
        else:
            x, wts = _GL16
            mid = 0.5 * (lo + hi)
            half = 0.5 * (hi - lo)
            pts = mid[..., None] + half[..., None] * x
            val = half * (self(pts) @ wts)
        if not np.all(np.isfinite(val)):
            raise KernelError(f"kernel {self.name!r} is not integrable on the requested cells")
        return val

    def cell_table(self, h: float, n: int) -> np.ndarray:
        """``table[m] = integral of K(-s) ds over [m h, (m+1) h]`` for m >= 1; table[0] = 0."""
        m = np.arange(1, n, dtype=float)
        table = np.zeros(n)
        if n > 1:
            table[1:] = self.integral(-(m + 1) * h, -m * h)
        return table


def _inv_cells(hi):
    return np.log(np.abs(hi))


def _bump_F(u):
    u = np.clip(u, -2.0, -1.0)
    return u / 2 - np.sin(2 * np.pi * u) / (4 * np.pi)


KERNELS = {
    "inv": KernelSpec("inv", lambda u: 1.0 / u, _inv_cells, "1/u"),
    "sinlog": KernelSpec(
        "sinlog",
        lambda u: np.sin(np.log(np.abs(u))) / u,
        lambda u: -np.cos(np.log(np.abs(u))),
        "sin(log|u|)/u",
    ),
    "bump": KernelSpec(
        "bump",
        lambda u: np.where((u > -2) & (u < -1), np.sin(np.pi * u) ** 2, 0.0),
        _bump_F,
        "sin^2(pi u) on (-2,-1)",
    ),
}


def get_kernel(name: str | KernelSpec) -> KernelSpec:
    if isinstance(name, KernelSpec):
        return name
    try:
        return KERNELS[name]
    except KeyError:
        raise SpecError(f"unknown kernel {name!r}; known: {', '.join(KERNELS)}") from None


@dataclass
class KernelBounds:
    B1: float
    B2: float
    B3: float
    C: dict = field(default_factory=dict)
    tail: dict = field(default_factory=dict)
    eps: float = 1e-6
    N: float = 1e6
    m_max: int = 40
    nodes: int = 64
    c_r: float = 2.0

    def as_dict(self):
        key = lambda r: "inf" if math.isinf(r) else repr(float(r))
        return {
            "B1": self.B1, "B2": self.B2, "B3": self.B3,
            "C": {key(r): v for r, v in self.C.items()},
            "tail": {key(r): v for r, v in self.tail.items()},
            "eps": self.eps, "N": self.N, "m_max": self.m_max,
            "nodes": self.nodes, "c_r": self.c_r,
        }


def _shell_points(lo, hi, nodes):
    """Composite Gauss-Legendre nodes/weights on [lo, hi]: panels of 8 nodes."""
    x8, w8 = np.polynomial.legendre.leggauss(8)
    panels = max(1, nodes // 8)
    edges = np.linspace(lo, hi, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    pts = (mid[:, None] + half[:, None] * x8).ravel()
    wts = (half[:, None] * w8).ravel()
    return pts, wts


def _hormander_sum(K, y, R, r, m_max, nodes):
    total = 0.0
    last = 0.0
    for m in range(1, m_max + 1):
        a, b = 2.0 ** m * R, 2.0 ** (m + 1) * R
        acc = 0.0
        sup = 0.0
        for lo, hi in ((-b, -a), (a, b)):
            x, wts = _shell_points(lo, hi, nodes)
            with np.errstate(all="ignore"):
                d = np.abs(K(x - y) - K(x))
            if not np.all(np.isfinite(d)):
                return math.inf, True
            if math.isinf(r):
                sup = max(sup, float(d.max()))
            else:
                acc += float(np.sum(wts * d ** r))
        if math.isinf(r):
            term = a * sup
        else:
            term = a * (acc / a) ** (1.0 / r)
        if not math.isfinite(term):
            return math.inf, True
        total += term
        last = term
    return total, bool(total > 0 and last > 1e-3 * total)


def kernel_constants(K, r_list=(1.0, 2.0, math.inf), m_max: int = 40, *, eps: float = 1e-6,
                     N: float = 1e6, nodes: int = 64, c_r: float = 2.0) -> KernelBounds:
    """Measure the Calderon-Zygmund constants B1, B2, B3 and the L^r-Hormander sums C_r.

    All suprema are maxima over fixed probe sets, so the results are lower
    bounds for the true constants:

    * B1 -- truncations ``eps <= e < n <= N`` on a log grid (25 points per axis).
    * B2, B3 -- |x| on a log grid over [eps, N]; ``y = +-x*rho`` with
      ``rho`` in [1e-4, 0.499] for the Lipschitz condition.
    * C_r -- shell sums truncated at ``m_max``, shells integrated with
      ``nodes`` Gauss-Legendre nodes per half-shell; ``y`` in +-10^k,
      ``R = c_r |y| * {1.01, 2, 4}``.  ``tail[r]`` flags a last shell term
      above 1e-3 of the partial sum (not converged); a divergent sum is
      reported as ``inf`` with the flag set.
    """
    K = get_kernel(K)
    lg = np.logspace(math.log10(eps), math.log10(N), 25)
    if K.antiderivative is not None:
        F = K.antiderivative
        vals = [abs(float(F(np.array(-e)) - F(np.array(-n)))) for e in lg for n in lg if e < n]
    else:
        vals = [abs(float(K.integral(np.array(-n), np.array(-e)))) for e in lg for n in lg if e < n]
    B1 = max(vals)

    xs = -np.logspace(math.log10(eps), math.log10(N), 241)
    kx = K(xs)
    if not np.all(np.isfinite(kx)):
        raise KernelError(f"kernel {K.name!r} is not finite on the probe range")
    B2 = float(np.max(np.abs(xs) * np.abs(kx)))

    rho = np.logspace(-4, math.log10(0.499), 40)
    X = xs[:, None]
    B3 = 0.0
    for sgn in (1.0, -1.0):
        Y = sgn * np.abs(X) * rho[None, :]
        with np.errstate(all="ignore"):
            q = np.abs(K(X - Y) - K(X)) * X ** 2 / np.abs(Y)
        B3 = max(B3, float(np.max(q)))

    C, tail = {}, {}
    for r in r_list:
        r = float(r)
        best, flag = 0.0, False
        for k in (-2, 0, 2):
            for sgn in (1.0, -1.0):
                y = sgn * 10.0 ** k
                for fac in (1.01, 2.0, 4.0):
                    s, f = _hormander_sum(K, y, c_r * abs(y) * fac, r, m_max, nodes)
                    if s > best:
                        best, flag = s, f
                    elif s == best:
                        flag = flag or f
        C[r], tail[r] = best, flag
    return KernelBounds(B1, B2, B3, C, tail, eps, N, m_max, nodes, c_r)
