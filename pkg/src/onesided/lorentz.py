"""Weighted distribution functions, decreasing rearrangements and L^{p,q}(w) norms.

Everything is computed from the exact step structure of piecewise-constant
data: sorting the cells by ``|f|`` and accumulating the ``w * h`` masses
gives the distribution function and the rearrangement, and the Lorentz
integral is then a finite sum of closed-form power integrals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, ParameterError
from .grid import GridFunction

__all__ = [
    "DistributionProfile",
    "Rearrangement",
    "LorentzParams",
    "NormValue",
    "distribution",
    "rearrangement",
    "lorentz_norm",
    "lorentz",
    "lorentz_norm_rows",
]


@dataclass(frozen=True)
class DistributionProfile:
    """``lambda_f(s) = w{|f| > s}`` as a step profile.

    ``breakpoints`` holds the distinct nonzero values of ``|f|`` in
    decreasing order; ``measures[k] = w{|f| >= breakpoints[k]}``, which is the
    value of ``lambda_f`` on ``[breakpoints[k+1], breakpoints[k])``.
    """

    breakpoints: np.ndarray
    measures: np.ndarray

    def __call__(self, s: float) -> float:
        # number of breakpoints strictly greater than s
        k = int(np.searchsorted(-self.breakpoints, -float(s), side="left"))
        return float(self.measures[k - 1]) if k > 0 else 0.0

    @property
    def total(self) -> float:
        return float(self.measures[-1]) if self.measures.size else 0.0

    def __len__(self):
        return int(self.breakpoints.size)


@dataclass(frozen=True)
class Rearrangement:
    """Nonincreasing right-continuous step function ``f*`` on ``(0, total)``.

    ``f*(t) = values[k]`` for ``ends[k-1] <= t < ends[k]`` (``ends[-1]`` = 0).
    """

    values: np.ndarray
    ends: np.ndarray

    def __call__(self, t: float) -> float:
        k = int(np.searchsorted(self.ends, float(t), side="right"))
        return float(self.values[k]) if k < self.values.size else 0.0

    def distribution(self) -> DistributionProfile:
        """Distribution of f* with respect to Lebesgue measure on (0, total)."""
        return DistributionProfile(self.values.copy(), self.ends.copy())


def _masses(f: GridFunction, w: GridFunction) -> np.ndarray:
    if f.grid != w.grid:
        raise DomainError("f and w live on different grids")
    if w.is_complex or np.any(w.values < 0):
        raise DomainError("the measure density w must be real and nonnegative")
    return w.values * w.grid.step


def distribution(f: GridFunction, w: GridFunction) -> DistributionProfile:
    """Exact distribution function of |f| with respect to ``w dx``."""
    m = _masses(f, w)
    a = np.abs(f.values)
    keep = a > 0
    a, m = a[keep], m[keep]
    if a.size == 0:
        return DistributionProfile(np.zeros(0), np.zeros(0))
    order = np.argsort(-a, kind="stable")
    a, m = a[order], m[order]
    starts = np.flatnonzero(np.r_[True, a[1:] != a[:-1]])
    levels = a[starts]
    measures = np.cumsum(np.add.reduceat(m, starts))
    return DistributionProfile(levels, measures)


def rearrangement(f: GridFunction, w: GridFunction) -> Rearrangement:
    """Decreasing rearrangement of |f| with respect to ``w dx``."""
    prof = distribution(f, w)
    return Rearrangement(prof.breakpoints.copy(), prof.measures.copy())


def _check_pq(p: float, q: float):
    p, q = float(p), float(q)
    if not (p > 0 and math.isfinite(p)):
        raise ParameterError(f"p must be in (0, inf), got {p}")
    if not q > 0:
        raise ParameterError(f"q must be in (0, inf], got {q}")
    return p, q


def _step_norm(values: np.ndarray, ends: np.ndarray, p: float, q: float) -> float:
    if values.size == 0:
        return 0.0
    if math.isinf(q):
        return float(np.max(values * ends ** (1.0 / p)))
    tq = ends ** (q / p)
    pieces = np.diff(np.r_[0.0, tq])
    return float(np.sum(values ** q * (p / q) * pieces) ** (1.0 / q))


def lorentz_norm(f: GridFunction, w: GridFunction, p: float, q: float) -> float:
    """``||f||_{L^{p,q}(w)}``; ``q = inf`` gives the weak norm ``sup_t t^(1/p) f*(t)``.

    For finite q each step of f* contributes
    ``v^q * int_{t0}^{t1} t^(q/p - 1) dt = v^q (p/q) (t1^(q/p) - t0^(q/p))``.
    """
    p, q = _check_pq(p, q)
    r = rearrangement(f, w)
    return _step_norm(r.values, r.ends, p, q)


@dataclass(frozen=True)
class LorentzParams:
    p: float
    q: float
    weight: GridFunction

    def __post_init__(self):
        _check_pq(self.p, self.q)


@dataclass(frozen=True)
class NormValue:
    p: float
    q: float
    value: float
    profile: Optional[DistributionProfile] = None


def lorentz(f: GridFunction, P: LorentzParams) -> NormValue:
    prof = distribution(f, P.weight)
    value = _step_norm(prof.breakpoints, prof.measures, *_check_pq(P.p, P.q))
    return NormValue(float(P.p), float(P.q), value, prof)


def lorentz_norm_rows(F: np.ndarray, w: GridFunction, p: float, q: float) -> np.ndarray:
    """Lorentz norms of every row of ``F`` (functions on ``w``'s grid) at once.

    Equal values are not merged, so results agree with :func:`lorentz_norm`
    up to rounding only.
    """
    p, q = _check_pq(p, q)
    A = np.abs(np.asarray(F))
    if A.ndim != 2 or A.shape[1] != w.n:
        raise DomainError("rows must have one value per cell of the weight's grid")
    m = w.values * w.grid.step
    order = np.argsort(-A, axis=1, kind="stable")
    vals = np.take_along_axis(A, order, axis=1)
    ends = np.cumsum(m[order], axis=1)
    if math.isinf(q):
        return np.max(vals * ends ** (1.0 / p), axis=1)
    tq = ends ** (q / p)
    pieces = np.diff(tq, axis=1, prepend=0.0)
    return np.sum(vals ** q * (p / q) * pieces, axis=1) ** (1.0 / q)
