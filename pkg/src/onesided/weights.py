"""Weight-class constants as exact maxima over grid-aligned intervals.

Every supremum over intervals ``(a, c)`` or triples ``a < b < c`` becomes a
maximum over grid edges, so the constants reported here are exact for the
piecewise-constant weight and lower bounds for the continuum quantity.

The dual weight ``sigma = w^(1-p')`` is formed cell by cell from ``w``'s
cell values.  This keeps duality identities exact on the discrete model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ._backend import kernels as _k
from .errors import DomainError, ModeError, ParameterError
from .grid import GridFunction, IntervalIndex, average
from .operators import Direction, maximal

__all__ = [
    "WeightClass",
    "Mode",
    "WeightConstantReport",
    "GapParams",
    "FULL_ENUMERATION_CAP",
    "INTERVAL_CAP",
    "ap_constant",
    "a1_constant",
    "ainfty_constant",
    "apq_constant",
    "joint_ap_plus_constant",
    "joint_ap_constant",
    "gap_constant",
    "bmo_norm",
    "john_nirenberg_sup",
    "rh_ratio",
    "rh_epsilon_max",
    "recompute",
    "dual_weight",
    "conjugate_exponent",
    "DEFAULT_EPS_GRID",
]

FULL_ENUMERATION_CAP = 512     # triples: about 2e7 at the cap
INTERVAL_CAP = 4096            # single intervals are only O(n^2)


class WeightClass(enum.Enum):
    AP = "ap"
    AP_PLUS = "ap+"
    AP_MINUS = "ap-"
    A1_PLUS = "a1+"
    A1_MINUS = "a1-"
    AINF_PLUS = "ainf+"
    AINF_MINUS = "ainf-"
    APQ_PLUS = "apq+"
    APQ_MINUS = "apq-"
    JOINT_AP_PLUS = "joint+"
    JOINT_AP = "joint"
    GAP = "gap"
    BMO = "bmo"

    @classmethod
    def parse(cls, text) -> "WeightClass":
        if isinstance(text, WeightClass):
            return text
        try:
            return cls(str(text).strip().lower())
        except ValueError:
            raise ParameterError(f"unknown weight class {text!r}") from None


class Mode(enum.Enum):
    FULL = "full"
    DYADIC = "dyadic"

    @classmethod
    def parse(cls, text) -> "Mode":
        if isinstance(text, Mode):
            return text
        key = str(text).strip().lower()
        if key in ("full", "fullenumeration"):
            return cls.FULL
        if key in ("dyadic", "dyadicrestricted"):
            return cls.DYADIC
        raise ParameterError(f"unknown enumeration mode {text!r}")


@dataclass(frozen=True)
class WeightConstantReport:
    cls: WeightClass
    value: float
    argmax: tuple
    mode: Mode = Mode.FULL
    params: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "class": self.cls.value,
            "p": self.params.get("p"),
            "q": self.params.get("q"),
            "value": self.value,
            "argmax": list(self.argmax),
            "mode": self.mode.value,
            **{k: v for k, v in self.params.items() if k not in ("p", "q")},
        }


@dataclass(frozen=True)
class GapParams:
    t: int
    p: float

    def __post_init__(self):
        if int(self.t) != self.t or self.t < 2:
            raise ParameterError(f"gap factor t must be an integer >= 2, got {self.t}")
        _check_p(self.p)


def _check_p(p: float) -> float:
    p = float(p)
    if not (p > 1 and math.isfinite(p)):
        raise ParameterError(f"p must be > 1 and finite, got {p}")
    return p


def conjugate_exponent(p: float) -> float:
    p = _check_p(p)
    return p / (p - 1.0)


def _weight(w: GridFunction) -> GridFunction:
    if w.is_complex:
        raise DomainError("weights are real")
    return w if w.weight else w.as_weight()


def dual_weight(w: GridFunction, p: float) -> GridFunction:
    """sigma = w^(1-p') = w^(-1/(p-1)), cell by cell."""
    p = _check_p(p)
    return _weight(w).power(-1.0 / (p - 1.0))


def _arr(x) -> np.ndarray:
    return np.ascontiguousarray(x.values if isinstance(x, GridFunction) else x, dtype=float)


def _dyadic_triple(u, v, eL, eR):
    n = u.shape[0]
    best, arg = -1.0, (0, 0, 0)
    L = 2
    while L <= n:
        step = L // 2
        for a in range(0, n - L + 1, step):
            c = a + L
            S1 = np.cumsum(u[a:c - 1])                 # b = a+1..c-1
            S2 = np.cumsum(v[c - 1:a:-1])[::-1]        # b = a+1..c-1
            vals = np.power(S1, eL) * np.power(S2, eR) * float(L) ** (-(eL + eR))
            m = float(vals.max())
            cand = (a, a + 1 + int(np.argmax(vals)), c)
            if m > best or (m == best and cand < arg):
                best, arg = m, cand
        L *= 2
    return (best,) + arg


def _dyadic_interval(u, v, eL, eR):
    n = u.shape[0]
    best, arg = -1.0, (0, 0)
    L = 1
    while L <= n:
        step = max(1, L // 2)
        for a in range(0, n - L + 1, step):
            su, sv = float(np.sum(u[a:a + L])), float(np.sum(v[a:a + L]))
            m = su ** eL * sv ** eR * float(L) ** (-(eL + eR))
            if m > best or (m == best and (a, a + L) < arg):
                best, arg = m, (a, a + L)
        L *= 2
    return (best,) + arg


def _triple(u, v, eL, eR, mode: Mode):
    n = u.shape[0]
    if mode is Mode.FULL:
        if n > FULL_ENUMERATION_CAP:
            raise ModeError(f"full triple enumeration is capped at {FULL_ENUMERATION_CAP} cells "
                            f"(got {n}); use mode='dyadic'")
        return _k.triple_max(u, v, float(eL), float(eR))
    return _dyadic_triple(u, v, float(eL), float(eR))


def _interval(u, v, eL, eR, mode: Mode):
    if mode is Mode.FULL:
        if u.shape[0] > INTERVAL_CAP:
            raise ModeError(f"full interval enumeration is capped at {INTERVAL_CAP} cells; use mode='dyadic'")
        return _k.interval_max(u, v, float(eL), float(eR))
    return _dyadic_interval(u, v, float(eL), float(eR))


def ap_constant(w: GridFunction, p: float, variant=WeightClass.AP_PLUS, mode=Mode.FULL) -> WeightConstantReport:
    """[w]_{A_p^+}, [w]_{A_p^-} or the two-sided [w]_{A_p}.

    A_p^+ is the max over a < b < c of
    ``(1/(c-a)) int_a^b w * ((1/(c-a)) int_b^c sigma)^(p-1)``;
    A_p^- swaps the roles of the two blocks; A_p uses one interval for both
    averages.
    """
    p = _check_p(p)
    variant = WeightClass.parse(variant)
    mode = Mode.parse(mode)
    w = _weight(w)
    u = _arr(w)
    s = _arr(dual_weight(w, p))
    if variant is WeightClass.AP_PLUS:
        val, *arg = _triple(u, s, 1.0, p - 1.0, mode)
    elif variant is WeightClass.AP_MINUS:
        val, *arg = _triple(s, u, p - 1.0, 1.0, mode)
    elif variant is WeightClass.AP:
        val, *arg = _interval(u, s, 1.0, p - 1.0, mode)
    else:
        raise ParameterError(f"ap_constant handles ap, ap+ and ap-, not {variant.value}")
    return WeightConstantReport(variant, float(val), tuple(arg), mode, {"p": p})


def joint_ap_plus_constant(v: GridFunction, w: GridFunction, p: float, mode=Mode.FULL) -> WeightConstantReport:
    """[v,w]_{A_p^+}: the A_p^+ expression with v on the left block and w^(1-p') on the right."""
    p = _check_p(p)
    mode = Mode.parse(mode)
    if v.grid != w.grid:
        raise DomainError("grid mismatch")
    val, *arg = _triple(_arr(_weight(v)), _arr(dual_weight(w, p)), 1.0, p - 1.0, mode)
    return WeightConstantReport(WeightClass.JOINT_AP_PLUS, float(val), tuple(arg), mode, {"p": p})


def joint_ap_constant(v: GridFunction, w: GridFunction, p: float, mode=Mode.FULL) -> WeightConstantReport:
    """Two-sided pair constant: max over intervals I of avg_I(v) * avg_I(w^(1-p'))^(p-1)."""
    p = _check_p(p)
    mode = Mode.parse(mode)
    if v.grid != w.grid:
        raise DomainError("grid mismatch")
    val, *arg = _interval(_arr(_weight(v)), _arr(dual_weight(w, p)), 1.0, p - 1.0, mode)
    return WeightConstantReport(WeightClass.JOINT_AP, float(val), tuple(arg), mode, {"p": p})


def apq_constant(w: GridFunction, p: float, q: float, variant="+", mode=Mode.FULL) -> WeightConstantReport:
    """[w]_{A_{p,q}^+}: max of avg_left(w^q) * avg_right(w^(-p'))^(q/p'); ``variant='-'`` mirrors."""
    p = _check_p(p)
    q = float(q)
    if not (q > 0 and math.isfinite(q)):
        raise ParameterError(f"q must be in (0, inf), got {q}")
    mode = Mode.parse(mode)
    direction = Direction.parse(variant)
    w = _weight(w)
    pp = conjugate_exponent(p)
    wq = _arr(w.power(q))
    wn = _arr(w.power(-pp))
    if direction is Direction.PLUS:
        val, *arg = _triple(wq, wn, 1.0, q / pp, mode)
        cls = WeightClass.APQ_PLUS
    else:
        val, *arg = _triple(wn, wq, q / pp, 1.0, mode)
        cls = WeightClass.APQ_MINUS
    return WeightConstantReport(cls, float(val), tuple(arg), mode, {"p": p, "q": q})


def a1_constant(w: GridFunction, direction=Direction.PLUS) -> WeightConstantReport:
    """[w]_{A_1^+} = max M^- w / w (plus) and [w]_{A_1^-} = max M^+ w / w (minus); argmax is a cell."""
    direction = Direction.parse(direction)
    w = _weight(w)
    ratio = maximal(w, direction.opposite).values / w.values
    i = int(np.argmax(ratio))
    cls = WeightClass.A1_PLUS if direction is Direction.PLUS else WeightClass.A1_MINUS
    return WeightConstantReport(cls, float(ratio[i]), (i,), Mode.FULL, {})


def ainfty_constant(w: GridFunction, direction=Direction.PLUS) -> WeightConstantReport:
    """Fujii-Wilson one-sided constants.

    ``[w]_{A_inf^-} = max_I (1/w(I)) int_I M^+(chi_I w)`` and
    ``[w]_{A_inf^+} = max_I (1/w(I)) int_I M^-(chi_I w)``.
    """
    direction = Direction.parse(direction)
    w = _weight(w)
    u = _arr(w)
    if direction is Direction.MINUS:
        val, lo, hi = _k.ainf_minus(u)
        cls = WeightClass.AINF_MINUS
    else:
        val, lo, hi = _k.ainf_minus(np.ascontiguousarray(u[::-1]))
        lo, hi = w.n - hi, w.n - lo
        cls = WeightClass.AINF_PLUS
    return WeightConstantReport(cls, float(val), (lo, hi), Mode.FULL, {})


def gap_constant(v: GridFunction, w: GridFunction, G: GapParams) -> WeightConstantReport:
    """Largest gap-condition quotient over intervals whose cell count is a multiple of t.

    For I = (a, b) with l = b - a cells the end blocks have l/t cells:
    ``avg_{first block}(v) * avg_{last block}(sigma)^(p-1)``.
    """
    if v.grid != w.grid:
        raise DomainError("grid mismatch")
    if v.n < G.t:
        raise DomainError(f"no interval with a multiple of t={G.t} cells on {v.n} cells")
    val, a, b = _k.gap_max(_arr(_weight(v)), _arr(dual_weight(w, G.p)), int(G.t), G.p - 1.0)
    return WeightConstantReport(WeightClass.GAP, float(val), (a, b), Mode.FULL, {"p": G.p, "t": int(G.t)})


def _shifted(b: GridFunction) -> np.ndarray:
    if b.is_complex:
        raise DomainError("BMO functions are real here")
    # mean oscillation is translation invariant; shifting makes constants exactly 0
    return np.ascontiguousarray(b.values - b.values[0])


def bmo_norm(b: GridFunction) -> WeightConstantReport:
    """max over grid intervals of (1/|I|) int_I |b - b_I|."""
    val, lo, hi = _k.bmo_max(_shifted(b))
    return WeightConstantReport(WeightClass.BMO, float(max(val, 0.0)), (lo, hi), Mode.FULL, {})


def john_nirenberg_sup(b: GridFunction, lam: float) -> float:
    """max over grid intervals of (1/|I|) int_I exp(lam |b - b_I| / ||b||_BMO)."""
    lam = float(lam)
    if lam < 0:
        raise ParameterError("lambda must be >= 0")
    norm = bmo_norm(b).value
    if norm <= 0:
        raise DomainError("||b||_BMO = 0: John-Nirenberg normalisation undefined")
    val, _, _ = _k.jn_max(_shifted(b), lam / norm)
    return float(val)


def rh_ratio(w: GridFunction, eps: float, side=Direction.MINUS):
    """Largest ratio lhs/rhs of the one-sided reverse Hoelder display over all triples.

    minus side: ``|(a,b)|^eps int_b^c w^(1+eps) <= 2 (int_a^c w)^(1+eps)``;
    plus side: ``|(b,c)|^eps int_a^b w^(1+eps) <= 2 (int_a^c w)^(1+eps)``.
    Returns ``(ratio, (a, b, c))``; the display holds for all triples iff ratio <= 1.
    """
    side = Direction.parse(side)
    u = _arr(_weight(w))
    u = u / u.max()    # both sides are homogeneous of degree 1+eps; keeps large eps finite
    if side is Direction.MINUS:
        r, a, b, c = _k.rh_max_ratio(u, float(eps))
        return float(r), (a, b, c)
    r, a, b, c = _k.rh_max_ratio(np.ascontiguousarray(u[::-1]), float(eps))
    n = w.n
    return float(r), (n - c, n - b, n - a)


DEFAULT_EPS_GRID = tuple(float(x) for x in np.geomspace(64.0, 1e-4, 241))


def rh_epsilon_max(w: GridFunction, p=math.inf, side=Direction.MINUS,
                   eps_grid: Sequence[float] = DEFAULT_EPS_GRID) -> float:
    """Largest eps in ``eps_grid`` for which the reverse Hoelder display holds on every triple.

    ``p`` is accepted for symmetry with the A_p version of the lemma; the
    display itself does not involve it.  For each triple the log of
    lhs/rhs is convex in eps and negative at eps = 0, so the admissible set
    is an interval starting at 0 and a bisection over the sorted grid finds
    its largest grid point.  Returns 0.0 if no grid point passes and
    ``math.inf`` if every grid point passes.
    """
    grid = sorted(float(e) for e in eps_grid)
    if not grid or grid[0] <= 0:
        raise ParameterError("eps_grid must be a non-empty list of positive numbers")
    passes = lambda e: rh_ratio(w, e, side)[0] <= 1.0
    if passes(grid[-1]):
        return math.inf
    if not passes(grid[0]):
        return 0.0
    lo, hi = 0, len(grid) - 1          # grid[lo] passes, grid[hi] fails
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(grid[mid]):
            lo = mid
        else:
            hi = mid
    return grid[lo]


def recompute(report: WeightConstantReport, w: GridFunction, v: Optional[GridFunction] = None) -> float:
    """Re-evaluate the class expression at ``report.argmax`` with plain averages.

    Independent of the enumeration kernels; used to audit reports.
    """
    cls, arg, prm = report.cls, report.argmax, report.params
    if cls in (WeightClass.AP_PLUS, WeightClass.AP_MINUS, WeightClass.AP, WeightClass.JOINT_AP_PLUS,
               WeightClass.JOINT_AP):
        p = prm["p"]
        left = v if v is not None else w
        s = dual_weight(w, p)
        if cls is WeightClass.AP:
            I = IntervalIndex(*arg)
            return float(average(w, I) * average(s, I) ** (p - 1))
        if cls is WeightClass.JOINT_AP:
            I = IntervalIndex(*arg)
            return float(average(left, I) * average(s, I) ** (p - 1))
        a, b, c = arg
        L = c - a
        if cls is WeightClass.AP_MINUS:
            return float((average(w, IntervalIndex(b, c)) * (c - b) / L)
                         * (average(s, IntervalIndex(a, b)) * (b - a) / L) ** (p - 1))
        return float((average(left, IntervalIndex(a, b)) * (b - a) / L)
                     * (average(s, IntervalIndex(b, c)) * (c - b) / L) ** (p - 1))
    if cls in (WeightClass.APQ_PLUS, WeightClass.APQ_MINUS):
        p, q = prm["p"], prm["q"]
        pp = conjugate_exponent(p)
        a, b, c = arg
        L = c - a
        wq, wn = w.power(q), w.power(-pp)
        if cls is WeightClass.APQ_PLUS:
            return float((average(wq, IntervalIndex(a, b)) * (b - a) / L)
                         * (average(wn, IntervalIndex(b, c)) * (c - b) / L) ** (q / pp))
        return float((average(wq, IntervalIndex(b, c)) * (c - b) / L)
                     * (average(wn, IntervalIndex(a, b)) * (b - a) / L) ** (q / pp))
    if cls in (WeightClass.A1_PLUS, WeightClass.A1_MINUS):
        (i,) = arg
        d = Direction.MINUS if cls is WeightClass.A1_PLUS else Direction.PLUS
        return float(maximal(w, d, method="naive").values[i] / w.values[i])
    if cls in (WeightClass.AINF_PLUS, WeightClass.AINF_MINUS):
        lo, hi = arg
        d = Direction.PLUS if cls is WeightClass.AINF_MINUS else Direction.MINUS
        I = IntervalIndex(lo, hi)
        M = maximal(w.restrict(I), d, method="naive")
        return float(average(M, I) / average(w, I))
    if cls is WeightClass.GAP:
        p, t = prm["p"], prm["t"]
        a, b = arg
        m = (b - a) // t
        left = v if v is not None else w
        return float(average(left, IntervalIndex(a, a + m))
                     * average(dual_weight(w, p), IntervalIndex(b - m, b)) ** (p - 1))
    if cls is WeightClass.BMO:
        I = IntervalIndex(*arg)
        seg = w.values[I.lo:I.hi]
        return float(np.mean(np.abs(seg - np.mean(seg))))
    raise ParameterError(f"cannot recompute {cls.value}")
