"""Lemma verifiers, norm lower bounds and exponent sweeps.

Each verifier measures both sides of an inequality on the grid model and
returns a :class:`LemmaReport`.  Absolute constants that the inequalities
only assert to exist (tau, tau_p, eps_p, the John-Nirenberg exponent) are
read from ``calibration.json``, produced once by :func:`calibrate`; every
verifier also accepts them as explicit arguments.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .errors import DomainError, ParameterError, RangeError, RegressionError, SpecError
from .grid import Grid, GridFunction, parse_spec, synthesize
from .lorentz import lorentz_norm_rows
from .operators import (
    EXP_GUARD,
    ContourParams,
    Direction,
    OperatorHandle,
    cauchy_commutator,
    commutator_iterated,
    conjugate_operator,
)
from .weights import (
    GapParams,
    Mode,
    WeightClass,
    ainfty_constant,
    ap_constant,
    a1_constant,
    apq_constant,
    bmo_norm,
    conjugate_exponent,
    dual_weight,
    gap_constant,
    john_nirenberg_sup,
    joint_ap_constant,
    joint_ap_plus_constant,
    rh_epsilon_max,
    rh_ratio,
)

__all__ = [
    "LemmaReport",
    "SweepResult",
    "AdnopParams",
    "Calibration",
    "load_calibration",
    "calibrate",
    "verify_gap_lemma",
    "verify_rh_lemma",
    "verify_s_shift",
    "verify_joint_rh",
    "verify_perturbation",
    "perturbation_ratio",
    "verify_conjugation_consistency",
    "operator_norm_lower_bound",
    "norm_sweep",
    "parse_family",
    "adnop_bound",
    "extrapolation_exponent",
    "predicted_bound",
    "class_constant",
    "CALIBRATION_FAMILY",
    "BMO_FAMILY",
]

CALIBRATION_PATH = Path(__file__).with_name("calibration.json")
CALIBRATION_FAMILY = tuple(f"power:delta={d},x0={x0}" for d in (0.25, 0.5, 1.0, 2.0, 4.0) for x0 in (0.0, 1.0))
BMO_FAMILY = ("logosc:x0=0,clip=10", "linear")
CALIBRATED_P = (1.5, 2.0, 3.0)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LemmaReport:
    lemma: str
    inputs: dict
    lhs: float
    rhs: float
    slack: float
    passed: bool
    tol: float
    notes: str = ""
    measured: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "lemma": self.lemma,
            "inputs": self.inputs,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "slack": self.slack,
            "pass": self.passed,
            "tol": self.tol,
            "notes": self.notes,
            "measured": self.measured,
        }


def _slack(lhs: float, rhs: float) -> float:
    if lhs == 0:
        return 0.0
    return lhs / rhs if rhs > 0 else math.inf


def _report(lemma, inputs, lhs, rhs, tol, notes="", measured=None) -> LemmaReport:
    lhs, rhs, tol = float(lhs), float(rhs), float(tol)
    s = _slack(lhs, rhs)
    return LemmaReport(lemma, inputs, lhs, rhs, s, bool(s <= 1.0 + tol), tol, notes, measured or {})


@dataclass(frozen=True)
class SweepResult:
    family: str
    params: list
    points: list
    slope: float
    intercept: float
    max_residual: float
    exponent: float
    margin: float
    passed: bool
    predicted: list = field(default_factory=list)
    implied_constant: float = 1.0
    bound_ok: Optional[bool] = None
    theorem: str = ""

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "theorem": self.theorem,
            "params": self.params,
            "points": [list(p) for p in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "max_residual": self.max_residual,
            "exponent": self.exponent,
            "margin": self.margin,
            "pass": self.passed,
            "predicted": self.predicted,
            "implied_constant": self.implied_constant,
            "bound_ok": self.bound_ok,
        }

    def csv_rows(self):
        """Rows ``(param, constant, norm_lb, predicted_rhs)``."""
        pred = self.predicted or [math.nan] * len(self.points)
        return [(prm, c, nlb, pr) for prm, (c, nlb), pr in zip(self.params, self.points, pred)]


@dataclass(frozen=True)
class AdnopParams:
    p: float
    q: float
    r: float
    A: float = 1.0
    N: float = 1.0

    def __post_init__(self):
        if not (1 < self.r < self.p):
            raise ParameterError(f"need 1 < r < p, got r={self.r}, p={self.p}")
        if self.A < 0 or self.N < 0:
            raise ParameterError("A and N must be nonnegative")
        if not self.q > 0:
            raise ParameterError("q must be positive")


# ---------------------------------------------------------------------------
# calibration
# ---------------------------------------------------------------------------

def _pkey(p: float) -> str:
    return repr(float(p))


@dataclass(frozen=True)
class Calibration:
    tau: float
    tau_p: dict
    lambda_jn: float
    c_jn: float
    eps_p: dict
    eps_p_formula: dict
    c_cal: float = 10.0
    n: int = 256
    family: tuple = CALIBRATION_FAMILY
    bmo_family: tuple = BMO_FAMILY

    def tau_for(self, p: float) -> float:
        """tau_p at a calibrated p; elsewhere the largest stored value (smaller, safer eps)."""
        return float(self.tau_p.get(_pkey(p), max(self.tau_p.values())))

    def eps_for(self, p: float) -> float:
        """eps_p at a calibrated p; elsewhere the smallest stored value."""
        return float(self.eps_p.get(_pkey(p), min(self.eps_p.values())))

    def as_dict(self) -> dict:
        return {
            "tau": self.tau, "tau_p": self.tau_p, "lambda_jn": self.lambda_jn, "c_jn": self.c_jn,
            "eps_p": self.eps_p, "eps_p_formula": self.eps_p_formula, "c_cal": self.c_cal,
            "n": self.n, "family": list(self.family), "bmo_family": list(self.bmo_family),
        }


@lru_cache(maxsize=4)
def _load(path: str) -> Calibration:
    try:
        d = json.loads(Path(path).read_text())
    except OSError as exc:
        raise SpecError(f"cannot read calibration file {path}: {exc}") from None
    return Calibration(
        float(d["tau"]), dict(d["tau_p"]), float(d["lambda_jn"]), float(d["c_jn"]), dict(d["eps_p"]),
        dict(d["eps_p_formula"]), float(d["c_cal"]), int(d["n"]), tuple(d["family"]), tuple(d["bmo_family"]),
    )


def load_calibration(path=None) -> Calibration:
    return _load(str(path or CALIBRATION_PATH))


def _implied_tau(w: GridFunction, side: Direction, constant: float, eps_grid=None) -> Optional[float]:
    kw = {} if eps_grid is None else {"eps_grid": eps_grid}
    e = rh_epsilon_max(w, side=side, **kw)
    if math.isinf(e) or e == 0:
        return None
    return 1.0 / (e * constant)


def calibrate(n: int = 256, path=None, *, c_jn: float = math.e, c_cal: float = 10.0,
              family: Sequence[str] = CALIBRATION_FAMILY, bmo_family: Sequence[str] = BMO_FAMILY,
              ps: Sequence[float] = CALIBRATED_P, write: bool = True) -> Calibration:
    """Measure the absolute constants on the power family and store them.

    * ``tau``: max over members and sides of ``1/(eps_max [w]_{A_inf^side})``.
    * ``tau_p``: the same with ``[w]_{A_p^side}``.
    * ``lambda_jn``: largest lambda with John-Nirenberg sup <= ``c_jn`` on ``bmo_family``.
    * ``eps_p``: largest eps on a log grid for which every perturbation ratio
      ``[e^{tb} w]_{A_p^+} / [w]_{A_p^+}``, |t| up to the threshold, stays <= ``c_cal``.
    * ``eps_p_formula``: ``min(p-1,1) lambda / (2 max(tau_p, tau_p'))`` for comparison.
    """
    grid = Grid(0.0, 1.0 / n, n)
    ws = [synthesize(s, grid) for s in family]
    bs = [synthesize(s, grid) for s in bmo_family]
    sides = (Direction.MINUS, Direction.PLUS)

    tau = 0.0
    for w in ws:
        for side in sides:
            t = _implied_tau(w, side, ainfty_constant(w, side).value)
            if t is not None:
                tau = max(tau, t)

    cls = {Direction.MINUS: WeightClass.AP_MINUS, Direction.PLUS: WeightClass.AP_PLUS}
    tau_p = {}
    for p in ps:
        best = 0.0
        for w in ws:
            for side in sides:
                t = _implied_tau(w, side, ap_constant(w, p, cls[side]).value)
                if t is not None:
                    best = max(best, t)
        tau_p[_pkey(p)] = best

    lo, hi = 0.0, 64.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if max(john_nirenberg_sup(b, mid) for b in bs) <= c_jn:
            lo = mid
        else:
            hi = mid
    lam = lo

    eps_p, eps_formula = {}, {}
    candidates = np.geomspace(1e-3, 10.0, 41)
    for p in ps:
        best = 0.0
        for e in candidates:
            ok = True
            for w in ws:
                for b in bs:
                    try:
                        r = _perturbation_sweep(w, b, p, float(e), (0.25, 0.5, 1.0))[0]
                    except RangeError:
                        r = math.inf
                    if not r <= c_cal:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
            best = float(e)
        eps_p[_pkey(p)] = best
        pp = conjugate_exponent(p)
        tt = max(tau_p[_pkey(p)], tau_p.get(_pkey(pp), max(tau_p.values())))
        eps_formula[_pkey(p)] = min(p - 1.0, 1.0) * lam / (2.0 * tt) if tt > 0 else math.inf

    cal = Calibration(tau, tau_p, lam, c_jn, eps_p, eps_formula, c_cal, n, tuple(family), tuple(bmo_family))
    if write:
        target = Path(path or CALIBRATION_PATH)
        target.write_text(json.dumps(cal.as_dict(), indent=2, sort_keys=True) + "\n")
        _load.cache_clear()
    return cal


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _as_function(x, grid: Optional[Grid]) -> GridFunction:
    if isinstance(x, GridFunction):
        return x
    if grid is None:
        raise ParameterError("a grid is required when functions are given as specs")
    return synthesize(x, grid)


def _label(x) -> str:
    if isinstance(x, GridFunction):
        return x.label or "<grid function>"
    return str(x)


def _refined(x, grid: Grid, factor: int) -> GridFunction:
    """Resynthesize a spec on a finer grid; an explicit grid function is split cell by cell."""
    if isinstance(x, GridFunction):
        vals = np.repeat(x.values, factor)
        return GridFunction(x.grid.refine(factor), vals, weight=x.weight, label=x.label)
    return synthesize(x, grid.refine(factor))


def class_constant(w: GridFunction, cls, p: Optional[float] = None, q: Optional[float] = None,
                   v: Optional[GridFunction] = None, mode=Mode.FULL) -> float:
    """Value of any weight-class constant by name (``ap+``, ``ainf-``, ``apq+``, ...)."""
    cls = WeightClass.parse(cls)
    if cls in (WeightClass.AP, WeightClass.AP_PLUS, WeightClass.AP_MINUS):
        return ap_constant(w, p, cls, mode).value
    if cls is WeightClass.A1_PLUS:
        return a1_constant(w, Direction.PLUS).value
    if cls is WeightClass.A1_MINUS:
        return a1_constant(w, Direction.MINUS).value
    if cls is WeightClass.AINF_PLUS:
        return ainfty_constant(w, Direction.PLUS).value
    if cls is WeightClass.AINF_MINUS:
        return ainfty_constant(w, Direction.MINUS).value
    if cls is WeightClass.APQ_PLUS:
        return apq_constant(w, p, q, "+", mode).value
    if cls is WeightClass.APQ_MINUS:
        return apq_constant(w, p, q, "-", mode).value
    if cls is WeightClass.JOINT_AP_PLUS:
        return joint_ap_plus_constant(v if v is not None else w, w, p, mode).value
    if cls is WeightClass.JOINT_AP:
        return joint_ap_constant(v if v is not None else w, w, p, mode).value
    if cls is WeightClass.BMO:
        return bmo_norm(w).value
    raise ParameterError(f"class {cls.value} needs extra parameters")


# ---------------------------------------------------------------------------
# lemma verifiers
# ---------------------------------------------------------------------------

def verify_gap_lemma(v, w, p: float = 2.0, t: int = 4, tol: float = 0.15, *, grid: Optional[Grid] = None,
                     levels: int = 3, lhs_kind: str = "two_sided") -> LemmaReport:
    """Pair constant against the gap constant K.

    ``lhs_kind='two_sided'`` compares the single-interval pair constant
    ``[v,w]_{A_p}``; ``'plus'`` compares the one-sided triple constant
    ``[v,w]_{A_p^+}``, which is what the weak-type argument behind the lemma
    controls.  The slack is also measured on ``levels - 1`` successive
    halvings of the grid step.
    """
    if lhs_kind not in ("two_sided", "plus"):
        raise ParameterError("lhs_kind must be 'two_sided' or 'plus'")
    G = GapParams(int(t), float(p))
    vf, wf = _as_function(v, grid), _as_function(w, grid)
    base = vf.grid

    def measure(vv, ww):
        K = gap_constant(vv, ww, G).value
        if lhs_kind == "two_sided":
            lhs = joint_ap_constant(vv, ww, G.p).value
        else:
            lhs = joint_ap_plus_constant(vv, ww, G.p).value
        return lhs, K

    lhs, K = measure(vf, wf)
    trajectory = [_slack(lhs, K)]
    for lev in range(1, int(levels)):
        f = 2 ** lev
        a, b = measure(_refined(v if not isinstance(v, GridFunction) else vf, base, f),
                       _refined(w if not isinstance(w, GridFunction) else wf, base, f))
        trajectory.append(_slack(a, b))
    monotone = all(trajectory[i + 1] <= trajectory[i] for i in range(len(trajectory) - 1))
    inputs = {"v": _label(v), "w": _label(w), "p": G.p, "t": G.t, "n": vf.n, "lhs_kind": lhs_kind}
    return _report("gap", inputs, lhs, K, tol,
                   notes="lhs: pair constant; rhs: gap constant K",
                   measured={"slack_trajectory": trajectory, "trajectory_nonincreasing": monotone})


def verify_rh_lemma(w: GridFunction, side=Direction.MINUS, p=math.inf, tol: float = 0.0, *,
                    tau: Optional[float] = None, eps_grid=None, calibration=None) -> LemmaReport:
    """Reverse Hoelder display at eps* = 1/(tau [w]) with [w] the A_inf (p = inf) or A_p constant of ``side``.

    lhs is the largest ratio (left side)/(right side) over all triples at
    eps*, rhs is 1.
    """
    side = Direction.parse(side)
    p = float(p)
    cal = calibration or (load_calibration() if tau is None else None)
    if math.isinf(p):
        C = ainfty_constant(w, side).value
        tau = cal.tau if tau is None else float(tau)
    else:
        C = ap_constant(w, p, WeightClass.AP_MINUS if side is Direction.MINUS else WeightClass.AP_PLUS).value
        tau = cal.tau_for(p) if tau is None else float(tau)
    if not tau > 0:
        raise ParameterError("tau must be positive")
    eps_star = 1.0 / (tau * C)
    ratio, arg = rh_ratio(w, eps_star, side)
    kw = {} if eps_grid is None else {"eps_grid": eps_grid}
    e_max = rh_epsilon_max(w, p, side, **kw)
    implied = 0.0 if math.isinf(e_max) else (math.inf if e_max == 0 else 1.0 / (e_max * C))
    inputs = {"w": _label(w), "side": side.value, "p": p, "tau": tau, "n": w.n}
    return _report("rh", inputs, ratio, 1.0, tol,
                   notes="lhs: max over triples of RH left/right at eps*; rhs: 1",
                   measured={"class_constant": C, "eps_star": eps_star, "eps_max": e_max,
                             "implied_tau": implied, "argmax": list(arg)})


def _tau(tau: Optional[float]) -> float:
    tau = load_calibration().tau if tau is None else float(tau)
    if not (tau > 0 and math.isfinite(tau)):
        raise ParameterError(f"tau must be positive and finite, got {tau}")
    return tau


def verify_s_shift(w: GridFunction, p: float, tol: float = 0.0, *, tau: Optional[float] = None) -> LemmaReport:
    """[w]_{A_s^+} <= 2^p [w]_{A_p^+} with s = (p+delta)/(1+delta), delta = 1/(2 tau [sigma]_{A_inf^-})."""
    p = float(p)
    tau = _tau(tau)
    sigma = dual_weight(w, p)
    A = ainfty_constant(sigma, Direction.MINUS).value
    delta = 1.0 / (2.0 * tau * A)
    s = (p + delta) / (1.0 + delta)
    lhs = ap_constant(w, s, WeightClass.AP_PLUS).value
    rhs = 2.0 ** p * ap_constant(w, p, WeightClass.AP_PLUS).value
    pp = conjugate_exponent(p)
    inputs = {"w": _label(w), "p": p, "tau": tau, "n": w.n}
    return _report("sshift", inputs, lhs, rhs, tol,
                   notes="lhs: [w]_{A_s^+}; rhs: 2^p [w]_{A_p^+}",
                   measured={"sigma_ainf_minus": A, "delta": delta, "s": s, "s_below_p": bool(s < p),
                             "r_prime": p / (p - s), "r_prime_bound": (1.0 + 1.0 / delta) * pp})


def verify_joint_rh(v: GridFunction, w: GridFunction, p: float, tol: float = 0.0, *,
                    tau: Optional[float] = None) -> LemmaReport:
    """[v,w]_{A_{p/r}^+} <= 6^{p-1} [v,w]_{A_p^+} with (p-1)/(p/r-1) = r_sigma = 1 + 1/(2 tau [sigma]_{A_inf^-})."""
    p = float(p)
    tau = _tau(tau)
    sigma = dual_weight(w, p)
    A = ainfty_constant(sigma, Direction.MINUS).value
    r_sigma = 1.0 + 1.0 / (2.0 * tau * A)
    p_over_r = 1.0 + (p - 1.0) / r_sigma
    if not p_over_r > 1.0:
        raise ParameterError(f"p/r = {p_over_r} is not above 1")
    lhs = joint_ap_plus_constant(v, w, p_over_r).value
    rhs = 6.0 ** (p - 1.0) * joint_ap_plus_constant(v, w, p).value
    inputs = {"v": _label(v), "w": _label(w), "p": p, "tau": tau, "n": w.n}
    return _report("jointrh", inputs, lhs, rhs, tol,
                   notes="lhs: [v,w]_{A_{p/r}^+}; rhs: 6^(p-1) [v,w]_{A_p^+}",
                   measured={"sigma_ainf_minus": A, "r_sigma": r_sigma, "p_over_r": p_over_r, "r": p / p_over_r})


def perturbation_ratio(w: GridFunction, b: GridFunction, p: float, t: float) -> float:
    """[e^{tb} w]_{A_p^+} / [w]_{A_p^+}; exactly 1 at t = 0."""
    if t == 0:
        return 1.0
    if b.grid != w.grid:
        raise DomainError("grid mismatch")
    bv = b.values
    centre = 0.5 * (float(bv.max()) + float(bv.min()))   # constants cancel in the A_p^+ expression
    shifted = bv - centre
    if abs(t) * float(np.max(np.abs(shifted))) > EXP_GUARD:
        raise RangeError(f"|t| * osc(b)/2 = {abs(t) * float(np.max(np.abs(shifted))):.1f} exceeds {EXP_GUARD}")
    ew = w.with_values(np.exp(t * shifted) * w.values, weight=True)
    return ap_constant(ew, p, WeightClass.AP_PLUS).value / ap_constant(w, p, WeightClass.AP_PLUS).value


def _perturbation_sweep(w, b, p, eps_p, fractions):
    nb = bmo_norm(b).value
    if nb <= 0:
        raise DomainError("||b||_BMO = 0")
    A = ap_constant(w, p, WeightClass.AP_PLUS).value
    threshold = eps_p / (A ** max(1.0, 1.0 / (p - 1.0)) * nb)
    ts = [s * f * threshold for f in fractions for s in (-1.0, 1.0)]
    ratios = [perturbation_ratio(w, b, p, t) for t in ts]
    return max(ratios), ts, ratios, threshold, A, nb


def verify_perturbation(w: GridFunction, b: GridFunction, p: float = 2.0, t_count: int = 3, tol: float = 0.0, *,
                        eps_p: Optional[float] = None, c_cal: Optional[float] = None) -> LemmaReport:
    """max over t of [e^{tb} w]_{A_p^+}/[w]_{A_p^+} against the ceiling ``c_cal``.

    t runs over +-threshold * {2^-(t_count-1), ..., 1/2, 1} with
    threshold = eps_p / ([w]_{A_p^+}^max(1, 1/(p-1)) ||b||_BMO).
    """
    p = float(p)
    if int(t_count) != t_count or t_count < 1:
        raise ParameterError("t_count must be a positive integer")
    cal = load_calibration() if (eps_p is None or c_cal is None) else None
    eps_p = cal.eps_for(p) if eps_p is None else float(eps_p)
    c_cal = cal.c_cal if c_cal is None else float(c_cal)
    fractions = tuple(2.0 ** -(t_count - 1 - i) for i in range(int(t_count)))
    worst, ts, ratios, threshold, A, nb = _perturbation_sweep(w, b, p, eps_p, fractions)
    inputs = {"w": _label(w), "b": _label(b), "p": p, "t_count": int(t_count), "eps_p": eps_p, "n": w.n}
    return _report("perturb", inputs, worst, c_cal, tol,
                   notes="lhs: max_t [e^{tb}w]_{A_p^+}/[w]_{A_p^+}; rhs: calibrated ceiling",
                   measured={"threshold": threshold, "t": ts, "ratios": ratios, "ap_plus": A, "bmo": nb})


def verify_conjugation_consistency(T: OperatorHandle, b: GridFunction, f: GridFunction, k: int = 1,
                                   P: Optional[ContourParams] = None, tol: float = 1e-5,
                                   node_counts: Sequence[int] = (8, 16, 32, 64)) -> LemmaReport:
    """Direct iterated commutator against the contour-integral representation.

    lhs = ||direct - contour||_inf, rhs = tol * ||direct||_inf.  The default
    radius puts radius * osc(b) near 8, where the trapezoid error falls from
    visible at 16 nodes to rounding level at 64.
    """
    k = int(k)
    if P is None:
        osc = float(b.values.max() - b.values.min())
        P = ContourParams(8.0 / osc if osc > 0 else 1.0, 64, k)
    elif P.order != k:
        P = ContourParams(P.radius, P.nodes, k)
    direct = commutator_iterated(T, b, f, k)
    dn = direct.sup_norm()
    errors = {}
    for m in sorted(set(int(x) for x in node_counts) | {P.nodes}):
        c = cauchy_commutator(T, b, f, ContourParams(P.radius, m, k))
        err = float(np.max(np.abs(c.values - direct.values)))
        errors[str(m)] = err / dn if dn > 0 else err
    contour, residue = cauchy_commutator(T, b, f, P, return_residue=True)
    lhs = float(np.max(np.abs(contour.values - direct.values)))
    # rounding level of the trapezoid sum: nodes * eps * largest summand
    terms = max(conjugate_operator(T, b, P.radius * complex(math.cos(th), math.sin(th)), f).sup_norm()
                for th in 2.0 * math.pi * np.arange(P.nodes) / P.nodes)
    floor = P.nodes * float(np.finfo(float).eps) * math.factorial(k) * terms / P.radius ** k
    inputs = {"T": T.name, "b": _label(b), "f": _label(f), "k": k, "radius": P.radius, "nodes": P.nodes,
              "n": f.n}
    return _report("conj", inputs, lhs, max(tol * dn, floor), 0.0,
                   notes="lhs: sup |direct - contour|; rhs: max(tol * sup |direct|, rounding floor)",
                   measured={"relative_error_by_nodes": errors, "imag_residue": residue, "direct_sup": dn,
                             "rounding_floor": floor})


# ---------------------------------------------------------------------------
# norm estimation and sweeps
# ---------------------------------------------------------------------------

def _interval_rows(n: int, start: int, stop: int):
    """Interval (lo, hi) pairs with flat index in [start, stop), ordered by lo then hi."""
    lo, hi = np.triu_indices(n + 1, k=1)
    return lo[start:stop], hi[start:stop]


def _batch_ratio(T: OperatorHandle, w: GridFunction, F: np.ndarray, p, q_in, q_out) -> np.ndarray:
    den = lorentz_norm_rows(F, w, p, q_in)
    num = lorentz_norm_rows(T.apply_rows(w.grid, F), w, p, q_out)
    out = np.full(F.shape[0], -np.inf)
    ok = den > 0
    out[ok] = num[ok] / den[ok]
    return out


def operator_norm_lower_bound(T: OperatorHandle, w: GridFunction, p: float, q_in: float, q_out: float,
                              testset: Iterable[str] = ("indicators", "sigma", "random"), *, seed: int = 0,
                              n_random: int = 64, chunk: int = 4096, detail: bool = False):
    """max over test functions f of ||T f||_{L^{p,q_out}(w)} / ||f||_{L^{p,q_in}(w)}.

    Test functions: indicators of every grid interval, ``sigma chi_I`` for
    every grid interval with ``sigma = w^(1-p')``, and ``n_random`` fixed-seed
    Gaussian functions.  Zero-norm inputs are skipped.
    """
    p = float(p)
    n = w.n
    testset = tuple(testset)
    unknown = set(testset) - {"indicators", "sigma", "random"}
    if unknown:
        raise ParameterError(f"unknown test families {sorted(unknown)}")
    best, where = -math.inf, None
    total = n * (n + 1) // 2
    cols = np.arange(n)
    sigma = dual_weight(w, p).values if "sigma" in testset and p > 1 else None
    for family in testset:
        if family == "random":
            F = np.random.default_rng(seed).standard_normal((int(n_random), n))
            r = _batch_ratio(T, w, F, p, q_in, q_out)
            i = int(np.argmax(r))
            if r[i] > best:
                best, where = float(r[i]), ("random", i)
            continue
        if family == "sigma" and sigma is None:
            continue
        for start in range(0, total, chunk):
            lo, hi = _interval_rows(n, start, min(total, start + chunk))
            F = ((cols >= lo[:, None]) & (cols < hi[:, None])).astype(float)
            if family == "sigma":
                F *= sigma
            r = _batch_ratio(T, w, F, p, q_in, q_out)
            i = int(np.argmax(r))
            if r[i] > best:
                best, where = float(r[i]), (family, int(lo[i]), int(hi[i]))
    if detail:
        return best, where
    return best


_FAMILY_RE = re.compile(r"\{([^{}]*)\}")


def parse_family(text: str):
    """Expand ``power:delta={0.25,0.5,1},x0=1`` into ``[(0.25, spec), (0.5, spec), (1.0, spec)]``."""
    m = _FAMILY_RE.search(text)
    if not m:
        raise SpecError(f"family {text!r}: expected one parameter given as {{v1,v2,...}}")
    if _FAMILY_RE.search(text, m.end()):
        raise SpecError(f"family {text!r}: only one parameter may vary (second list at column {m.end()})")
    out = []
    for item in m.group(1).split(","):
        item = item.strip()
        try:
            val = float(item)
        except ValueError:
            raise SpecError(f"family {text!r}: {item!r} at column {m.start(1)} is not a number") from None
        out.append((val, parse_spec(text[:m.start()] + item + text[m.end():])))
    return out


def _theory_exponent(theorem: str, p: float, params: dict) -> float:
    if theorem == "identity":
        return 0.0
    if theorem == "weakM+":
        return 1.0 / p
    if theorem == "strongM+":
        return 1.0 / (p - 1.0)
    if theorem == "lorentzM+":
        return 1.0 / p
    if theorem == "martingale":
        return 1.0
    if "exponent" in params:
        return float(params["exponent"])
    raise ParameterError(f"no exponent known for {theorem!r}; pass exponent=")


def _default_theorem(T: OperatorHandle, p, q_in, q_out) -> str:
    if T.name == "identity":
        return "identity"
    if T.name.startswith("max"):
        if math.isinf(q_out) and q_in == p:
            return "weakM+"
        if q_in == q_out == p:
            return "strongM+"
        return "lorentzM+"
    if T.name.startswith("haar"):
        return "martingale"
    return "custom"


def norm_sweep(T: OperatorHandle, family, p: float, q_in: float, q_out: float, constant_class="ap+", *,
               grid: Optional[Grid] = None, theorem: Optional[str] = None, margin: float = 0.1,
               seed: int = 0, testset=("indicators", "sigma", "random"), params: Optional[dict] = None,
               calibrate_at: int = 0, executor=None) -> SweepResult:
    """Fit log(norm lower bound) against log(class constant) along a weight family.

    ``family`` is a family string (see :func:`parse_family`) or a list of
    ``(param, weight)`` pairs.  Passes when the slope is at most the
    theoretical exponent plus ``margin``.  The ``predicted`` column holds
    the theorem's right-hand side scaled so that it matches the measured
    point ``calibrate_at``; ``bound_ok`` says whether every point is below it.
    """
    p = float(p)
    q_in, q_out = float(q_in), float(q_out)
    params = dict(params or {})
    theorem = theorem or _default_theorem(T, p, q_in, q_out)
    if isinstance(family, str):
        label = family
        members = parse_family(family)
    else:
        label = params.get("family_label", "custom")
        members = list(family)
    if len(members) < 4:
        raise RegressionError(f"need at least 4 family members, got {len(members)}")
    ws = [(prm, _as_function(m, grid)) for prm, m in members]

    def evaluate(item):
        prm, w = item
        c = class_constant(w, constant_class, p=p, q=params.get("q"))
        nlb = operator_norm_lower_bound(T, w, p, q_in, q_out, testset, seed=seed)
        extra = {}
        if theorem == "lorentzM+":
            extra["sigma_ainf"] = ainfty_constant(dual_weight(w, p), Direction.MINUS).value
        return c, nlb, extra

    results = list(executor.map(evaluate, ws)) if executor is not None else [evaluate(x) for x in ws]
    consts = np.array([r[0] for r in results])
    norms = np.array([r[1] for r in results])
    if np.any(np.diff(consts) <= 0):
        raise RegressionError(f"class constants must increase strictly along the family: {consts.tolist()}")
    if not np.all(norms > 0):
        raise RegressionError("zero norm lower bound in the family")
    X, Y = np.log(consts), np.log(norms)
    slope, intercept = np.polyfit(X, Y, 1)
    resid = float(np.max(np.abs(Y - (slope * X + intercept))))
    expo = _theory_exponent(theorem, p, params)
    # theorem right-hand sides, calibrated at one family point
    pred_raw = []
    for (c, nlb, extra) in results:
        if theorem == "lorentzM+":
            pred_raw.append(predicted_bound("lorentzM+", w=c, sigma_ainf=extra["sigma_ainf"], p=p, q=q_out,
                                            A=params.get("A", 1.0)))
        elif theorem in ("weakM+", "strongM+"):
            pred_raw.append(predicted_bound(theorem, w=c, p=p))
        else:
            pred_raw.append(c ** expo)
    pred_raw = np.array(pred_raw)
    C = float(norms[calibrate_at] / pred_raw[calibrate_at])
    predicted = (C * pred_raw).tolist()
    bound_ok = bool(np.all(norms <= C * pred_raw * (1.0 + 1e-12)))
    return SweepResult(
        family=label, params=[float(prm) for prm, _ in members],
        points=[(float(c), float(nlb)) for c, nlb in zip(consts, norms)],
        slope=float(slope), intercept=float(intercept), max_residual=resid,
        exponent=float(expo), margin=float(margin), passed=bool(slope <= expo + margin),
        predicted=predicted, implied_constant=C, bound_ok=bound_ok, theorem=theorem,
    )


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------

def adnop_bound(P: AdnopParams) -> float:
    """Bound for a positive sublinear T with |T1| <= A on L^{p,q}(w).

    ``(1+A) (r')^(1/p) N^(1/r)`` when p <= q, and
    ``(1+A) (4 r'/q)^(1/q) N^(1/r)`` when q <= p.
    """
    rp = P.r / (P.r - 1.0)
    if P.p <= P.q:
        return (1.0 + P.A) * rp ** (1.0 / P.p) * P.N ** (1.0 / P.r)
    return (1.0 + P.A) * (4.0 * rp / P.q) ** (1.0 / P.q) * P.N ** (1.0 / P.r)


def extrapolation_exponent(gamma: float, p0: float, q0: float, p: float, q: float) -> float:
    """gamma * max(1, (q0/p0') (p'/q)), valid when 1/p - 1/q = 1/p0 - 1/q0."""
    if not (1 < p0 <= q0 < math.inf and 1 < p <= q < math.inf):
        raise ParameterError("need 1 < p0 <= q0 < inf and 1 < p <= q < inf")
    if abs((1 / p - 1 / q) - (1 / p0 - 1 / q0)) > 1e-12:
        raise ParameterError(f"1/p - 1/q = {1 / p - 1 / q:.6g} differs from 1/p0 - 1/q0 = {1 / p0 - 1 / q0:.6g}")
    return float(gamma) * max(1.0, (q0 / conjugate_exponent(p0)) * (conjugate_exponent(p) / q))


def _need(params: dict, *names):
    missing = [k for k in names if k not in params]
    if missing:
        raise ParameterError(f"missing parameters: {', '.join(missing)}")
    return [float(params[k]) for k in names]


def predicted_bound(theorem: str, C: float = 1.0, **params) -> float:
    """Right-hand side of a norm bound, times the implied constant ``C``.

    ========================  ==============================================  =====================
    theorem                   expression                                      parameters
    ========================  ==============================================  =====================
    ``weakM+``                ``w^(1/p)``                                     w, p
    ``strongM+``              ``w^(1/(p-1))``                                 w, p
    ``fracintWeak``           ``w^(1-alpha)``                                 w, alpha
    ``fracintStrong``         ``w^((1-alpha) max(1, p'/q))``                  w, alpha, p, q
    ``weak11T+``              ``w log(e + w)``                                w
    ``conjugation``           ``(kappa w)^gamma w^(k max(1, 1/(p0-1)))``       w, k, p0, gamma [kappa]
    ``fracCommutator``        ``w^(((k+1)-alpha) max(1, p'/q))``              w, k, alpha, p, q
    ``martingaleCommutator``  ``w^((k+1) max(1, 1/(p-1)))``                   w, k, p
    ``hormanderCommutator``   ``w^(k max(1, r/(p-r)))``                       w, k, p, r
    ``lorentzM+``             ``(1+A) s^(1/p or 1/q) w^(1/p)``                w, sigma_ainf, p, q [A]
    ========================  ==============================================  =====================

    ``fracintStrong`` and ``fracCommutator`` also accept ``pp_over_q``
    (p'/q) in place of p and q.
    """
    P = dict(params)

    def ppq():
        if "pp_over_q" in P:
            return float(P["pp_over_q"])
        p, q = _need(P, "p", "q")
        return conjugate_exponent(p) / q

    if theorem == "weakM+":
        w, p = _need(P, "w", "p")
        val = w ** (1.0 / p)
    elif theorem == "strongM+":
        w, p = _need(P, "w", "p")
        val = w ** (1.0 / (p - 1.0))
    elif theorem == "fracintWeak":
        w, a = _need(P, "w", "alpha")
        val = w ** (1.0 - a)
    elif theorem == "fracintStrong":
        w, a = _need(P, "w", "alpha")
        val = w ** ((1.0 - a) * max(1.0, ppq()))
    elif theorem == "weak11T+":
        (w,) = _need(P, "w")
        val = w * math.log(math.e + w)
    elif theorem == "conjugation":
        w, k, p0, g = _need(P, "w", "k", "p0", "gamma")
        kappa = float(P.get("kappa", 1.0))
        val = (kappa * w) ** g * w ** (k * max(1.0, 1.0 / (p0 - 1.0)))
    elif theorem == "fracCommutator":
        w, k, a = _need(P, "w", "k", "alpha")
        val = w ** (((k + 1.0) - a) * max(1.0, ppq()))
    elif theorem == "martingaleCommutator":
        w, k, p = _need(P, "w", "k", "p")
        val = w ** ((k + 1.0) * max(1.0, 1.0 / (p - 1.0)))
    elif theorem == "hormanderCommutator":
        w, k, p, r = _need(P, "w", "k", "p", "r")
        if not 0 < r < p:
            raise ParameterError("need 0 < r < p")
        val = w ** (k * max(1.0, r / (p - r)))
    elif theorem == "lorentzM+":
        w, s, p, q = _need(P, "w", "sigma_ainf", "p", "q")
        A = float(P.get("A", 1.0))
        val = (1.0 + A) * s ** (1.0 / p if p <= q else 1.0 / q) * w ** (1.0 / p)
    else:
        raise ParameterError(f"unknown theorem id {theorem!r}")
    return float(C) * float(val)
