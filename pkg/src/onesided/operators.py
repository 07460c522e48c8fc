"""Operators on grid functions.

Evaluation convention: the plus-direction maximal operators are evaluated at
the left edge of each cell with the cell itself included in every window, so
``M^+ f >= |f|`` cell by cell.  Minus-direction operators are the mirror
image (windows end at the right edge of the cell).

Linear operators accept complex input by acting on real and imaginary parts
separately; this is what the conjugated family ``e^{bz} T(e^{-bz} f)`` needs.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from ._backend import kernels as _k
from .czkernels import get_kernel
from .errors import ConsistencyError, DomainError, ParameterError, RangeError, SpecError
from .grid import GridFunction
from .haar import HaarSystem, martingale_transform

__all__ = [
    "Direction",
    "ContourParams",
    "OperatorHandle",
    "maximal",
    "fractional_maximal",
    "weighted_maximal",
    "fractional_integral_plus",
    "singular_onesided",
    "commutator_iterated",
    "commutator_expansion",
    "conjugate_operator",
    "cauchy_commutator",
    "parse_operator",
    "IDENTITY",
]

EXP_GUARD = 700.0


class Direction(enum.Enum):
    PLUS = "+"
    MINUS = "-"

    @property
    def opposite(self) -> "Direction":
        return Direction.MINUS if self is Direction.PLUS else Direction.PLUS

    @classmethod
    def parse(cls, d) -> "Direction":
        if isinstance(d, Direction):
            return d
        key = str(d).strip().lower()
        if key in ("+", "plus", "forward", "p"):
            return cls.PLUS
        if key in ("-", "minus", "backward", "m"):
            return cls.MINUS
        raise ParameterError(f"unknown direction {d!r}")


def _real_abs(f: GridFunction, what: str) -> np.ndarray:
    if f.is_complex:
        raise DomainError(f"{what} is defined for real-valued input only")
    return np.ascontiguousarray(np.abs(f.values))


def _directed(values: np.ndarray, direction: Direction, plus_kernel) -> np.ndarray:
    if direction is Direction.PLUS:
        return plus_kernel(values)
    return plus_kernel(np.ascontiguousarray(values[::-1]))[::-1]


def maximal(f: GridFunction, direction=Direction.PLUS, method: str = "hull") -> GridFunction:
    """One-sided Hardy-Littlewood maximal function M^+ f or M^- f.

    ``method="hull"`` sweeps the upper convex hull of the prefix sums (O(n));
    ``method="naive"`` scans every window (O(n^2)) and serves as the oracle.
    """
    direction = Direction.parse(direction)
    a = _real_abs(f, "maximal")
    if method == "hull":
        kern = _k.maximal_plus_hull
    elif method == "naive":
        kern = _k.maximal_plus_naive
    else:
        raise ParameterError(f"unknown method {method!r}")
    return f.with_values(_directed(a, direction, kern))


def maximal_rows(F: np.ndarray, direction=Direction.PLUS) -> np.ndarray:
    """Hull maximal function applied to every row of a 2-D array."""
    direction = Direction.parse(direction)
    A = np.ascontiguousarray(np.abs(F), dtype=float)
    if direction is Direction.PLUS:
        return _k.maximal_plus_hull_rows(A)
    return _k.maximal_plus_hull_rows(np.ascontiguousarray(A[:, ::-1]))[:, ::-1]


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0 < alpha < 1:
        raise ParameterError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def fractional_maximal(f: GridFunction, direction=Direction.PLUS, alpha: float = 0.5) -> GridFunction:
    """sup over one-sided windows of |window|^(alpha-1) * integral of |f|."""
    direction = Direction.parse(direction)
    alpha = _check_alpha(alpha)
    a = _real_abs(f, "fractional_maximal")
    h = f.grid.step
    return f.with_values(_directed(a, direction, lambda x: _k.fractional_maximal_plus(x, h, alpha)))


def weighted_maximal(f: GridFunction, sigma: GridFunction, direction=None) -> GridFunction:
    """Maximal function with respect to the measure sigma dx.

    ``direction=None`` takes every grid interval containing the cell
    (two-sided); ``PLUS``/``MINUS`` restrict to windows starting/ending at the
    cell.  The one-sided versions have weak type (1,1) with constant 1, the
    two-sided one with constant 2.
    """
    if sigma.grid != f.grid:
        raise DomainError("grid mismatch")
    if not sigma.weight:
        sigma = sigma.as_weight()
    g = np.ascontiguousarray(_real_abs(f, "weighted_maximal") * sigma.values)
    s = np.ascontiguousarray(sigma.values)
    if direction is None:
        return f.with_values(_k.weighted_maximal(g, s, True))
    direction = Direction.parse(direction)
    if direction is Direction.PLUS:
        return f.with_values(_k.weighted_maximal(g, s, False))
    out = _k.weighted_maximal(np.ascontiguousarray(g[::-1]), np.ascontiguousarray(s[::-1]), False)
    return f.with_values(out[::-1])


def _linear_split(f: GridFunction, real_op: Callable[[np.ndarray], np.ndarray]) -> GridFunction:
    if f.is_complex:
        re = real_op(np.ascontiguousarray(f.values.real))
        im = real_op(np.ascontiguousarray(f.values.imag))
        return f.with_values(re + 1j * im)
    return f.with_values(real_op(np.ascontiguousarray(f.values)))


def fractional_integral_plus(f: GridFunction, alpha: float = 0.5) -> GridFunction:
    """I_alpha^+ f(x_i) = integral over y > x_i of f(y) (y - x_i)^(alpha-1), at left edges.

    Each cell is integrated exactly: a cell [u, v) with value c contributes
    c ((v - x_i)^alpha - (u - x_i)^alpha) / alpha.
    """
    alpha = _check_alpha(alpha)
    h = f.grid.step
    m = np.arange(f.n, dtype=float)
    table = h ** alpha * (np.power(m + 1, alpha) - np.power(m, alpha)) / alpha
    return _linear_split(f, lambda v: _k.forward_correlate(v, table, 0))


def singular_onesided(f: GridFunction, K="sinlog") -> GridFunction:
    """Truncated one-sided singular integral at scale one cell.

    Output at the left edge x_i is sum_{j > i} f_j * integral over cell j of
    K(x_i - y) dy; the cell containing x_i is dropped.
    """
    K = get_kernel(K)
    table = K.cell_table(f.grid.step, f.n)
    return _linear_split(f, lambda v: _k.forward_correlate(v, table, 1))


# ---------------------------------------------------------------------------
# operator handles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OperatorHandle:
    """A named operator on grid functions.

    ``rows`` optionally maps a 2-D array of cell values (one function per
    row) to the outputs; it is used for batched norm estimation.
    """

    name: str
    fn: Callable[[GridFunction], GridFunction]
    linear: bool
    rows: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, f: GridFunction) -> GridFunction:
        return self.fn(f)

    def apply_rows(self, grid, F: np.ndarray) -> np.ndarray:
        if self.rows is not None:
            return self.rows(F)
        return np.array([self.fn(GridFunction(grid, row)).values for row in F])


IDENTITY = OperatorHandle("identity", lambda f: f.with_values(f.values.copy()), True, lambda F: np.array(F, dtype=float))


def _kv(body: str) -> dict:
    out = {}
    for item in filter(None, (s.strip() for s in body.split(","))):
        if "=" in item:
            k, v = item.split("=", 1)
            out[k.strip()] = v.strip()
        else:
            out[item] = None
    return out


def parse_operator(text: str, seed: int = 0) -> OperatorHandle:
    """Build an operator from ``maxplus``, ``maxminus``, ``fracmax:+,alpha=0.5``,
    ``fracint:alpha=0.5``, ``singular:kernel=sinlog``, ``haar:L=8,signs=<+-...|seed>[,lo=0]``
    or ``identity``."""
    text = text.strip()
    head, _, body = text.partition(":")
    kv = _kv(body)
    try:
        if head == "identity":
            return IDENTITY
        if head == "maxplus":
            return OperatorHandle(text, lambda f: maximal(f, Direction.PLUS), False,
                                  lambda F: maximal_rows(F, Direction.PLUS))
        if head == "maxminus":
            return OperatorHandle(text, lambda f: maximal(f, Direction.MINUS), False,
                                  lambda F: maximal_rows(F, Direction.MINUS))
        if head == "fracmax":
            d = Direction.MINUS if "-" in kv else Direction.PLUS
            alpha = _check_alpha(float(kv.get("alpha", 0.5)))
            return OperatorHandle(text, lambda f: fractional_maximal(f, d, alpha), False)
        if head == "fracint":
            alpha = _check_alpha(float(kv.get("alpha", 0.5)))
            return OperatorHandle(text, lambda f: fractional_integral_plus(f, alpha), True)
        if head == "singular":
            K = get_kernel(kv.get("kernel", "sinlog"))
            return OperatorHandle(text, lambda f: singular_onesided(f, K), True)
        if head == "haar":
            depth = int(kv["L"])
            lo = int(kv.get("lo", 0))
            signs = kv.get("signs", "0")
            if signs and set(signs) <= {"+", "-"}:
                H = HaarSystem.from_string(lo, depth, signs)
            else:
                H = HaarSystem.random(lo, depth, int(signs) if signs else seed)
            return OperatorHandle(text, lambda f: martingale_transform(f, H), True)
    except (KeyError, ValueError) as exc:
        if isinstance(exc, (SpecError, ParameterError)):
            raise
        raise SpecError(f"bad operator spec {text!r}: {exc}") from None
    raise SpecError(f"unknown operator {text!r}")


# ---------------------------------------------------------------------------
# commutators and the conjugation method
# ---------------------------------------------------------------------------

def _check_b(b: GridFunction, f: GridFunction):
    if b.grid != f.grid:
        raise DomainError("grid mismatch")
    if b.is_complex:
        raise DomainError("the symbol b must be real-valued")


def _rec(T, b, f, k):
    if k == 0:
        return T(f)
    return b * _rec(T, b, f, k - 1) - _rec(T, b, b * f, k - 1)


def commutator_expansion(T: OperatorHandle, b: GridFunction, f: GridFunction, k: int):
    """sum_j binom(k, j) (-1)^j b^(k-j) T(b^j f); returns (value, scale).

    ``scale`` is the sum of the sup norms of the individual terms, the
    natural yardstick for cancellation error.
    """
    _check_b(b, f)
    total = None
    scale = 0.0
    for j in range(k + 1):
        term = math.comb(k, j) * (-1) ** j * (b.values ** (k - j)) * T(f * b.values ** j).values
        scale += float(np.max(np.abs(term)))
        total = term if total is None else total + term
    return f.with_values(total), scale


def commutator_iterated(T: OperatorHandle, b: GridFunction, f: GridFunction, k: int = 1,
                        check: bool = True, rtol: float = 1e-9) -> GridFunction:
    """T_b^k f with T_b^1 f = b T f - T(b f) and T_b^k = [b, T_b^(k-1)].

    With ``check`` the binomial expansion is evaluated as well and a
    :class:`ConsistencyError` is raised if the two disagree beyond ``rtol``
    relative to the size of the expansion terms.
    """
    if int(k) != k or k < 1:
        raise ParameterError(f"commutator order must be an integer >= 1, got {k}")
    _check_b(b, f)
    out = _rec(T, b, f, int(k))
    if check:
        alt, scale = commutator_expansion(T, b, f, int(k))
        err = float(np.max(np.abs(out.values - alt.values)))
        if err > rtol * max(scale, np.finfo(float).tiny):
            raise ConsistencyError(f"recursion and expansion differ by {err:.3e} (scale {scale:.3e})")
    return out


def _guard(b: GridFunction, re_z: float):
    if abs(re_z) * float(np.max(np.abs(b.values))) > EXP_GUARD:
        raise RangeError(f"|Re z| * max|b| = {abs(re_z) * b.sup_norm():.1f} exceeds {EXP_GUARD}")


def conjugate_operator(T: OperatorHandle, b: GridFunction, z: complex, f: GridFunction) -> GridFunction:
    """T_z f = e^{b z} T(e^{-b z} f)."""
    _check_b(b, f)
    if z == 0:
        return T(f)
    z = complex(z)
    _guard(b, z.real)
    inner = T(f * np.exp(-b.values * z))
    return f.with_values(np.exp(b.values * z) * inner.values)


@dataclass(frozen=True)
class ContourParams:
    radius: float
    nodes: int = 64
    order: int = 1

    def __post_init__(self):
        if not (self.radius > 0 and math.isfinite(self.radius)):
            raise ParameterError(f"contour radius must be positive, got {self.radius}")
        if int(self.nodes) != self.nodes or self.nodes < 8 or self.nodes % 2:
            raise ParameterError(f"node count must be an even integer >= 8, got {self.nodes}")
        if int(self.order) != self.order or self.order < 1:
            raise ParameterError(f"order must be an integer >= 1, got {self.order}")


def cauchy_commutator(T: OperatorHandle, b: GridFunction, f: GridFunction, P: ContourParams,
                      return_residue: bool = False):
    """(k!/(2 pi i)) contour integral over |z| = radius of T_z f / z^(k+1).

    Trapezoid rule with ``P.nodes`` equispaced nodes; the real part is
    returned.  With ``return_residue`` the max |imaginary part| comes back
    as a second value.
    """
    _check_b(b, f)
    _guard(b, P.radius)
    k = P.order
    acc = np.zeros(f.n, dtype=complex)
    for m in range(P.nodes):
        theta = 2.0 * math.pi * m / P.nodes
        z = P.radius * complex(math.cos(theta), math.sin(theta))
        acc += conjugate_operator(T, b, z, f).values * z ** (-k)
    acc *= math.factorial(k) / P.nodes
    out = f.with_values(acc.real)
    if return_residue:
        return out, float(np.max(np.abs(acc.imag)))
    return out
