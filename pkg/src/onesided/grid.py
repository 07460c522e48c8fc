"""Uniform grids and piecewise-constant functions.

Every object in the package lives on a :class:`Grid`: ``cells`` cells of
width ``step`` starting at ``origin``.  A :class:`GridFunction` stores one
value per cell, and that value is the exact average of the underlying density
over the cell, so integrals over grid-aligned intervals are exact sums.

The small mini-languages used by the CLI and by experiment configs are also
parsed here::

    grid:origin=0,step=0.00390625,cells=256
    power:delta=0.5,x0=0
    exp:lambda=1
    indicator:a=0,b=1
    linear
    logosc:x0=0,clip=8
    randlog:seed=3,amp=1,modes=4
    const:c=2
    file:/path/to/values.txt
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import DomainError, ParameterError, SpecError

__all__ = [
    "Grid",
    "GridFunction",
    "IntervalIndex",
    "WeightSpec",
    "integrate",
    "average",
    "synthesize",
    "parse_grid",
    "parse_spec",
    "format_grid",
]


@dataclass(frozen=True)
class Grid:
    origin: float
    step: float
    cells: int

    def __post_init__(self):
        if not (math.isfinite(self.step) and self.step > 0):
            raise DomainError(f"grid step must be positive and finite, got {self.step}")
        if int(self.cells) != self.cells or self.cells < 2:
            raise DomainError(f"grid needs at least 2 cells, got {self.cells}")
        if not math.isfinite(self.origin):
            raise DomainError("grid origin must be finite")
        object.__setattr__(self, "origin", float(self.origin))
        object.__setattr__(self, "step", float(self.step))
        object.__setattr__(self, "cells", int(self.cells))

    @classmethod
    def from_bounds(cls, lo: float, hi: float, cells: int) -> "Grid":
        return cls(lo, (hi - lo) / cells, cells)

    def edge(self, i: int) -> float:
        if not 0 <= i <= self.cells:
            raise DomainError(f"edge index {i} outside 0..{self.cells}")
        return self.origin + i * self.step

    @property
    def edges(self) -> np.ndarray:
        return self.origin + self.step * np.arange(self.cells + 1)

    @property
    def end(self) -> float:
        return self.origin + self.cells * self.step

    @property
    def length(self) -> float:
        return self.cells * self.step

    def edge_index(self, x: float, tol: float = 1e-9) -> int:
        """Index of the edge located at ``x``; raises if ``x`` is not an edge."""
        k = round((x - self.origin) / self.step)
        if not 0 <= k <= self.cells or abs(self.origin + k * self.step - x) > tol * max(1.0, abs(x)):
            raise DomainError(f"{x} is not an edge of {self}")
        return int(k)

    def refine(self, factor: int = 2) -> "Grid":
        return Grid(self.origin, self.step / factor, self.cells * factor)

    def full(self) -> "IntervalIndex":
        return IntervalIndex(0, self.cells)


@dataclass(frozen=True)
class IntervalIndex:
    """The open interval between edges ``lo`` and ``hi``."""

    lo: int
    hi: int

    def check(self, grid: Grid) -> None:
        if not (0 <= self.lo < self.hi <= grid.cells):
            raise DomainError(f"invalid interval ({self.lo}, {self.hi}) on a grid of {grid.cells} cells")

    @property
    def ncells(self) -> int:
        return self.hi - self.lo


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-constant function; ``values[k]`` lives on ``[x_k, x_{k+1})``.

    Instances are immutable: ``values`` is a read-only array.  Pass
    ``weight=True`` to enforce strict positivity (weights are rejected, never
    clamped).
    """

    grid: Grid
    values: np.ndarray
    weight: bool = False
    label: str = field(default="", compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values)
        if np.iscomplexobj(vals):
            vals = np.array(vals, dtype=np.complex128)
        else:
            vals = np.array(vals, dtype=np.float64)
        if vals.ndim != 1 or vals.shape[0] != self.grid.cells:
            raise DomainError(f"expected {self.grid.cells} cell values, got shape {vals.shape}")
        if self.weight:
            if np.iscomplexobj(vals):
                raise DomainError("a weight must be real-valued")
            if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
                bad = int(np.flatnonzero(~(np.isfinite(vals) & (vals > 0)))[0])
                raise DomainError(f"weight value at cell {bad} is {vals[bad]!r}; weights must be finite and > 0")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    # -- construction helpers -------------------------------------------------
    def with_values(self, values, weight: bool = False, label: str = "") -> "GridFunction":
        return GridFunction(self.grid, values, weight=weight, label=label)

    def as_weight(self) -> "GridFunction":
        return GridFunction(self.grid, self.values, weight=True, label=self.label)

    @classmethod
    def constant(cls, grid: Grid, c: float = 1.0, weight: bool = False) -> "GridFunction":
        return cls(grid, np.full(grid.cells, c), weight=weight)

    # -- elementary properties ------------------------------------------------
    @property
    def n(self) -> int:
        return self.grid.cells

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def reflect(self) -> "GridFunction":
        """Reverse the cell order (x -> -x up to translation)."""
        return GridFunction(self.grid, self.values[::-1], weight=self.weight, label=self.label)

    def power(self, e: float) -> "GridFunction":
        """Cell-wise power; weights stay weights."""
        return GridFunction(self.grid, np.power(self.values, e), weight=self.weight)

    def restrict(self, interval: IntervalIndex) -> "GridFunction":
        """Multiply by the indicator of a grid interval."""
        interval.check(self.grid)
        out = np.zeros_like(self.values)
        out[interval.lo:interval.hi] = self.values[interval.lo:interval.hi]
        return self.with_values(out)

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    # -- arithmetic -----------------------------------------------------------
    def _other(self, other):
        if isinstance(other, GridFunction):
            if other.grid != self.grid:
                raise DomainError("grid mismatch")
            return other.values
        return other

    def __add__(self, other):
        return self.with_values(self.values + self._other(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self.with_values(self.values - self._other(other))

    def __rsub__(self, other):
        return self.with_values(self._other(other) - self.values)

    def __mul__(self, other):
        return self.with_values(self.values * self._other(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return self.with_values(self.values / self._other(other))

    def __neg__(self):
        return self.with_values(-self.values)

    def __repr__(self):
        kind = "weight" if self.weight else "function"
        return f"GridFunction({kind}, n={self.n}, step={self.grid.step:g}, label={self.label!r})"


def _check_same_grid(*fs: GridFunction) -> Grid:
    g = fs[0].grid
    for f in fs[1:]:
        if f.grid != g:
            raise DomainError("grid mismatch")
    return g


def integrate(f: GridFunction, interval: IntervalIndex | None = None):
    """Exact integral of ``f`` over a grid interval (whole grid by default)."""
    interval = interval or f.grid.full()
    interval.check(f.grid)
    return f.grid.step * np.sum(f.values[interval.lo:interval.hi])


def average(f: GridFunction, interval: IntervalIndex | None = None):
    interval = interval or f.grid.full()
    interval.check(f.grid)
    return np.sum(f.values[interval.lo:interval.hi]) / interval.ncells


# ---------------------------------------------------------------------------
# weight / function families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightSpec:
    kind: str
    params: Mapping[str, object] = field(default_factory=dict)

    def __str__(self):
        if self.kind == "file":
            return f"file:{self.params['path']}"
        if self.kind == "custom":
            return "custom"
        if not self.params:
            return self.kind
        body = ",".join(f"{k}={_fmt(v)}" for k, v in self.params.items())
        return f"{self.kind}:{body}"


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


_KNOWN = {
    "power": {"delta": 0.0, "x0": 0.0},
    "exp": {"lambda": 1.0},
    "indicator": {"a": 0.0, "b": 1.0},
    "linear": {"slope": 1.0, "intercept": 0.0},
    "logosc": {"x0": 0.0, "clip": math.inf},
    "randlog": {"seed": 0, "amp": 1.0, "modes": 4, "period": 1.0},
    "const": {"c": 1.0},
}
_INT_PARAMS = {"seed", "modes"}
WEIGHT_KINDS = {"power", "exp", "randlog", "const"}


def _parse_params(kind: str, body: str, defaults: Mapping[str, object], where: str) -> dict:
    params = dict(defaults)
    if not body:
        return params
    for item in body.split(","):
        if "=" not in item:
            raise SpecError(f"{where}: expected key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        if k not in defaults:
            raise SpecError(f"{where}: unknown parameter {k!r} for {kind!r} (allowed: {', '.join(defaults)})")
        try:
            params[k] = int(v) if k in _INT_PARAMS else float(v)
        except ValueError:
            raise SpecError(f"{where}: parameter {k!r} is not a number: {v!r}") from None
    return params


def parse_spec(text: str) -> WeightSpec:
    """Parse a weight/function spec string such as ``power:delta=0.5,x0=0``."""
    text = text.strip()
    kind, _, body = text.partition(":")
    kind = kind.strip()
    if kind == "file":
        if not body:
            raise SpecError("file spec needs a path: file:<path>")
        return WeightSpec("file", {"path": body})
    if kind not in _KNOWN:
        raise SpecError(f"unknown function kind {kind!r} in {text!r}")
    return WeightSpec(kind, _parse_params(kind, body, _KNOWN[kind], text))


def parse_grid(text: str) -> Grid:
    """Parse ``grid:origin=<r>,step=<r>,cells=<n>``."""
    text = text.strip()
    head, _, body = text.partition(":")
    if head != "grid":
        raise SpecError(f"grid spec must start with 'grid:', got {text!r}")
    vals = {}
    for item in filter(None, body.split(",")):
        if "=" not in item:
            raise SpecError(f"{text}: expected key=value, got {item!r}")
        k, v = (s.strip() for s in item.split("=", 1))
        vals[k] = v
    try:
        missing = {"origin", "step", "cells"} - vals.keys()
        if missing:
            raise SpecError(f"{text}: missing {', '.join(sorted(missing))}")
        extra = vals.keys() - {"origin", "step", "cells"}
        if extra:
            raise SpecError(f"{text}: unknown key(s) {', '.join(sorted(extra))}")
        return Grid(float(vals["origin"]), float(vals["step"]), int(vals["cells"]))
    except ValueError as exc:
        if isinstance(exc, SpecError):
            raise
        raise SpecError(f"{text}: {exc}") from None


def format_grid(grid: Grid) -> str:
    return f"grid:origin={grid.origin!r},step={grid.step!r},cells={grid.cells}"


def _power_cells(edges, delta, x0):
    if delta <= -1 and edges[0] <= x0 <= edges[-1]:
        raise ParameterError(f"|x-x0|^delta is not integrable at x0={x0} for delta={delta} <= -1")
    y = edges - x0
    F = np.sign(y) * np.abs(y) ** (delta + 1.0) / (delta + 1.0)
    return np.diff(F) / np.diff(edges)


def _exp_cells(edges, lam):
    h = edges[1] - edges[0]
    if lam == 0:
        return np.ones(len(edges) - 1)
    # e^{lam u} (e^{lam h} - 1) / (lam h), written with expm1 for accuracy
    return np.exp(lam * edges[:-1]) * (np.expm1(lam * h) / (lam * h))


def _indicator_cells(edges, a, b):
    lo = np.clip(edges[:-1], a, b)
    hi = np.clip(edges[1:], a, b)
    return (hi - lo) / np.diff(edges)


def _logosc_cells(edges, x0, clip):
    # odd antiderivative G(y) of min(log(1/|y|), clip)
    r = math.exp(-clip) if math.isfinite(clip) else 0.0

    def g(s):
        s = np.abs(s)
        out = np.empty_like(s)
        small = s < r
        out[small] = clip * s[small] if r > 0 else 0.0
        big = ~small
        sb = s[big]
        with np.errstate(divide="ignore", invalid="ignore"):
            out[big] = np.where(sb > 0, sb - sb * np.log(np.where(sb > 0, sb, 1.0)) - r, 0.0)
        return out

    y = edges - x0
    G = np.sign(y) * g(y)
    return np.diff(G) / np.diff(edges)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def randlog_density(params: Mapping[str, object]):
    """Smooth random log-bounded density ``exp(amp * s(x))`` with ``|s| <= 1``."""
    rng = np.random.default_rng(int(params["seed"]))
    modes = int(params["modes"])
    coef = rng.standard_normal((modes, 2)) / np.arange(1, modes + 1)[:, None]
    coef /= np.sum(np.abs(coef))
    amp = float(params["amp"])
    period = float(params["period"])
    k = np.arange(1, modes + 1)

    def density(x):
        x = np.asarray(x, dtype=float)
        phase = 2 * np.pi * np.multiply.outer(x / period, k)
        s = np.cos(phase) @ coef[:, 0] + np.sin(phase) @ coef[:, 1]
        return np.exp(amp * s)

    return density


def _quadrature_cells(edges, density):
    u, v = edges[:-1], edges[1:]
    mid = 0.5 * (u + v)
    half = 0.5 * (v - u)
    x = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    return 0.5 * (density(x.ravel()).reshape(x.shape) @ _GL_WEIGHTS)


def synthesize(kind: str | WeightSpec, grid: Grid, values=None) -> GridFunction:
    """Cell averages of a named family on ``grid``.

    ``kind`` is a spec string (see module docstring) or a :class:`WeightSpec`.
    ``custom`` specs take their samples from ``values``.
    """
    spec = parse_spec(kind) if isinstance(kind, str) else kind
    p = spec.params
    edges = grid.edges
    if spec.kind == "power":
        vals = _power_cells(edges, float(p["delta"]), float(p["x0"]))
    elif spec.kind == "exp":
        vals = _exp_cells(edges, float(p["lambda"]))
    elif spec.kind == "indicator":
        vals = _indicator_cells(edges, float(p["a"]), float(p["b"]))
    elif spec.kind == "linear":
        vals = float(p["slope"]) * 0.5 * (edges[:-1] + edges[1:]) + float(p["intercept"])
    elif spec.kind == "logosc":
        vals = _logosc_cells(edges, float(p["x0"]), float(p["clip"]))
    elif spec.kind == "randlog":
        vals = _quadrature_cells(edges, randlog_density(p))
    elif spec.kind == "const":
        vals = np.full(grid.cells, float(p["c"]))
    elif spec.kind == "file":
        path = Path(str(p["path"]))
        try:
            vals = np.array([float(line) for line in path.read_text().split()], dtype=float)
        except OSError as exc:
            raise SpecError(f"cannot read {path}: {exc}") from None
        except ValueError as exc:
            raise SpecError(f"{path}: {exc}") from None
    elif spec.kind == "custom":
        vals = np.asarray(values if values is not None else p["values"], dtype=float)
    else:
        raise SpecError(f"unknown function kind {spec.kind!r}")
    weight = spec.kind in WEIGHT_KINDS or (
        spec.kind in {"file", "custom"} and bool(np.all(vals > 0))
    )
    if spec.kind == "const" and float(p["c"]) <= 0:
        weight = False
    return GridFunction(grid, vals, weight=weight, label=str(spec))
