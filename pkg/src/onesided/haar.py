"""Dyadic Haar system on a grid-aligned root interval and the martingale transform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError
from .grid import GridFunction, IntervalIndex

__all__ = ["HaarSystem", "martingale_transform", "haar_coefficients", "haar_function"]


@dataclass(frozen=True, eq=False)
class HaarSystem:
    """Root ``[lo, lo + 2**depth)`` (cell indices) with one sign per dyadic subinterval.

    Signs are stored breadth first: the root, then its two halves left to
    right, and so on, ``2**depth - 1`` in total.
    """

    lo: int
    depth: int
    signs: np.ndarray

    def __post_init__(self):
        if self.depth < 1:
            raise ParameterError("Haar depth must be >= 1")
        s = np.asarray(self.signs, dtype=float)
        if s.shape != (2 ** self.depth - 1,):
            raise ParameterError(f"need {2 ** self.depth - 1} signs, got {s.shape}")
        if not np.all(np.abs(s) == 1):
            raise ParameterError("Haar signs must be +1 or -1")
        s.setflags(write=False)
        object.__setattr__(self, "signs", s)

    @classmethod
    def from_string(cls, lo: int, depth: int, text: str) -> "HaarSystem":
        return cls(lo, depth, np.array([1.0 if ch == "+" else -1.0 for ch in text if ch in "+-"]))

    @classmethod
    def random(cls, lo: int, depth: int, seed: int) -> "HaarSystem":
        rng = np.random.default_rng(seed)
        return cls(lo, depth, rng.choice([-1.0, 1.0], size=2 ** depth - 1))

    @classmethod
    def uniform(cls, lo: int, depth: int, sign: float = 1.0) -> "HaarSystem":
        return cls(lo, depth, np.full(2 ** depth - 1, float(sign)))

    @property
    def ncells(self) -> int:
        return 2 ** self.depth

    @property
    def root(self) -> IntervalIndex:
        return IntervalIndex(self.lo, self.lo + self.ncells)

    def level_signs(self, level: int) -> np.ndarray:
        start = 2 ** level - 1
        return self.signs[start:start + 2 ** level]


def _root_values(f: GridFunction, H: HaarSystem):
    if H.lo < 0 or H.lo + H.ncells > f.n:
        raise ParameterError(f"Haar root of {H.ncells} cells at {H.lo} does not fit a grid of {f.n} cells")
    return f.values[H.lo:H.lo + H.ncells]


def haar_coefficients(f: GridFunction, H: HaarSystem) -> np.ndarray:
    """<f, h_I> for every dyadic I of the root, breadth first."""
    x = _root_values(f, H)
    h = f.grid.step
    out = []
    for level in range(H.depth):
        s = H.ncells >> level
        blocks = x.reshape(2 ** level, s)
        left = blocks[:, : s // 2].sum(axis=1)
        right = blocks[:, s // 2:].sum(axis=1)
        out.append(h * (left - right) / np.sqrt(s * h))
    return np.concatenate(out)


def haar_function(H: HaarSystem, index: int, grid) -> GridFunction:
    """The L^2-normalised Haar function of the ``index``-th dyadic interval."""
    level = int(np.floor(np.log2(index + 1)))
    k = index - (2 ** level - 1)
    s = H.ncells >> level
    vals = np.zeros(grid.cells)
    start = H.lo + k * s
    amp = 1.0 / np.sqrt(s * grid.step)
    vals[start:start + s // 2] = amp
    vals[start + s // 2:start + s] = -amp
    return GridFunction(grid, vals)


def martingale_transform(f: GridFunction, H: HaarSystem) -> GridFunction:
    """G f = sum_I eps_I <f, h_I> h_I over the dyadic subintervals of the root.

    ``f`` is read on the root only; the result vanishes off the root.
    """
    if H.root.hi > f.n:
        raise ParameterError("Haar root exceeds the grid")
    x = _root_values(f, H)
    g = np.zeros(H.ncells, dtype=x.dtype)
    for level in range(H.depth):
        s = H.ncells >> level
        blocks = x.reshape(2 ** level, s)
        # <f,h_I> h_I on a cell of I = +-(sum_left - sum_right)/s
        d = H.level_signs(level) * (blocks[:, : s // 2].sum(axis=1) - blocks[:, s // 2:].sum(axis=1)) / s
        gb = g.reshape(2 ** level, s)
        gb[:, : s // 2] += d[:, None]
        gb[:, s // 2:] -= d[:, None]
    out = np.zeros(f.n, dtype=x.dtype)
    out[H.lo:H.lo + H.ncells] = g
    return f.with_values(out)


def check_root(n: int, depth: int, lo: int = 0) -> None:
    if lo + 2 ** depth > n:
        raise DomainError(f"root of 2^{depth} cells at {lo} exceeds {n} cells")
