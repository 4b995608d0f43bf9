"""Smooth compactly supported windows built from exp(-1/t) transitions.

Two named members: "wide" lives on [1/2, 3] with plateau [1, 2.5] and obeys
1_[1,2] <= g <= 1_[1/2,3]; "dyadic" lives on [1, 2] with plateau
[1.25, 1.75] for probes whose summation range is itself dyadic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import DomainError

_GRID_POINTS = 16385  # 2^14 + 1 nodes for the antiderivative spline


def _phi(t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t, dtype=np.float64)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smoothstep(t: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for t <= 0, 1 for t >= 1, exp(-1/t) blend between."""
    t = np.asarray(t, dtype=np.float64)
    a = _phi(t)
    b = _phi(1.0 - t)
    return a / (a + b)


class SmoothWindow:
    """A fixed plateau bump; evaluation and exact-antiderivative queries."""

    def __init__(self, kind: str, support: tuple[float, float], plateau: tuple[float, float]):
        lo, hi = support
        plo, phi_ = plateau
        if not lo < plo < phi_ < hi:
            raise DomainError("plateau must sit strictly inside the support")
        self.kind = kind
        self.support = (float(lo), float(hi))
        self.plateau = (float(plo), float(phi_))
        grid = np.linspace(lo, hi, _GRID_POINTS)
        self._spline = CubicSpline(grid, self(grid)).antiderivative()
        self.g_hat_0, self.g_hat_0_error = self._two_resolution_integral()

    def __call__(self, u):
        scalar = np.ndim(u) == 0
        u = np.atleast_1d(np.asarray(u, dtype=np.float64))
        lo, hi = self.support
        plo, phi_ = self.plateau
        out = np.zeros_like(u)
        rising = (u > lo) & (u < plo)
        falling = (u > phi_) & (u < hi)
        out[(u >= plo) & (u <= phi_)] = 1.0
        out[rising] = smoothstep((u[rising] - lo) / (plo - lo))
        out[falling] = smoothstep((hi - u[falling]) / (hi - phi_))
        return float(out[0]) if scalar else out

    def cumulative(self, u) -> np.ndarray:
        """Antiderivative G(u) = integral of g from the left support edge."""
        lo, hi = self.support
        return self._spline(np.clip(u, lo, hi))

    def integral(self, u1, u2) -> np.ndarray:
        return self.cumulative(u2) - self.cumulative(u1)

    def _two_resolution_integral(self) -> tuple[float, float]:
        lo, hi = self.support
        vals = []
        for n in (1 << 14, 1 << 15):
            xs = np.linspace(lo, hi, 2 * n + 1)
            ys = self(xs)
            h = (hi - lo) / (2 * n)
            vals.append(h / 3.0 * (ys[0] + ys[-1] + 4 * ys[1:-1:2].sum() + 2 * ys[2:-1:2].sum()))
        return float(vals[1]), float(abs(vals[1] - vals[0]))

    def sandwich_holds(self, points: int = 10_000) -> bool:
        """1 on the plateau's inner box, 0 outside the support, monotone blend."""
        lo, hi = self.support
        us = np.linspace(lo - 0.5, hi + 0.5, points)
        g = self(us)
        inner = (us >= self.plateau[0]) & (us <= self.plateau[1])
        outer = (us <= lo) | (us >= hi)
        return bool(
            np.all(g[inner] == 1.0)
            and np.all(g[outer] == 0.0)
            and np.all((g >= 0.0) & (g <= 1.0))
        )


_CACHE: dict[str, SmoothWindow] = {}


def smooth_window(kind: str = "wide") -> SmoothWindow:
    if kind not in _CACHE:
        if kind == "wide":
            _CACHE[kind] = SmoothWindow("wide", (0.5, 3.0), (1.0, 2.5))
        elif kind == "dyadic":
            _CACHE[kind] = SmoothWindow("dyadic", (1.0, 2.0), (1.25, 1.75))
        else:
            raise DomainError(f"unknown window kind {kind}")
    return _CACHE[kind]
