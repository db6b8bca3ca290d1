"""Radial grids, cumulative quadrature and the radial Green operator.

Every integral equation handled by the package has the form

    w(r) = c + G[g](r),   G[g](r) = int_0^r t^(1-N) int_0^t s^(N-1) g(s) ds dt,

which is the radial inverse of the Laplacian on R^N with w'(0) = 0.

``g`` is replaced by its piecewise-linear interpolant on the grid and both
integrals are then evaluated exactly (up to rounding) per interval.  The
interval coefficients depend only on the grid and on N, are nonnegative, and
are cached on the grid.  Hence ``G[g]`` is a running sum of nonnegative
increments whenever ``g >= 0``: it is nondecreasing in floating point, not
only up to tolerance, and monotone in ``g``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "MIN_NODES",
    "RadialGrid",
    "RadialFunction",
    "GreenWeights",
    "cumulative_inner",
    "green_apply",
    "green_slope",
    "cumulative_integral",
    "decade_grid",
]

MIN_NODES = 16
MAX_GRADED_RATIO = 1.05

_GL_OUTER = np.polynomial.legendre.leggauss(16)
_GL_CUMULATIVE = np.polynomial.legendre.leggauss(8)


def _unit_gauss(rule):
    x, w = rule
    return 0.5 * (x + 1.0), 0.5 * w


class RadialGrid:
    """Ordered radial mesh ``0 = r_0 < r_1 < ... < r_n = R_max``.

    Use :meth:`uniform`, :meth:`graded` or :meth:`from_nodes` to build one.
    """

    def __init__(self, nodes, spacing_policy="custom"):
        nodes = np.array(nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < MIN_NODES:
            raise ValueError(f"a radial grid needs at least {MIN_NODES} nodes")
        if nodes[0] != 0.0:
            raise ValueError("the first node must be exactly 0")
        if not np.all(np.isfinite(nodes)) or np.any(np.diff(nodes) <= 0.0):
            raise ValueError("grid nodes must be finite and strictly increasing")
        nodes.setflags(write=False)
        self.nodes = nodes
        self.spacing_policy = spacing_policy
        self._green = {}

    @classmethod
    def uniform(cls, r_max, n_nodes):
        nodes = np.linspace(0.0, float(r_max), int(n_nodes))
        nodes[-1] = float(r_max)
        return cls(nodes, "uniform")

    @classmethod
    def graded(cls, r_max, n_nodes, ratio=MAX_GRADED_RATIO):
        """Geometric-type grid, finest at the origin.

        Nodes follow ``r = R (exp(a x) - 1) / (exp(a) - 1)`` for uniform ``x``.
        ``a`` is chosen so that the last-to-first width ratio is about
        ``1 + R`` while consecutive widths never grow by more than ``ratio``.
        """
        if ratio <= 1.0 or ratio > MAX_GRADED_RATIO:
            raise ValueError(f"graded ratio must lie in (1, {MAX_GRADED_RATIO}]")
        n_int = int(n_nodes) - 1
        a = min(n_int * np.log(ratio), np.log1p(float(r_max)))
        x = np.linspace(0.0, 1.0, n_int + 1)
        nodes = float(r_max) * np.expm1(a * x) / np.expm1(a)
        nodes[0], nodes[-1] = 0.0, float(r_max)
        return cls(nodes, "graded")

    @classmethod
    def from_nodes(cls, nodes):
        return cls(nodes, "custom")

    def __len__(self):
        return self.nodes.size

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and np.array_equal(self.nodes, other.nodes)

    __hash__ = object.__hash__

    def __repr__(self):
        return (f"RadialGrid(n_nodes={self.nodes.size}, r_max={self.r_max!r}, "
                f"spacing_policy={self.spacing_policy!r})")

    @property
    def r_max(self):
        return float(self.nodes[-1])

    @property
    def widths(self):
        return np.diff(self.nodes)

    @property
    def quad_weights(self):
        """Composite trapezoid node weights on the grid."""
        h = self.widths
        w = np.zeros_like(self.nodes)
        w[:-1] += 0.5 * h
        w[1:] += 0.5 * h
        return w

    def index_at(self, r):
        """Index of the first node >= r."""
        i = int(np.searchsorted(self.nodes, r, side="left"))
        return min(i, self.nodes.size - 1)

    def green_weights(self, N):
        N = _check_dimension(N)
        if N not in self._green:
            self._green[N] = GreenWeights.build(self.nodes, N)
        return self._green[N]


@dataclass(frozen=True)
class RadialFunction:
    """Samples of a radial quantity, one value per grid node."""

    grid: RadialGrid
    values: np.ndarray
    blow_up: bool = False

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise ValueError("one value per grid node is required")
        if not self.blow_up and not np.all(np.isfinite(values)):
            raise ValueError("non-finite samples in a radial function not flagged as blow-up")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, grid, fn):
        return cls(grid, np.asarray(fn(grid.nodes), dtype=float) * np.ones_like(grid.nodes))


@dataclass(frozen=True)
class GreenWeights:
    """Per-interval coefficients of the exact Green operator of a linear interpolant.

    On ``[a, b]`` with ``g`` linear between ``g_a`` and ``g_b``::

        I(b) = I(a) + alpha g_a + beta g_b
        G(b) = G(a) + c0 I(a) + c1 g_a + c2 g_b
    """

    N: int
    alpha: np.ndarray
    beta: np.ndarray
    c0: np.ndarray
    c1: np.ndarray
    c2: np.ndarray

    @classmethod
    def build(cls, nodes, N):
        a = nodes[:-1]
        h = np.diff(nodes)
        m = N // 2 + 2
        xs, ws = _unit_gauss(np.polynomial.legendre.leggauss(m))

        # inner moments: h * int_0^1 (a + h s)^(N-1) {1 - s, s} ds, exact for m points
        pts = a[:, None] + h[:, None] * xs[None, :]
        powed = pts ** (N - 1)
        alpha = h * np.sum(powed * (1.0 - xs) * ws, axis=1)
        beta = h * np.sum(powed * xs * ws, axis=1)

        # c0 = int_a^b t^(1-N) dt, written to avoid cancellation when h << a
        c0 = np.zeros_like(a)
        pos = a > 0.0
        c0[pos] = (a[pos] ** (2 - N)) * -np.expm1(-(N - 2) * np.log1p(h[pos] / a[pos])) / (N - 2)

        # c1, c2 = h^2 int_0^1 int_0^tau ((a+h s)/(a+h tau))^(N-1) {1-s, s} ds dtau
        tau, wt = _unit_gauss(_GL_OUTER)
        sig = tau[:, None] * xs[None, :]                       # (q, m)
        num = a[:, None, None] + h[:, None, None] * sig[None]  # (k, q, m)
        den = a[:, None] + h[:, None] * tau[None, :]           # (k, q)
        ratio = num / den[:, :, None]
        kern = ratio ** (N - 1) * ws[None, None, :]
        inner1 = tau[None, :] * np.sum(kern * (1.0 - sig)[None], axis=2)
        inner2 = tau[None, :] * np.sum(kern * sig[None], axis=2)
        c1 = h * h * np.sum(inner1 * wt[None, :], axis=1)
        c2 = h * h * np.sum(inner2 * wt[None, :], axis=1)

        for arr in (alpha, beta, c0, c1, c2):
            arr.setflags(write=False)
        return cls(N, alpha, beta, c0, c1, c2)

    def inner(self, g):
        """Running inner integral on the first ``len(g)`` nodes."""
        k = g.size - 1
        incr = self.alpha[:k] * g[:-1] + self.beta[:k] * g[1:]
        out = np.empty_like(g)
        out[0] = 0.0
        np.cumsum(incr, out=out[1:])
        return out

    def outer(self, g, inner):
        k = g.size - 1
        incr = self.c0[:k] * inner[:-1] + self.c1[:k] * g[:-1] + self.c2[:k] * g[1:]
        out = np.empty_like(g)
        out[0] = 0.0
        np.cumsum(incr, out=out[1:])
        return out


def _check_dimension(N):
    if int(N) != N or N < 3:
        raise ValueError(f"dimension N must be an integer >= 3, got {N!r}")
    return int(N)


def _samples(g):
    if not isinstance(g, RadialFunction):
        raise TypeError("expected a RadialFunction")
    if not np.all(np.isfinite(g.values)):
        raise ValueError("non-finite sample in integrand")
    return g.values


def cumulative_inner(g, N):
    """``I(t) = int_0^t s^(N-1) g(s) ds`` at every node, in one forward pass."""
    vals = _samples(g)
    return RadialFunction(g.grid, g.grid.green_weights(N).inner(vals))


def green_apply(g, N):
    """``G[g]`` at every node; ``g`` must be nonnegative and finite."""
    vals = _samples(g)
    if np.any(vals < 0.0):
        raise ValueError("green_apply requires a nonnegative integrand")
    gw = g.grid.green_weights(N)
    return RadialFunction(g.grid, gw.outer(vals, gw.inner(vals)))


def green_slope(grid, inner, N):
    """Derivative ``G[g]'(r) = r^(1-N) I(r)`` from inner-integral samples."""
    r = grid.nodes[: inner.size]
    out = np.zeros_like(inner)
    out[1:] = inner[1:] / r[1:] ** (N - 1)
    return out


def cumulative_integral(fn: Callable[[np.ndarray], np.ndarray], nodes) -> np.ndarray:
    """Running ``int_{x_0}^{x_k} fn`` over arbitrary increasing nodes.

    Eight-point Gauss-Legendre on every interval; ``fn`` must accept arrays.
    """
    nodes = np.asarray(nodes, dtype=float)
    out = np.zeros_like(nodes)
    if nodes.size < 2:
        return out
    xs, ws = _unit_gauss(_GL_CUMULATIVE)
    a = nodes[:-1]
    h = np.diff(nodes)
    pts = a[:, None] + h[:, None] * xs[None, :]
    vals = np.asarray(fn(pts), dtype=float) * np.ones_like(pts)
    np.cumsum(h * np.sum(vals * ws, axis=1), out=out[1:])
    return out


def decade_grid(start=0.0, decades=(10.0, 100.0, 1000.0, 10000.0), per_decade=64, head=256):
    """Nodes that hit every entry of ``decades`` exactly.

    ``[start, decades[0]]`` is graded (or geometric when ``start > 0``),
    each later decade is geometric with ``per_decade`` intervals.
    """
    first = float(decades[0])
    if start == 0.0:
        parts = [RadialGrid.graded(first, head + 1).nodes]
    else:
        parts = [np.geomspace(start, first, max(8, int(per_decade * np.log10(first / start))) + 1)]
    lo = first
    for hi in decades[1:]:
        seg = np.geomspace(lo, float(hi), per_decade + 1)
        seg[-1] = float(hi)
        parts.append(seg[1:])
        lo = float(hi)
    return np.concatenate(parts)
