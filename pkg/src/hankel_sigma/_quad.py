"""Vectorized Gauss rules shared by the transform and pairing code."""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

_PANEL_ORDER = 24


@lru_cache(maxsize=64)
def legendre_rule(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


@lru_cache(maxsize=256)
def jacobi_rule(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights on [-1, 1] for the weight (1-x)^a (1+x)^b."""
    x, w = roots_jacobi(n, a, b)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def composite_nodes(a: float, b: float, panels: int, order: int = _PANEL_ORDER):
    """Nodes and weights of a composite Gauss-Legendre rule on [a, b]."""
    x, w = legendre_rule(order)
    edges = np.linspace(a, b, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def integrate(fun, a: float, b: float, rtol: float = 1e-13, atol: float = 1e-15,
              panels: int = 4, max_panels: int = 4096) -> float | complex:
    """Globally adaptive composite Gauss-Legendre on a finite interval.

    ``fun`` is vectorized.  The panel count doubles until two successive
    estimates agree to the requested tolerance.
    """
    if b == a:
        return 0.0
    nodes, weights = composite_nodes(a, b, panels)
    prev = np.dot(weights, fun(nodes))
    while panels < max_panels:
        panels *= 2
        nodes, weights = composite_nodes(a, b, panels)
        vals = fun(nodes)
        cur = np.dot(weights, vals)
        # relative to the L1 norm, so cancelling integrands still converge
        size = max(abs(cur), np.dot(weights, np.abs(vals)))
        if abs(cur - prev) <= max(atol, rtol * size):
            return cur
        prev = cur
    raise ArithmeticError(f"quadrature on [{a:g}, {b:g}] did not converge")


def integrate_to_inf(fun, a: float, scale: float = 1.0, **kw) -> float | complex:
    """Integral over [a, inf) via x = a + scale*s/(1-s)."""

    def mapped(s):
        one = 1.0 - s
        x = a + scale * s / one
        val = fun(x) * (scale / (one * one))
        return np.where(np.isfinite(val), val, 0.0)

    return integrate(mapped, 0.0, 1.0, **kw)


def integrate_power(fun, length: float, beta: float, rtol: float = 1e-13, atol: float = 1e-15,
                    n: int = 32, max_n: int = 2048) -> float | complex:
    """Integral of x^beta * fun(x) over [0, length] with Gauss-Jacobi nodes.

    High-order Jacobi nodes carry their own roundoff, so once the estimates
    stop improving the best-agreeing pair is accepted if it is within 1e-10.
    """
    if length <= 0:
        return 0.0

    def estimate(m):
        x, w = jacobi_rule(m, 0.0, float(beta))
        xs = 0.5 * length * (x + 1.0)
        vals = fun(xs)
        c = (0.5 * length) ** (beta + 1.0)
        return c * np.dot(w, vals), c * np.dot(w, np.abs(vals))

    prev, _ = estimate(n)
    best, best_err = prev, math.inf
    while n < max_n:
        n *= 2
        cur, size = estimate(n)
        err = abs(cur - prev)
        if err <= max(atol, rtol * size):
            return cur
        rel = err / max(size, 1e-300)
        if rel < best_err:
            best, best_err = cur, rel
        prev = cur
    if best_err <= 1e-10:
        return best
    raise ArithmeticError("Gauss-Jacobi quadrature did not converge")
