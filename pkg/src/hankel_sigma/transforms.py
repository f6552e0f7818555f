"""Laplace and Mellin transforms on logarithmic grids.

Conventions.  On a log-grid a sample at node x stands for the point e^x of
the half-line (t for kernels and test functions, lambda for sigma-functions
and Laplace images).  The Mellin transform is M = Phi U with
(Uf)(x) = e^{x/2} f(e^x) and Phi the unitary Fourier transform

    (Phi u)(xi) = (2 pi)^{-1/2} int u(x) e^{-i x xi} dx,

sampled on the dual frequency grid xi_k = (k - n/2) d_xi, d_xi = 2 pi/(n dx).
Both directions are single FFTs with a phase for the grid offset.

The Laplace transform factors through the weighted Mellin transform:

    M(Omega^{g-1/2} L f)(xi) = Gamma(g - i xi) M(Omega^{1/2-g} f)(-xi),

with Omega^a the multiplication by t^a.  Reading the same relation
backwards gives the inverse, which amplifies frequency xi by roughly
e^{pi |xi|/2}; the inverse keeps |xi| <= cutoff and rolls off beyond with a
Gaussian taper.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import Polynomial

from . import _io
from ._quad import composite_nodes, integrate
from .specfun import loggamma

__all__ = [
    "LogGrid",
    "LinearGrid",
    "GridFunction",
    "TestFunction",
    "DerivativeBudgetError",
    "RegularizationError",
    "TruncationWarning",
    "LaplaceImage",
    "DEFAULT_GRID",
    "laplace_direct",
    "mellin",
    "inverse_mellin",
    "laplace_via_mellin",
    "inverse_laplace",
    "sigma_from_kernel",
    "laplace_convolution",
    "convolution_values",
    "bump_basis",
]

_EPS = np.finfo(float).eps


class TruncationWarning(UserWarning):
    """Sampled data does not decay at the ends of its grid."""


class RegularizationError(ValueError):
    """The requested cutoff would amplify rounding noise past 1/eps."""


class DerivativeBudgetError(ValueError):
    """A derivative beyond the declared budget was requested."""


@dataclass(frozen=True)
class LogGrid:
    """Uniform grid in x, standing for the points e^x of the half-line."""

    x_min: float = -12.0
    x_max: float = 12.0
    n_points: int = 2048

    def __post_init__(self):
        if not self.x_min < self.x_max:
            raise ValueError("x_min must be below x_max")
        n = self.n_points
        if n < 64 or n & (n - 1):
            raise ValueError("n_points must be a power of two, at least 64")

    log = True

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.n_points)

    @property
    def points(self) -> np.ndarray:
        return np.exp(self.x)

    t = points

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi / (self.n_points * self.dx)

    @property
    def xi(self) -> np.ndarray:
        return (np.arange(self.n_points) - self.n_points // 2) * self.dxi

    def to_json(self) -> dict:
        return {"scale": "log", "x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


@dataclass(frozen=True)
class LinearGrid(LogGrid):
    """Uniform grid whose nodes are the points themselves (two-sided sigma)."""

    x_min: float = -40.0
    x_max: float = 40.0
    n_points: int = 2048

    log = False

    @property
    def points(self) -> np.ndarray:
        return self.x

    t = points

    def to_json(self) -> dict:
        return {"scale": "linear", "x_min": self.x_min, "x_max": self.x_max, "n_points": self.n_points}


DEFAULT_GRID = LogGrid()


def _grid_from_json(d: dict) -> LogGrid:
    cls = LinearGrid if d.get("scale") == "linear" else LogGrid
    return cls(float(d["x_min"]), float(d["x_max"]), int(d["n_points"]))


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on a grid.  ``variable`` says what the nodes stand for:
    "t" or "lambda" (points e^x), "linear" (points x) or "xi" (frequencies)."""

    grid: LogGrid
    values: np.ndarray
    variable: str = "t"

    def __post_init__(self):
        vals = np.asarray(self.values)
        if vals.shape != (self.grid.n_points,):
            raise ValueError("values must match the grid size")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.xi if self.variable == "xi" else self.grid.x

    @property
    def points(self) -> np.ndarray:
        if self.variable == "xi":
            return self.grid.xi
        return self.grid.points

    def __call__(self, p):
        """Linear interpolation at points p (zero outside the grid)."""
        pts = self.points
        p = np.asarray(p, dtype=float)
        if self.variable in ("t", "lambda") and self.grid.log:
            with np.errstate(divide="ignore", invalid="ignore"):
                p = np.log(p)
            pts = self.grid.x
        re = np.interp(p, pts, self.values.real, left=0.0, right=0.0)
        if np.iscomplexobj(self.values):
            return re + 1j * np.interp(p, pts, self.values.imag, left=0.0, right=0.0)
        return re

    def to_json(self) -> dict:
        vals = np.asarray(self.values, dtype=complex)
        return {
            "grid": self.grid.to_json(),
            "variable": self.variable,
            "re": [float(v) for v in vals.real],
            "im": [float(v) for v in vals.imag],
        }

    @classmethod
    def from_json(cls, d: dict) -> "GridFunction":
        re = np.array(d["re"], dtype=float)
        im = np.array(d["im"], dtype=float)
        vals = re + 1j * im if np.any(im) else re
        return cls(_grid_from_json(d["grid"]), vals, d.get("variable", "t"))

    def to_csv(self) -> str:
        vals = np.asarray(self.values, dtype=complex)
        return _io.rows_to_csv(["x", "re", "im"], zip(self.nodes, vals.real, vals.imag))

    @classmethod
    def from_csv(cls, text: str, grid: LogGrid | None = None, variable: str = "t") -> "GridFunction":
        header, rows = _io.csv_to_rows(text)
        if header != ["x", "re", "im"]:
            raise ValueError("expected columns x, re, im")
        data = np.array([[float(v) for v in r] for r in rows])
        if grid is None:
            x = data[:, 0]
            n = x.size
            grid = LogGrid(x[0], x[0] + n * (x[-1] - x[0]) / (n - 1), n)
        vals = data[:, 1] + 1j * data[:, 2] if np.any(data[:, 2]) else data[:, 1]
        return cls(grid, vals, variable)


# -- test functions ---------------------------------------------------------

@lru_cache(maxsize=None)
def _bump_poly(j: int) -> Polynomial:
    """p_j with d^j/ds^j exp(-1/(1-s^2)) = p_j(s) (1-s^2)^{-2j} exp(-1/(1-s^2))."""
    if j == 0:
        return Polynomial([1.0])
    p = _bump_poly(j - 1)
    q = Polynomial([1.0, 0.0, -1.0])
    s = Polynomial([0.0, 1.0])
    m = j - 1
    return p.deriv() * q * q + 4 * m * s * q * p - 2 * s * p


@dataclass(frozen=True)
class TestFunction:
    """f(t) = P(s) exp(-1/(1-s^2)), s = (t-c)/w, supported on [c-w, c+w].

    ``coeffs`` are the coefficients of P in powers of s; ``budget`` caps
    the derivative order callers may request.
    """

    center: float
    width: float
    coeffs: tuple = (1.0,)
    budget: int = 12
    family: str = "polynomial-bump"

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.width <= 0:
            raise ValueError("width must be positive")
        if self.center - self.width <= 0:
            raise ValueError("support must lie inside (0, inf)")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))

    @property
    def support(self) -> tuple[float, float]:
        return (self.center - self.width, self.center + self.width)

    def _phi_derivs(self, s: np.ndarray, order: int) -> np.ndarray:
        out = np.zeros((order + 1,) + s.shape)
        inside = np.abs(s) < 1.0
        si = s[inside]
        q = 1.0 - si * si
        base = -1.0 / q
        logq = np.log(q)
        for j in range(order + 1):
            with np.errstate(under="ignore"):
                out[j][inside] = _bump_poly(j)(si) * np.exp(base - 2 * j * logq)
        return out

    def derivatives(self, t, order: int) -> np.ndarray:
        """Array of f, f', ..., f^(order) at t (leading axis = order)."""
        if order > self.budget:
            raise DerivativeBudgetError(f"order {order} exceeds the budget {self.budget}")
        t = np.asarray(t, dtype=float)
        scalar = t.ndim == 0
        s = np.atleast_1d((t - self.center) / self.width)
        phi = self._phi_derivs(s, order)
        poly = Polynomial(self.coeffs)
        pders = [poly]
        for _ in range(order):
            pders.append(pders[-1].deriv())
        out = np.zeros_like(phi)
        for m in range(order + 1):
            acc = np.zeros_like(s)
            for j in range(m + 1):
                acc = acc + math.comb(m, j) * pders[m - j](s) * phi[j]
            out[m] = acc / self.width**m
        return out[:, 0] if scalar else out

    def __call__(self, t):
        val = self.derivatives(t, 0)[0]
        return float(val) if np.ndim(val) == 0 else val

    def derivative(self, t, order: int):
        val = self.derivatives(t, order)[order]
        return float(val) if np.ndim(val) == 0 else val

    def scaled(self, factor: float) -> "TestFunction":
        return TestFunction(self.center, self.width, tuple(factor * c for c in self.coeffs), self.budget)

    def l2_norm(self) -> float:
        a, b = self.support
        return math.sqrt(integrate(lambda t: self(t) ** 2, a, b))

    def normalized(self) -> "TestFunction":
        return self.scaled(1.0 / self.l2_norm())


def bump_basis(centers, widths, normalize: bool = True) -> list[TestFunction]:
    fs = [TestFunction(float(c), float(w)) for c, w in zip(centers, widths)]
    return [f.normalized() for f in fs] if normalize else fs


class LaplaceImage:
    """(Lf)^{(p)}(lambda) = L[(-t)^p f](lambda) for a test function f.

    A fixed composite Gauss-Legendre rule on supp f; accurate to ~1e-15
    relative for the bump family, vectorized over lambda.
    """

    support = None  # entire in lambda
    budget = math.inf

    def __init__(self, f: TestFunction, panels: int = 16):
        a, b = f.support
        self.f = f
        # decay length of e^{-a lambda}, used to map the half-line
        self.scale = 1.0 / a
        self.nodes, w = composite_nodes(a, b, panels)
        self.wf = w * f(self.nodes)

    def derivatives(self, lam, order: int) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        ex = np.exp(-np.outer(lam, self.nodes))
        out = np.empty((order + 1, lam.size))
        pw = self.wf.copy()
        for p in range(order + 1):
            out[p] = ex @ pw
            pw = pw * (-self.nodes)
        return out

    def __call__(self, lam):
        return self.derivatives(lam, 0)[0]


def laplace_direct(f: TestFunction, lam: float) -> float:
    """(Lf)(lambda) = int e^{-t lambda} f(t) dt, adaptive on supp f."""
    a, b = f.support
    return float(integrate(lambda t: np.exp(-lam * t) * f(t), a, b, rtol=1e-14, atol=1e-16))


# -- Mellin transform ---------------------------------------------------------

def _sample(f, grid: LogGrid) -> np.ndarray:
    if isinstance(f, GridFunction):
        if f.grid != grid:
            raise ValueError("grid function lives on a different grid")
        return np.asarray(f.values)
    return np.asarray(f(grid.points))


def _check_tail(u: np.ndarray, what: str, dx: float, threshold: float = 1e-10) -> float:
    """Relative size of the jump (value and slope) in the periodic extension."""
    peak = np.max(np.abs(u))
    if peak == 0:
        return 0.0
    jump = max(abs(u[0] - u[-1]), abs(u[1] - u[0]) / dx, abs(u[-1] - u[-2]) / dx)
    tail = float(jump / peak)
    if tail > threshold:
        warnings.warn(f"{what}: data does not decay at the grid ends (tail mass {tail:.2e} "
                      "of the peak); expect truncation error", TruncationWarning, stacklevel=3)
    return tail


def _phi(u: np.ndarray, grid: LogGrid) -> np.ndarray:
    n = grid.n_points
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    spec = np.fft.fft(u * sign)
    return spec * np.exp(-1j * grid.x_min * grid.xi) * grid.dx / math.sqrt(2 * math.pi)


def _phi_inv(v: np.ndarray, grid: LogGrid) -> np.ndarray:
    n = grid.n_points
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    u = np.fft.ifft(v * np.exp(1j * grid.x_min * grid.xi)) * n
    return u * sign * grid.dxi / math.sqrt(2 * math.pi)


def _reflect(v: np.ndarray) -> np.ndarray:
    """v(-xi) on the dual grid (the Nyquist node maps to itself)."""
    return np.roll(v[::-1], 1)


def mellin(f, grid: LogGrid = DEFAULT_GRID, check: bool = True) -> GridFunction:
    """(Mf)(xi) on the dual grid from samples of f at t = e^x."""
    u = np.exp(0.5 * grid.x) * _sample(f, grid)
    if check:
        _check_tail(u, "mellin", grid.dx)
    return GridFunction(grid, _phi(u, grid), "xi")


def inverse_mellin(F: GridFunction, variable: str = "t") -> GridFunction:
    grid = F.grid
    u = _phi_inv(np.asarray(F.values, dtype=complex), grid)
    return GridFunction(grid, np.exp(-0.5 * grid.x) * u, variable)


def _real_if_close(v: np.ndarray, rel: float = 1e-9) -> np.ndarray:
    scale = np.max(np.abs(v)) if v.size else 0.0
    if scale == 0 or np.max(np.abs(v.imag)) <= rel * scale:
        return v.real.copy()
    return v


def laplace_via_mellin(f, grid: LogGrid = DEFAULT_GRID, gamma: float = 0.5,
                       check: bool = True) -> GridFunction:
    """Lf sampled at lambda = e^x through the weighted Mellin factorization."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    x = grid.x
    u = np.exp((1.0 - gamma) * x) * _sample(f, grid)
    if check:
        _check_tail(u, "laplace_via_mellin", grid.dx)
    F = _phi(u, grid)
    G = np.exp(loggamma(gamma - 1j * grid.xi)) * _reflect(F)
    out = np.exp(-gamma * x) * _phi_inv(G, grid)
    return GridFunction(grid, _real_if_close(out), "lambda")


def _log_window(xi: np.ndarray, cutoff: float, taper_width: float) -> np.ndarray:
    excess = np.maximum(np.abs(xi) - cutoff, 0.0)
    if taper_width <= 0:
        return np.where(excess > 0, -np.inf, 0.0)
    return -0.5 * (excess / taper_width) ** 2


def amplification(cutoff: float, taper_width: float = 1.0, gamma: float = 0.5,
                  grid: LogGrid = DEFAULT_GRID) -> float:
    """Largest gain |W(xi)/Gamma(gamma+i xi)| of the regularized inverse."""
    xi = grid.xi
    logw = _log_window(xi, cutoff, taper_width)
    keep = np.isfinite(logw)
    return float(np.max(np.exp(logw[keep] - loggamma(gamma + 1j * xi[keep]).real)))


def _factorized_inverse(vals: np.ndarray, grid: LogGrid, gamma: float, cutoff: float,
                        taper_width: float, what: str) -> np.ndarray:
    if cutoff < 0:
        raise ValueError("cutoff must be nonnegative")
    gain = amplification(cutoff, taper_width, gamma, grid)
    if gain * _EPS > 1.0:
        raise RegularizationError(
            f"{what}: cutoff {cutoff:g} amplifies by {gain:.2e} (about e^(pi*cutoff/2)), "
            "beyond 1/eps; lower the cutoff")
    x = grid.x
    u = np.exp(gamma * x) * vals
    _check_tail(u, what, grid.dx, threshold=1e-7)
    F = _phi(u, grid)
    xi = grid.xi
    logw = _log_window(xi, cutoff, taper_width)
    mult = np.zeros(xi.size, dtype=complex)
    keep = np.isfinite(logw)
    mult[keep] = np.exp(logw[keep] - loggamma(gamma + 1j * xi[keep]))
    G = mult * _reflect(F)
    return np.exp((gamma - 1.0) * x) * _phi_inv(G, grid)


def inverse_laplace(g, cutoff: float = 12.0, taper_width: float = 1.0, gamma: float = 0.5,
                    grid: LogGrid = DEFAULT_GRID) -> GridFunction:
    """Regularized L^{-1} g, sampled at t = e^x.

    Frequencies |xi| <= cutoff are inverted exactly; beyond, the multiplier
    1/Gamma(gamma + i xi) is damped by exp(-(|xi|-cutoff)^2 / (2 taper^2)).
    The gain near the cutoff is about e^{pi cutoff/2}.
    """
    if isinstance(g, GridFunction):
        grid = g.grid
    vals = _sample(g, grid)
    out = _factorized_inverse(vals, grid, gamma, cutoff, taper_width, "inverse_laplace")
    return GridFunction(grid, _real_if_close(out), "t")


def _auto_gamma(h) -> float:
    s0 = getattr(h, "singularity", 0.0)
    tail = getattr(h, "tail_power", None)
    rate = getattr(h, "decay_rate", 0.0)
    if tail is not None and rate == 0 and tail == s0:
        g = -s0  # homogeneous kernel: t^gamma h(t) is flat on the grid
    elif rate > 0 or tail is None:
        g = 1.0 - min(s0, 0.0)
    else:
        g = -0.5 * (s0 + tail)
    if g <= 0:
        raise ValueError("kernel exponents leave no admissible Mellin line")
    return g


def sigma_from_kernel(h, grid: LogGrid | None = None, cutoff: float = 12.0,
                      taper_width: float = 1.0, gamma: float | None = None) -> GridFunction:
    """Regular part of the sigma-function of a kernel h, sampled on a grid.

    Uses int h(t) t^{g-1-i xi} dt = Gamma(g - i xi) int sigma lambda^{-g+i xi} d lambda
    on the line Re = g (g = 1 by default; kernels that declare a power
    behaviour pick the line on which t^g h(t) stays bounded).  Kernels
    flagged ``two_sided`` (growing, entire) are inverted along the
    imaginary axis instead, sigma(lambda) = (2 pi)^{-1} int h(iy) e^{iy lambda} dy,
    on a linear grid.
    """
    if getattr(h, "two_sided", False):
        return _sigma_two_sided(h, grid if grid is not None else LinearGrid(), cutoff, taper_width)
    grid = grid if grid is not None else DEFAULT_GRID
    if isinstance(h, GridFunction):
        grid = h.grid
    g = _auto_gamma(h) if gamma is None else gamma
    vals = _sample(h, grid)
    out = _factorized_inverse(vals, grid, g, cutoff, taper_width, "sigma_from_kernel")
    return GridFunction(grid, _real_if_close(out), "lambda")


def _sigma_two_sided(h, grid: LogGrid, cutoff: float, taper_width: float) -> GridFunction:
    if grid.log:
        raise ValueError("two-sided sigma needs a LinearGrid")
    y = grid.xi
    logw = _log_window(y, cutoff, taper_width)
    hv = np.zeros(y.size, dtype=complex)
    keep = np.isfinite(logw)
    hv[keep] = np.asarray(h(1j * y[keep]), dtype=complex) * np.exp(logw[keep])
    n = grid.n_points
    sign = np.where(np.arange(n) % 2 == 0, 1.0, -1.0)
    sig = np.fft.ifft(hv * np.exp(1j * grid.x_min * y)) * n * sign * grid.dxi / (2 * np.pi)
    return GridFunction(grid, _real_if_close(sig), "linear")


# -- Laplace convolution ------------------------------------------------------

def _overlap(f1: TestFunction, f2: TestFunction, t):
    a1, b1 = f1.support
    a2, b2 = f2.support
    lo = np.maximum(a1, t - b2)
    hi = np.minimum(b1, t - a2)
    return lo, hi


def laplace_convolution(f1: TestFunction, f2: TestFunction, t: float) -> float:
    """(f1* conv f2)(t) = int_0^t conj f1(s) f2(t-s) ds (real test functions)."""
    if t <= 0:
        raise ValueError("t must be positive")
    lo, hi = _overlap(f1, f2, t)
    if hi <= lo:
        return 0.0
    return float(integrate(lambda s: f1(s) * f2(t - s), float(lo), float(hi), atol=1e-17))


def convolution_values(f1: TestFunction, f2: TestFunction, t, panels: int = 8) -> np.ndarray:
    """Vectorized convolution on an array of t (fixed composite rule)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    lo, hi = _overlap(f1, f2, t)
    ok = hi > lo
    out = np.zeros(t.size)
    if not np.any(ok):
        return out
    ref, w = composite_nodes(0.0, 1.0, panels)
    span = (hi - lo)[ok]
    s = lo[ok][:, None] + span[:, None] * ref[None, :]
    vals = f1(s) * f2(t[ok][:, None] - s)
    out[ok] = (vals @ w) * span
    return out
