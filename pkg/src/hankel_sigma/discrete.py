"""Discrete (Laguerre-basis) representation of Hankel operators.

With U_0 built from the orthonormal functions u_n^0(t) = e^{-t/2} L_n(t),
a Hankel operator with kernel h becomes the Hankel matrix q_{n+m} where

    q_n = (n+1)^{-1} int h(t) t L_n^1(t) e^{-t/2} dt
        = int_{-1}^{1} eta(mu) mu^n dmu,   eta(mu) = sigma(lambda),

and mu = (lambda - 1/2)/(lambda + 1/2).  Singular parts of sigma are carried
over as atoms: a point mass at lambda = alpha becomes a point mass at
mu(alpha) with weight (alpha + 1/2)^{-2}; finite-part and higher delta atoms
keep their lambda parametrization and are integrated in the mu variable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _io
from ._quad import integrate, jacobi_rule, legendre_rule
from .sigma import DeltaDerivative, FinitePart, KernelSpec, Regular, SigmaDistribution, _atom_from_json
from .specfun import laguerre, laguerre_table, meixner_pollaczek, rgamma
from .transforms import GridFunction, LogGrid, _log_window, inverse_mellin, sigma_from_kernel

__all__ = [
    "IntegrabilityError",
    "MomentSequence",
    "PointMass",
    "EtaFunction",
    "mu_of_lambda",
    "lambda_of_mu",
    "chebyshev_nodes",
    "q_from_kernel",
    "q_from_eta",
    "eta_from_sigma",
    "quasi_carleman_q",
    "generalized_hilbert_moments",
    "AsymptoticPrediction",
    "asymptotic_q",
    "kernel_from_q",
    "MomentSolution",
    "moment_solve",
    "laguerre_shift_identity",
    "laguerre_derivative_identity",
    "laguerre_convolution_identity",
]

_EXTRA_NODES = 48


class IntegrabilityError(ValueError):
    """The kernel is not integrable against t L_n^1(t) e^{-t/2}."""


def mu_of_lambda(lam):
    lam = np.asarray(lam, dtype=float)
    return (lam - 0.5) / (lam + 0.5)


def lambda_of_mu(mu):
    mu = np.asarray(mu, dtype=float)
    with np.errstate(divide="ignore"):
        return 0.5 * (1.0 + mu) / (1.0 - mu)


def chebyshev_nodes(n: int) -> np.ndarray:
    """First-kind Chebyshev points in ascending order (strictly inside (-1, 1))."""
    j = np.arange(n)
    return -np.cos(np.pi * (2 * j + 1) / (2 * n))


# -- data types -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MomentSequence:
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if not np.all(np.isfinite(v)):
            raise ValueError("moments must be finite")
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return self.values.size

    def __getitem__(self, i):
        return self.values[i]

    def to_csv(self) -> str:
        return _io.rows_to_csv(["n", "q_n"], ((n, float(v)) for n, v in enumerate(self.values)))

    @classmethod
    def from_csv(cls, text: str) -> "MomentSequence":
        header, rows = _io.csv_to_rows(text)
        if header != ["n", "q_n"]:
            raise ValueError("expected columns n, q_n")
        idx = [int(r[0]) for r in rows]
        if idx != list(range(len(idx))):
            raise ValueError("moment indices must run 0, 1, 2, ...")
        return cls(np.array([float(r[1]) for r in rows]))

    def to_json(self) -> dict:
        return {"q": [float(v) for v in self.values]}


@dataclass(frozen=True)
class PointMass:
    """weight * delta(mu - mu0)."""

    mu: float
    weight: float = 1.0

    def __post_init__(self):
        if not -1.0 < self.mu < 1.0:
            raise ValueError("point masses must sit strictly inside (-1, 1)")

    def to_json(self) -> dict:
        return {"kind": "point", "mu": self.mu, "weight": self.weight}


def _eta_atom_from_json(d: dict):
    if d.get("kind") == "point":
        return PointMass(float(d["mu"]), float(d.get("weight", 1.0)))
    atom = _atom_from_json(d)
    if isinstance(atom, Regular):
        raise ValueError("regular parts are not atoms")
    return atom


@dataclass(frozen=True, eq=False)
class EtaFunction:
    """eta on (-1, 1): samples plus optional singular atoms.

    The regular part is held in the most exact form available: a callable
    in mu (with breakpoints), a sigma grid in lambda (eta = sigma o lambda),
    or bare samples (piecewise-linear interpolation).  ``mu``/``values`` are
    always present for output.
    """

    mu: np.ndarray
    values: np.ndarray
    atoms: tuple = ()
    density: object = None
    breaks: tuple = ()
    sigma_grid: GridFunction | None = None

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if mu.shape != vals.shape or mu.ndim != 1:
            raise ValueError("mu and values must be 1-d arrays of equal length")
        if mu.size and (mu[0] <= -1.0 or mu[-1] >= 1.0 or np.any(np.diff(mu) <= 0)):
            raise ValueError("the grid must be increasing and strictly inside (-1, 1)")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "atoms", tuple(self.atoms))
        object.__setattr__(self, "breaks", tuple(sorted(float(b) for b in self.breaks if -1 < b < 1)))
        for a in self.atoms:
            if not isinstance(a, (PointMass, FinitePart, DeltaDerivative)):
                raise TypeError(f"not an eta atom: {a!r}")

    @classmethod
    def from_callable(cls, func, breaks=(), atoms=(), n: int = 256) -> "EtaFunction":
        mu = chebyshev_nodes(n)
        return cls(mu, np.asarray(func(mu), dtype=float), atoms, func, breaks)

    @classmethod
    def from_samples(cls, mu, values, atoms=()) -> "EtaFunction":
        return cls(mu, values, atoms)

    @classmethod
    def from_sigma_grid(cls, sig: GridFunction, atoms=(), n: int = 256) -> "EtaFunction":
        mu = chebyshev_nodes(n)
        return cls(mu, np.real(sig(lambda_of_mu(mu))), atoms, sigma_grid=sig)

    def __call__(self, mu):
        mu = np.asarray(mu, dtype=float)
        if self.density is not None:
            return np.asarray(self.density(mu), dtype=float)
        if self.sigma_grid is not None:
            return np.real(self.sigma_grid(lambda_of_mu(mu)))
        return np.interp(mu, self.mu, self.values, left=0.0, right=0.0)

    def to_csv(self) -> str:
        return _io.rows_to_csv(["mu", "eta"], zip(self.mu, self.values))

    def to_json(self) -> dict:
        return {"mu": [float(v) for v in self.mu], "eta": [float(v) for v in self.values],
                "atoms": [a.to_json() for a in self.atoms]}

    @classmethod
    def from_json(cls, d: dict) -> "EtaFunction":
        unknown = set(d) - {"mu", "eta", "atoms"}
        if unknown:
            raise ValueError(f"unknown keys: {sorted(unknown)}")
        return cls(np.array(d["mu"], dtype=float), np.array(d["eta"], dtype=float),
                   tuple(_eta_atom_from_json(a) for a in d.get("atoms", [])))

    @classmethod
    def from_csv(cls, text: str, atoms=()) -> "EtaFunction":
        header, rows = _io.csv_to_rows(text)
        if header != ["mu", "eta"]:
            raise ValueError("expected columns mu, eta")
        data = np.array([[float(v) for v in r] for r in rows])
        return cls(data[:, 0], data[:, 1], atoms)


# -- moments from eta -----------------------------------------------------------

def _powers(mu: np.ndarray, n_max: int) -> np.ndarray:
    """Rows mu^n, n < n_max."""
    out = np.empty((n_max, mu.size))
    out[0] = 1.0
    for n in range(1, n_max):
        out[n] = out[n - 1] * mu
    return out


def _gl(a: float, b: float, n: int):
    x, w = legendre_rule(n)
    h = 0.5 * (b - a)
    return a + h * (x + 1.0), h * w


def _piece_moments(func, a: float, b: float, n_max: int) -> np.ndarray:
    m = n_max // 2 + _EXTRA_NODES
    x, w = _gl(a, b, m)
    est = _powers(x, n_max) @ (w * func(x))
    x2, w2 = _gl(a, b, 2 * m)
    est2 = _powers(x2, n_max) @ (w2 * func(x2))
    if np.max(np.abs(est2 - est)) <= 1e-12 * max(np.max(np.abs(est2)), 1e-300):
        return est2
    # endpoint singularity: grade the panels geometrically toward both ends
    h = 0.5 * (b - a)
    edges = [0.0]
    step = 0.5
    while step > 1e-14:
        edges.append(step)
        step *= 0.25
    edges = np.array(sorted(edges + [1e-300]))
    total = np.zeros(n_max)
    for lo, hi in zip(edges[:-1], edges[1:]):
        for sign, base in ((1.0, a), (-1.0, b)):
            x, w = _gl(lo * h, hi * h, m)
            xs = base + sign * x
            total += _powers(xs, n_max) @ (w * func(xs))
    return total


def _regular_moments(eta: EtaFunction, n_max: int) -> np.ndarray:
    if eta.sigma_grid is not None:
        sig = eta.sigma_grid
        grid = sig.grid
        lam = grid.points
        # q_n = int sigma (lambda + 1/2)^{-2} mu^n dlambda, trapezoid in x = ln lambda
        w = grid.dx * lam / (lam + 0.5) ** 2 * np.real(sig.values)
        return _powers(mu_of_lambda(lam), n_max) @ w
    if eta.density is not None:
        pts = [-1.0, *eta.breaks, 1.0]
        return sum(_piece_moments(eta.density, a, b, n_max) for a, b in zip(pts[:-1], pts[1:]))
    if eta.mu.size == 0:
        return np.zeros(n_max)
    # piecewise-linear interpolant, exact per segment
    mu, v = eta.mu, eta.values
    x, w = legendre_rule(n_max // 2 + 8)
    lo, hi = mu[:-1], mu[1:]
    half = 0.5 * (hi - lo)
    s = (x[None, :] + 1.0) * 0.5
    nodes = lo[:, None] + 2 * half[:, None] * s
    vals = v[:-1, None] * (1 - s) + v[1:, None] * s
    weights = half[:, None] * w[None, :] * vals
    return _powers(nodes.ravel(), n_max) @ weights.ravel()


def _series_pow(base: np.ndarray, order: int, n_max: int) -> np.ndarray:
    """Taylor coefficients (to ``order``) of base(delta)^n for n < n_max."""
    out = np.zeros((n_max, order + 1))
    out[0, 0] = 1.0
    for n in range(1, n_max):
        out[n] = np.convolve(out[n - 1], base)[: order + 1]
    return out


def _delta_moments(atom: DeltaDerivative, n_max: int) -> np.ndarray:
    j, c = atom.order, atom.alpha + 0.5
    p = np.arange(j + 1)
    weight = (-1.0) ** p * (p + 1) * c ** (-2.0 - p)
    mu_series = np.where(p == 0, (atom.alpha - 0.5) / c, (-1.0) ** (p + 1) * c ** (-p - 1.0))
    damp = np.array([(-atom.r) ** i / math.factorial(i) for i in p])
    fixed = np.convolve(weight, damp)[: j + 1]
    powers = _series_pow(mu_series, j, n_max)
    coef = powers @ fixed[::-1]  # coefficient of delta^j
    return atom.coeff * (-1) ** j * math.factorial(j) * coef


def _jets_A(mu0: np.ndarray, k: float, gam: float, rho: float, order: int) -> np.ndarray:
    """Taylor coefficients of (1-mu)^{k+1} exp(-rho (mu-gam)/(1-mu)) at mu0."""
    one = 1.0 - mu0
    P = np.empty((order + 1, mu0.size))
    P[0] = one ** (k + 1)
    b = 1.0
    for p in range(1, order + 1):
        b *= (k + 2 - p) / p
        P[p] = b * (-1.0) ** p * one ** (k + 1 - p)
    if rho == 0:
        return P
    g = np.empty_like(P)
    g[0] = -rho * (mu0 - gam) / one
    for p in range(1, order + 1):
        g[p] = -rho * (1.0 - gam) / one ** (p + 1)
    E = np.empty_like(P)
    E[0] = np.exp(g[0])
    for p in range(1, order + 1):
        E[p] = sum(i * g[i] * E[p - i] for i in range(1, p + 1)) / p
    A = np.zeros_like(P)
    for p in range(order + 1):
        for i in range(p + 1):
            A[p] += P[i] * E[p - i]
    return A


def _G_derivative(mu0: np.ndarray, n_max: int, k: float, gam: float, rho: float, j: int) -> np.ndarray:
    """d^j/dmu^j [A(mu) mu^n] at mu0, rows n < n_max."""
    A = _jets_A(mu0, k, gam, rho, j)
    pw = _powers(mu0, n_max)
    out = np.zeros((n_max, mu0.size))
    n = np.arange(n_max)[:, None]
    for p in range(j + 1):
        i = j - p  # derivative order falling on mu^n
        binom = np.ones((n_max, 1))
        for s in range(i):
            binom = binom * (n - s) / (s + 1)
        shifted = np.zeros_like(pw)
        if i < n_max:
            shifted[i:] = pw[: n_max - i]
        out += A[p][None, :] * binom * shifted
    return out * math.factorial(j)


def _finite_part_moments(atom: FinitePart, n_max: int) -> np.ndarray:
    alpha, k, r = atom.alpha, atom.k, atom.r
    if alpha < 0:
        raise ValueError("finite-part atoms need alpha >= 0 to live in (-1, 1)")
    if r == 0 and k <= -2:
        raise IntegrabilityError("with r = 0 the matrix elements make sense for k > -2 only")
    c = alpha + 0.5
    gam = (alpha - 0.5) / c
    a = -k - 1.0
    rho = r * c
    pref = atom.coeff * c ** a
    m = 0.5 * (gam + 1.0)
    L = m - gam
    nodes = n_max // 2 + _EXTRA_NODES

    # head [gam, m]: weight (mu - gam)^a, continued analytically when a < -1
    if k < 0:
        x, w = jacobi_rule(nodes, 0.0, a)
        xs = 0.5 * L * (x + 1.0)
        head = (0.5 * L) ** (a + 1) * (_G_derivative(gam + xs, n_max, k, gam, rho, 0) @ w)
    else:
        n0 = int(math.floor(k))
        head = np.zeros(n_max)
        denom = 1.0
        end = np.array([m])
        for j in range(n0 + 1):
            denom *= a + 1 + j
            head += (-1) ** j * L ** (a + j + 1) * _G_derivative(end, n_max, k, gam, rho, j)[:, 0] / denom
        beta = a + n0 + 1
        x, w = jacobi_rule(nodes, 0.0, beta)
        xs = 0.5 * L * (x + 1.0)
        rem = (0.5 * L) ** (beta + 1) * (_G_derivative(gam + xs, n_max, k, gam, rho, n0 + 1) @ w)
        head += (-1) ** (n0 + 1) * rem / denom

    # tail [m, 1]
    if r == 0:
        x, w = jacobi_rule(nodes, k + 1.0, 0.0)
        h = 0.5 * (1.0 - m)
        xs = m + h * (x + 1.0)
        tail = h ** (k + 2) * (_powers(xs, n_max) @ (w * (xs - gam) ** a))
    else:
        xs, w = _gl(m, 1.0, n_max + 2 * _EXTRA_NODES)
        with np.errstate(under="ignore"):
            f = (xs - gam) ** a * _jets_A(xs, k, gam, rho, 0)[0]
        tail = _powers(xs, n_max) @ (w * f)
    return pref * (head + tail)


def q_from_eta(eta: EtaFunction, n_max: int) -> MomentSequence:
    """q_n = int eta(mu) mu^n dmu for n < n_max, atoms included."""
    if n_max < 1:
        raise ValueError("n_max must be positive")
    q = _regular_moments(eta, n_max)
    n = np.arange(n_max)
    for atom in eta.atoms:
        if isinstance(atom, PointMass):
            q = q + atom.weight * atom.mu ** n
        elif isinstance(atom, DeltaDerivative):
            q = q + _delta_moments(atom, n_max)
        else:
            q = q + _finite_part_moments(atom, n_max)
    return MomentSequence(q)


def eta_from_sigma(sigma: SigmaDistribution, n: int = 256) -> EtaFunction:
    """Change of variables mu = (lambda - 1/2)/(lambda + 1/2); supp sigma must lie in [0, inf)."""
    regular, atoms = [], []
    for a in sigma.atoms:
        if isinstance(a, Regular):
            if a.lower < 0:
                if a.on_grid or np.any(a(np.linspace(a.lower, min(a.upper, 0.0), 64)[:-1]) != 0):
                    raise ValueError("sigma must be supported in [0, inf)")
            regular.append(a)
        else:
            if a.alpha < 0:
                raise ValueError("sigma must be supported in [0, inf)")
            if isinstance(a, DeltaDerivative) and a.order == 0:
                atoms.append(PointMass(float(mu_of_lambda(a.alpha)), a.coeff / (a.alpha + 0.5) ** 2))
            else:
                atoms.append(a)
    if not regular:
        return EtaFunction(chebyshev_nodes(n), np.zeros(n), atoms, lambda m: np.zeros_like(m))
    grids = [a for a in regular if a.on_grid]
    if grids:
        if len(regular) > 1:
            raise ValueError("combine grid densities before the change of variables")
        return EtaFunction.from_sigma_grid(grids[0].density, atoms, n)

    def density(mu):
        lam = lambda_of_mu(mu)
        return np.real(sum(np.asarray(a(lam)) for a in regular))

    breaks = set()
    for a in regular:
        for edge in (a.lower, a.upper):
            if 0 < edge < math.inf:
                breaks.add(float(mu_of_lambda(edge)))
    return EtaFunction.from_callable(density, sorted(breaks), atoms, n)


# -- moments from kernels ----------------------------------------------------------

def q_from_kernel(h: KernelSpec, n_max: int, rho: float = 1.0, nodes: int | None = None) -> MomentSequence:
    """q_n = (n+1)^{-1} int h_rho(t) t L_n^1(t) e^{-t/2} dt with h_rho(t) = rho h(rho t).

    Generalized Gauss-Laguerre in u = t/2 with weight u^{1+s} e^{-u}, where
    s is the declared power of h at 0; the remaining factor is smooth and
    the weight matches the growth of L_n^1, so nothing cancels.
    """
    if n_max < 1:
        raise ValueError("n_max must be positive")
    if n_max > 1024:
        raise ValueError("n_max is limited to 1024")
    if rho <= 0:
        raise ValueError("rho must be positive")
    if getattr(h, "two_sided", False):
        raise IntegrabilityError("growing kernels are outside the integrability class")
    s0 = float(h.singularity)
    if s0 <= -2:
        raise IntegrabilityError("with r = 0 the matrix elements make sense for k > -2 only")
    if rho * h.decay_rate <= -0.5:
        raise IntegrabilityError("the kernel must decay faster than e^{t/2}")
    m = nodes or 4 * n_max
    if h.is_catalog:
        # each term with its own power at 0, so the remaining factor is smooth
        q = sum(_laguerre_moments(term, term.k if term.r == 0 else 0.0, n_max, rho, m) for term in h.terms)
    else:
        q = _laguerre_moments(h, s0, n_max, rho, m)
    return MomentSequence(q / np.arange(1, n_max + 1))


def _laguerre_moments(h, s0: float, n_max: int, rho: float, m: int, split: float = 4.0) -> np.ndarray:
    if s0 == 0:
        # smooth at 0 (possibly with a nearby pole at t = -r): Gauss-Legendre
        # on [0, split], shifted Gauss-Laguerre beyond
        t_head, w_head = _gl(0.0, split, n_max // 2 + 2 * _EXTRA_NODES)
        u, logw = _laguerre_rule(m, 0.0)
        t = np.concatenate([t_head, split + 2.0 * u])
        # weights enter through the log-prefactor so tiny w times huge L_n stays finite
        logp = np.concatenate([np.log(w_head) - 0.5 * t_head, logw + math.log(2.0) - 0.5 * split])
        with np.errstate(under="ignore"):
            g = rho * np.real(np.asarray(h(rho * t), dtype=complex)) * t
        return laguerre_table(n_max - 1, 1.0, t, logp) @ g
    kappa = 1.0 + s0
    u, logw = _laguerre_rule(m, kappa)
    t = 2.0 * u
    with np.errstate(under="ignore"):
        g = rho * np.real(np.asarray(h(rho * t), dtype=complex)) * t ** (-s0)
    return laguerre_table(n_max - 1, 1.0, t, logw) @ g * 2.0 ** (kappa + 1)


def _scaled_laguerre_pair(m: int, kappa: float, x: np.ndarray):
    """(L_m, L_{m-1}) at x as mantissas with a common log-scale."""
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    scale = np.zeros_like(x)
    for j in range(m):
        prev, cur = cur, ((2 * j + kappa + 1 - x) * cur - (j + kappa) * prev) / (j + 1)
        big = np.maximum(np.abs(cur), np.abs(prev))
        hit = big > 1e100
        if np.any(hit):
            cur[hit] /= big[hit]
            prev[hit] /= big[hit]
            scale[hit] += np.log(big[hit])
    return cur, prev, scale


@lru_cache(maxsize=32)
def _laguerre_rule(m: int, kappa: float):
    """Gauss-Laguerre nodes and log-weights for u^kappa e^{-u}.

    Weights come from w = Gamma(m+kappa+1)/(m! x L_m'(x)^2) evaluated in
    log form, so they keep full relative accuracy far into the underflow
    range (eigenvector-based weights do not).
    """
    i = np.arange(m)
    diag = 2 * i + kappa + 1.0
    off = np.sqrt((i[1:]) * (i[1:] + kappa))
    x = eigh_tridiagonal(diag, off, eigvals_only=True)
    for _ in range(3):
        cur, prev, _s = _scaled_laguerre_pair(m, kappa, x)
        x = x - x * cur / (m * cur - (m + kappa) * prev)
    cur, prev, scale = _scaled_laguerre_pair(m, kappa, x)
    log_deriv = np.log(np.abs(m * cur - (m + kappa) * prev)) + scale - np.log(x)
    logw = math.lgamma(m + kappa + 1) - math.lgamma(m + 1) - np.log(x) - 2 * log_deriv
    x.flags.writeable = False
    logw.flags.writeable = False
    return x, logw


def quasi_carleman_q(spec: KernelSpec, n_max: int) -> MomentSequence:
    """Matrix elements of a catalog kernel, computed in the mu variable."""
    return q_from_eta(eta_from_sigma(spec.sigma()), n_max)


def generalized_hilbert_moments(gamma: float, n_max: int) -> MomentSequence:
    """q_n = (1 - gamma^{n+1})/(n+1): the kernel t^{-1} e^{-alpha t}."""
    if not -1 <= gamma < 1:
        raise ValueError("gamma must lie in [-1, 1)")
    n = np.arange(n_max)
    return MomentSequence(-np.expm1((n + 1) * np.log(abs(gamma))) / (n + 1) if gamma > 0
                          else (1 - gamma ** (n + 1)) / (n + 1))


# -- asymptotics -------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticPrediction:
    value: float
    regime: str

    @property
    def superpolynomial(self) -> bool:
        return self.regime == "faster than any power"


def asymptotic_q(alpha: float, r: float, k: float, n: int) -> AsymptoticPrediction:
    """Leading term of q_n for the kernel (t + r)^k e^{-alpha t}."""
    if alpha < 0 or r < 0:
        raise ValueError("alpha and r must be nonnegative")
    if n < 1:
        raise ValueError("n must be positive")
    minus = (-1) ** n * 4.0 ** (k + 1) * n ** k
    plus = rgamma(-k) * math.gamma(k + 2) * n ** (-k - 2) if k > -2 else math.nan
    if alpha > 0 and r > 0:
        return AsymptoticPrediction(0.0, "faster than any power")
    if alpha == 0 and r > 0:
        return AsymptoticPrediction(minus, "mu = -1")
    if alpha > 0:
        return AsymptoticPrediction(plus, "mu = 1")
    return AsymptoticPrediction(minus + plus, "both ends")


# -- kernels from moments ----------------------------------------------------------

def kernel_from_q(q, t, n_trunc: int | None = None, cesaro: bool = False):
    """Partial sum of sum_n q_n L_n^1(t) e^{-t/2}, optionally (C,1)-averaged."""
    vals = np.asarray(q.values if isinstance(q, MomentSequence) else q, dtype=float)
    n_trunc = vals.size if n_trunc is None else n_trunc
    if not 1 <= n_trunc <= vals.size:
        raise ValueError("n_trunc must be between 1 and len(q)")
    coef = vals[:n_trunc].copy()
    if cesaro:
        coef *= 1.0 - np.arange(n_trunc) / n_trunc
    t_arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t_arr)
    rows = laguerre_table(n_trunc - 1, 1.0, flat, -0.5 * flat)
    out = coef @ rows
    return float(out[0]) if t_arr.ndim == 0 else out


# -- moment problem ------------------------------------------------------------------

_SOLVE_GRID = LogGrid(-40.0, 40.0, 8192)


@dataclass(frozen=True, eq=False)
class MomentSolution:
    pipeline: EtaFunction | None
    direct: EtaFunction
    residual_pipeline: float
    residual_direct: float
    bound: float
    disagreement: float
    notes: tuple = field(default_factory=tuple)

    @property
    def best(self) -> EtaFunction:
        if self.pipeline is None or self.residual_direct <= self.residual_pipeline:
            return self.direct
        return self.pipeline

    @property
    def converged(self) -> bool:
        return min(self.residual_direct, self.residual_pipeline) <= self.bound

    def to_json(self) -> dict:
        return {
            "converged": self.converged,
            "bound": self.bound,
            "residual_pipeline": self.residual_pipeline,
            "residual_direct": self.residual_direct,
            "disagreement": self.disagreement,
            "notes": list(self.notes),
            "direct": self.direct.to_json(),
            "pipeline": None if self.pipeline is None else self.pipeline.to_json(),
        }


def _mp_sigma(q: np.ndarray, cutoff: float, taper_width: float, grid: LogGrid) -> GridFunction:
    # int lambda^{-1+i xi} sigma = 2^{1-i xi} sum i^{-n} q_n P_n(-xi); with
    # F = lambda^{-1/2} sigma this is (2 pi)^{1/2} (MF)(-xi)
    xi = grid.xi
    logw = _log_window(xi, cutoff, taper_width)
    keep = logw > -40.0
    s = np.zeros(int(keep.sum()), dtype=complex)
    for n, qn in enumerate(q):
        if qn != 0:
            s += (1j) ** (-n) * qn * meixner_pollaczek(n, xi[keep])
    G = np.zeros(xi.size, dtype=complex)
    G[keep] = np.exp(logw[keep]) * 2.0 ** (1 + 1j * xi[keep]) * s / math.sqrt(2 * math.pi)
    F = inverse_mellin(GridFunction(grid, G, "xi"), "lambda")
    vals = np.real(np.exp(0.5 * grid.x) * F.values)
    return GridFunction(grid, vals, "lambda")


def _pipeline_sigma(q: np.ndarray, cutoff: float, taper_width: float, grid: LogGrid) -> GridFunction:
    coeffs = q.copy()

    def h(t):
        return kernel_from_q(coeffs, t)

    spec = KernelSpec.tabulated(h, singularity=0.0, tail_power=None, decay_rate=0.5, name="moments")
    return sigma_from_kernel(spec, grid, cutoff, taper_width)


def moment_solve(q, cutoff: float = 10.0, bound: float = 1e-4, taper_width: float = 1.0,
                 grid: LogGrid = _SOLVE_GRID, routes=("pipeline", "direct"), n_eta: int = 256,
                 cesaro: bool = False) -> MomentSolution:
    """Best-effort eta with the given moments, by both routes.

    ``direct`` feeds the moments into the Meixner-Pollaczek series for the
    Mellin data of lambda^{-1/2} sigma and inverts; ``pipeline`` sums the
    Laguerre series for h and inverts the Laplace transform.  Both keep
    only |xi| <= cutoff (Gaussian taper beyond).  Residuals are
    max_n |q_n - q_n(eta_hat)|; a residual above ``bound`` is reported,
    not raised.

    Both series converge only as fast as q_n decays, and the error at
    frequency xi is amplified by about e^{pi |xi|/2}.  For slowly decaying
    moments, ``cesaro`` applies (C,1) weights and a cutoff near 1 is
    appropriate; geometric sequences tolerate cutoffs of 10 and more.
    """
    vals = np.asarray(q.values if isinstance(q, MomentSequence) else q, dtype=float)
    if vals.size > 512:
        raise ValueError("at most 512 moments are supported")
    notes = []
    data = vals * (1.0 - np.arange(vals.size) / vals.size) if cesaro else vals
    direct = EtaFunction.from_sigma_grid(_mp_sigma(data, cutoff, taper_width, grid), n=n_eta)
    res_d = float(np.max(np.abs(q_from_eta(direct, vals.size).values - vals)))
    pipe, res_p = None, math.inf
    if "pipeline" in routes:
        try:
            pipe = EtaFunction.from_sigma_grid(_pipeline_sigma(data, cutoff, taper_width, grid), n=n_eta)
            res_p = float(np.max(np.abs(q_from_eta(pipe, vals.size).values - vals)))
        except (ValueError, ArithmeticError) as exc:
            notes.append(f"pipeline failed: {exc}")
    disagreement = math.nan
    if pipe is not None:
        disagreement = float(np.max(np.abs(pipe.values - direct.values)))
    return MomentSolution(pipe, direct, res_p, res_d, bound, disagreement, tuple(notes))


# -- shift identities -------------------------------------------------------------

def _u0(n: int, t):
    return laguerre(n, 0.0, t) * np.exp(-0.5 * np.asarray(t))


def laguerre_shift_identity(n: int, t: float) -> float:
    """|u_{n+1}(t) - u_n(t) + e^{-t/2} int_0^t e^{s/2} u_n(s) ds|."""
    if not 0 <= n <= 100:
        raise ValueError("n must lie in [0, 100]")
    integral = integrate(lambda s: np.exp(0.5 * s) * _u0(n, s), 0.0, t) if t > 0 else 0.0
    return float(abs(_u0(n + 1, t) - _u0(n, t) + math.exp(-0.5 * t) * integral))


def laguerre_derivative_identity(n: int, t: float, h: float = 1e-30) -> float:
    """|d(L_n - L_{n+1})/dt - L_n| at t, derivative by complex step."""
    z = complex(t, h)
    deriv = (laguerre(n, 0.0, z) - laguerre(n + 1, 0.0, z)).imag / h
    return float(abs(deriv - laguerre(n, 0.0, t)))


def laguerre_convolution_identity(m: int, n: int, t: float) -> float:
    """|int_0^t L_m(s) L_n(t-s) ds - t L_{n+m}^1(t)/(n+m+1)|."""
    if t <= 0:
        return 0.0
    lhs = integrate(lambda s: laguerre(m, 0.0, s) * laguerre(n, 0.0, t - s), 0.0, t)
    return float(abs(lhs - t * laguerre(n + m, 1.0, t) / (n + m + 1)))
