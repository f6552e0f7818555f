"""Finite Hankel sections, a Jacobi eigensolver, and Gram-form checks.

The quadratic form of a Hankel operator can be evaluated two ways:
on the kernel side, <h, conj(f_i) * f_j> (Laplace convolution), or on the
sigma side, <sigma, conj(L f_i) L f_j>.  ``verify_main_identity`` compares
them.  ``apply_via_pdo`` evaluates H through its Mellin representation
H = L Sigma L with L = M^{-1} J Gamma_{1/2} M.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _io
from ._quad import composite_nodes, integrate
from .sigma import (DeltaDerivative, FinitePart, JetProduct, SigmaDistribution,
                    pair)
from .specfun import loggamma
from .transforms import LaplaceImage, TestFunction, convolution_values

__all__ = [
    "HankelSection",
    "TestBasis",
    "eig_sym",
    "count_signs",
    "default_tau",
    "gram_form_kernel",
    "gram_form_sigma",
    "verify_main_identity",
    "apply_via_pdo",
    "pdo_form",
    "pdo_gram",
    "matrix_to_csv",
    "matrix_from_csv",
]

_EPS = np.finfo(float).eps


# -- sections -------------------------------------------------------------------

@dataclass(frozen=True)
class HankelSection:
    """The n x n matrix (q_{i+j}), i, j < n."""

    q: tuple
    n: int

    def __post_init__(self):
        q = tuple(float(v) for v in self.q)
        if self.n < 1:
            raise ValueError("section size must be positive")
        if len(q) < 2 * self.n - 1:
            raise ValueError(f"a section of size {self.n} needs {2 * self.n - 1} moments, got {len(q)}")
        if not all(math.isfinite(v) for v in q):
            raise ValueError("moments must be finite")
        object.__setattr__(self, "q", q[: 2 * self.n - 1])

    @property
    def matrix(self) -> np.ndarray:
        q = np.asarray(self.q)
        idx = np.arange(self.n)
        return q[idx[:, None] + idx[None, :]]

    def eigenvalues(self) -> np.ndarray:
        return eig_sym(self.matrix)

    def default_tau(self) -> float:
        return default_tau(self.n, np.max(np.abs(self.q)))

    def counts(self, tau: float | None = None) -> tuple[int, int]:
        return count_signs(self.eigenvalues(), self.default_tau() if tau is None else tau)

    def to_json(self) -> dict:
        return {"n": self.n, "q": list(self.q), "matrix": self.matrix.tolist()}

    def to_csv(self) -> str:
        return matrix_to_csv(self.matrix)


def matrix_to_csv(m: np.ndarray) -> str:
    m = np.asarray(m, dtype=float)
    return _io.rows_to_csv([f"c{j}" for j in range(m.shape[1])], m.tolist())


def matrix_from_csv(text: str) -> np.ndarray:
    _, rows = _io.csv_to_rows(text)
    return np.array([[float(v) for v in r] for r in rows])


def default_tau(n: int, scale: float) -> float:
    """Zero threshold eps * n * scale."""
    return float(_EPS * n * scale)


def count_signs(eigs, tau: float = 0.0) -> tuple[int, int]:
    """(#{e > tau}, #{e < -tau})."""
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    e = np.asarray(eigs, dtype=float)
    return int(np.sum(e > tau)), int(np.sum(e < -tau))


# -- Jacobi eigenvalues -----------------------------------------------------------

def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    """n-1 rounds of n/2 disjoint pairs covering every pair once (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = np.array(players[: n // 2])
        q = np.array(players[n // 2:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def eig_sym(m, tol: float = 1e-15, max_sweeps: int = 60) -> np.ndarray:
    """Eigenvalues of a real symmetric matrix by cyclic Jacobi rotations.

    Each round applies n/2 disjoint rotations at once (round-robin order),
    so a sweep costs n-1 vectorized row/column updates.  Stops when the
    off-diagonal Frobenius norm falls below tol * ||m||_F or stops
    decreasing.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    n = a.shape[0]
    norm = np.linalg.norm(a)
    if norm == 0 or n == 1:
        return np.sort(np.diag(a))
    if np.linalg.norm(a - a.T) > 1e-12 * norm:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)
    if n % 2:
        # pad with an isolated zero so every round pairs all indices
        a = np.pad(a, ((0, 1), (0, 1)))
    size = a.shape[0]
    rounds = _round_robin(size)
    target = tol * norm

    def off(x):
        return math.sqrt(max(np.sum(x * x) - np.sum(np.diag(x) ** 2), 0.0))

    prev = off(a)
    for _ in range(max_sweeps):
        if prev <= target:
            break
        for p, q in rounds:
            apq = a[p, q]
            act = np.abs(apq) > 1e-300
            if not np.any(act):
                continue
            p, q, apq = p[act], q[act], apq[act]
            app, aqq = a[p, p], a[q, q]
            theta = (aqq - app) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(1.0 + theta * theta))
            t[theta == 0] = 1.0
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            rp, rq = a[p, :].copy(), a[q, :].copy()
            a[p, :] = c[:, None] * rp - s[:, None] * rq
            a[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = a[:, p].copy(), a[:, q].copy()
            a[:, p] = cp * c[None, :] - cq * s[None, :]
            a[:, q] = cp * s[None, :] + cq * c[None, :]
            a[p, q] = 0.0
            a[q, p] = 0.0
        cur = off(a)
        if cur >= prev:
            break
        prev = cur
    eigs = np.diag(a)
    if size != n:
        # drop the padding zero (it never mixes: its row stays zero)
        eigs = np.delete(eigs, n)
    return np.sort(eigs)


# -- Gram forms -------------------------------------------------------------------

@dataclass(frozen=True)
class TestBasis:
    functions: tuple

    __test__ = False

    def __post_init__(self):
        fs = tuple(self.functions)
        if not fs:
            raise ValueError("basis must be nonempty")
        for f in fs:
            if not isinstance(f, TestFunction):
                raise TypeError("basis members must be TestFunction instances")
        keys = {(f.center, f.width, f.coeffs) for f in fs}
        if len(keys) != len(fs):
            raise ValueError("basis members must be distinct")
        object.__setattr__(self, "functions", fs)

    def __len__(self) -> int:
        return len(self.functions)

    def __iter__(self):
        return iter(self.functions)

    def __getitem__(self, i):
        return self.functions[i]


def _as_basis(basis) -> TestBasis:
    return basis if isinstance(basis, TestBasis) else TestBasis(tuple(basis))


def _kernel_entry(h, fi: TestFunction, fj: TestFunction) -> float:
    lo = fi.support[0] + fj.support[0]
    hi = fi.support[1] + fj.support[1]

    def integrand(t):
        return np.real(np.asarray(h(t))) * convolution_values(fi, fj, t)

    return float(integrate(integrand, lo, hi, rtol=1e-12, atol=1e-16, panels=8))


def gram_form_kernel(h, basis) -> np.ndarray:
    """G_ij = <h, conj(f_i) * f_j>, the convolution integrated against h.

    The convolution of two test functions is supported in
    [a_i + a_j, b_i + b_j], away from t = 0, so the kernel singularity at
    the origin never enters the quadrature.
    """
    basis = _as_basis(basis)
    n = len(basis)
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            try:
                v = _kernel_entry(h, basis[i], basis[j])
            except ArithmeticError as exc:
                raise ArithmeticError(f"pairing ({i}, {j}) diverged: {exc}") from exc
            if not math.isfinite(v):
                raise ArithmeticError(f"pairing ({i}, {j}) is not finite")
            g[i, j] = g[j, i] = v
    return g


def gram_form_sigma(sigma: SigmaDistribution, basis) -> np.ndarray:
    """S_ij = <sigma, conj(L f_i) L f_j> with exact lambda-derivatives of L f."""
    basis = _as_basis(basis)
    images = [LaplaceImage(f) for f in basis]
    n = len(basis)
    s = np.zeros((n, n))
    for i in range(n):
        for j in range(i, n):
            v = pair(sigma, JetProduct(images[i], images[j]))
            s[i, j] = s[j, i] = float(np.real(v))
    return s


def verify_main_identity(h, sigma: SigmaDistribution, basis) -> dict:
    """Report {max_error, per_entry} for the two Gram forms."""
    gk = gram_form_kernel(h, basis)
    gs = gram_form_sigma(sigma, basis)
    diff = np.abs(gk - gs)
    return {"max_error": float(np.max(diff)), "per_entry": diff.tolist(),
            "kernel_gram": gk.tolist(), "sigma_gram": gs.tolist()}


# -- pseudo-differential path -------------------------------------------------------

_XI_MAX = 40.0  # |Gamma(1/2 + i xi)| ~ e^{-pi |xi|/2}: below 1e-27 beyond
_XI_STEP = 0.05  # trapezoid step; the y-period 2 pi/step exceeds the y-range


def _xi_rule():
    # G(xi) is analytic and decays exponentially, so the trapezoid rule is
    # spectrally accurate; the rule is symmetric about 0
    k = int(round(_XI_MAX / _XI_STEP))
    xi = _XI_STEP * np.arange(-k, k + 1)
    return xi, np.full(xi.size, _XI_STEP)


def _mellin_direct(f: TestFunction, xi: np.ndarray) -> np.ndarray:
    """(Mf)(xi) = (2 pi)^{-1/2} int f(t) t^{-1/2 - i xi} dt by Gauss-Legendre on supp f."""
    a, b = f.support
    t, w = composite_nodes(a, b, 32)
    wt = w * f(t) * t**-0.5
    return np.exp(-1j * np.outer(xi, np.log(t))) @ wt / math.sqrt(2 * math.pi)


def _bounded_pieces(sigma: SigmaDistribution):
    """Check boundedness and collect (density, breakpoints) for the PDO path."""
    if not sigma.atoms:
        return [], []
    funcs, breaks = [], []
    for a in sigma.atoms:
        if isinstance(a, DeltaDerivative):
            raise ValueError("apply_via_pdo needs a bounded sigma: delta atoms are singular")
        if isinstance(a, FinitePart):
            if a.k != -1.0:
                raise ValueError("apply_via_pdo needs a bounded sigma: finite parts other than k = -1 are unbounded")
            if a.alpha < 0:
                raise ValueError("apply_via_pdo needs supp sigma in [0, inf)")
            funcs.append(lambda lam, a=a: np.where(lam >= a.alpha, a.coeff * np.exp(-a.r * (lam - a.alpha)), 0.0))
            if a.alpha > 0:
                breaks.append(a.alpha)
        else:
            if a.lower < 0:
                raise ValueError("apply_via_pdo needs supp sigma in [0, inf)")
            vals = a(np.logspace(-8, 8, 2001)) if not a.on_grid else a.density.values
            if not np.all(np.isfinite(vals)):
                raise ValueError("apply_via_pdo needs a bounded sigma")
            funcs.append(a)
            for e in (a.lower, a.upper):
                if 0 < e < math.inf:
                    breaks.append(e)
    return funcs, sorted(set(breaks))


class _PDO:
    """Mellin-side data of H f for one bounded sigma.

    All transforms are direct quadratures: xi on [-40, 40] (trapezoid),
    y = ln lambda piecewise Gauss-Legendre between the jumps of sigma.  Working with
    quadrature instead of FFT keeps jumps of sigma exact and avoids the
    periodization of slowly decaying tails.
    """

    def __init__(self, sigma: SigmaDistribution, y_min: float = -50.0, y_max: float = 8.0):
        self.funcs, breaks = _bounded_pieces(sigma)
        self.xi, self.wxi = _xi_rule()
        edges = [y_min] + [math.log(b) for b in breaks if y_min < math.log(b) < y_max] + [y_max]
        ys, ws = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            panels = max(4, int(math.ceil((hi - lo) * 3)))
            y, w = composite_nodes(lo, hi, panels)
            ys.append(y)
            ws.append(w)
        self.y = np.concatenate(ys)
        self.wy = np.concatenate(ws)
        lam = np.exp(self.y)
        s = np.zeros(lam.size)
        for fn in self.funcs:
            s = s + np.real(np.asarray(fn(lam)))
        self.s = s
        # phase of Gamma(1/2 - i xi): |.| = v(xi)
        self.gam = np.exp(loggamma(0.5 - 1j * self.xi))
        self.fwd = np.exp(-1j * np.outer(self.xi, self.y))  # xi x y
        self.inv = np.ascontiguousarray(self.fwd.conj().T)
        self._mf: dict = {}

    def mellin_f(self, f: TestFunction) -> np.ndarray:
        if f not in self._mf:
            self._mf[f] = _mellin_direct(f, self.xi)
        return self._mf[f]

    def mellin_hf(self, f: TestFunction) -> np.ndarray:
        if not self.funcs:
            return np.zeros(self.xi.size, dtype=complex)
        # M(L f)(xi) = Gamma(1/2 - i xi) (M f)(-xi)
        g = self.gam * self.mellin_f(f)[::-1]
        # U(L f)(y) by the inverse transform, then multiply by s(y) = sigma(e^y)
        ulf = (self.inv @ (self.wxi * g)) / math.sqrt(2 * math.pi)
        m_slf = self.fwd @ (self.wy * self.s * ulf) / math.sqrt(2 * math.pi)
        # reflect: evaluate M(sigma L f) at -xi (the xi rule is symmetric)
        return self.gam * m_slf[::-1]


def pdo_form(sigma: SigmaDistribution, f: TestFunction, g: TestFunction, plan: _PDO | None = None) -> float:
    """(H f, g) through the Mellin representation (Parseval on the xi side)."""
    plan = plan if plan is not None else _PDO(sigma)
    hf = plan.mellin_hf(f)
    mg = plan.mellin_f(g)
    return float(np.real(np.sum(plan.wxi * hf * np.conj(mg))))


def pdo_gram(sigma: SigmaDistribution, basis) -> np.ndarray:
    """Matrix (H f_j, f_i) over a basis, sharing one plan."""
    basis = _as_basis(basis)
    plan = _PDO(sigma)
    hf = [plan.mellin_hf(f) for f in basis]
    mf = [plan.mellin_f(f) for f in basis]
    n = len(basis)
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            g[i, j] = float(np.real(np.sum(plan.wxi * hf[j] * np.conj(mf[i]))))
    return g


def apply_via_pdo(sigma: SigmaDistribution, f: TestFunction, t=None, plan: _PDO | None = None):
    """H f sampled at the points t (default: a log-spaced set on [1e-3, 1e3]).

    Returns (t, values).  sigma must be bounded with support in [0, inf):
    regular densities and constant finite-part atoms (k = -1).
    """
    plan = plan if plan is not None else _PDO(sigma)
    t = np.logspace(-3, 3, 241) if t is None else np.asarray(t, dtype=float)
    hf = plan.mellin_hf(f)
    # (H f)(t) = t^{-1/2} (2 pi)^{-1/2} int M(Hf)(xi) t^{i xi} d xi
    vals = np.exp(1j * np.outer(np.log(t), plan.xi)) @ (plan.wxi * hf) / math.sqrt(2 * math.pi)
    return t, np.real(vals) * t**-0.5
