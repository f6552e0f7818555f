"""Special functions used throughout the package.

Everything here is self-contained: the complex gamma function comes from a
Lanczos rational approximation, Laguerre and Meixner-Pollaczek polynomials
from their three-term recurrences.  Functions accept scalars or numpy arrays;
scalar input gives a Python scalar back.
"""

from __future__ import annotations

import cmath
import math

import numpy as np

__all__ = [
    "GammaPoleError",
    "gamma",
    "loggamma",
    "rgamma",
    "gamma_half_modulus",
    "laguerre",
    "laguerre_table",
    "laguerre_basis_fn",
    "meixner_pollaczek",
    "hyp_terminating",
]


class GammaPoleError(ValueError):
    """Raised when gamma is evaluated on its pole set."""


# Godfrey's coefficients for g = 607/128 (15 terms); relative error ~1e-15
# in the right half-plane.
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_C = np.array([
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
])
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
_LOG_PI = math.log(math.pi)


def _lanczos_loggamma(z: np.ndarray) -> np.ndarray:
    # valid for Re z >= 1/2
    zm = z - 1.0
    acc = np.full(z.shape, _LANCZOS_C[0], dtype=complex)
    for k in range(1, _LANCZOS_C.size):
        acc = acc + _LANCZOS_C[k] / (zm + k)
    t = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(acc)


def _log_sin_pi(z: np.ndarray) -> np.ndarray:
    """log sin(pi z) without overflow for large |Im z|."""
    w = np.pi * z
    out = np.empty(z.shape, dtype=complex)
    small = np.abs(w.imag) <= 1.0
    out[small] = np.log(np.sin(w[small]))
    up = w.imag > 1.0
    wu = w[up]
    out[up] = -1j * wu + np.log(0.5j * (1.0 - np.exp(2j * wu)))
    dn = w.imag < -1.0
    wd = w[dn]
    out[dn] = 1j * wd + np.log((1.0 - np.exp(-2j * wd)) / 2j)
    return out


def _check_poles(z: np.ndarray) -> None:
    re = z.real
    bad = (z.imag == 0.0) & (re <= 0.0) & (re == np.round(re))
    if np.any(bad):
        raise GammaPoleError(f"gamma has a pole at z = {z[bad][0].real:g}")


def _as_complex_array(z):
    scalar = np.ndim(z) == 0
    return np.atleast_1d(np.asarray(z, dtype=complex)), scalar


def _loggamma_array(z: np.ndarray) -> np.ndarray:
    _check_poles(z)
    out = np.empty(z.shape, dtype=complex)
    right = z.real >= 0.5
    out[right] = _lanczos_loggamma(z[right])
    left = ~right
    if np.any(left):
        zl = z[left]
        out[left] = _LOG_PI - _log_sin_pi(zl) - _lanczos_loggamma(1.0 - zl)
    return out


def loggamma(z):
    """A logarithm of Gamma(z); exp(loggamma(z)) == gamma(z).

    The imaginary part is not normalized to the principal branch.
    """
    arr, scalar = _as_complex_array(z)
    out = _loggamma_array(arr)
    return complex(out[0]) if scalar else out


def gamma(z):
    """Euler gamma function for complex (or real) arguments."""
    arr, scalar = _as_complex_array(z)
    out = np.exp(_loggamma_array(arr))
    if np.isrealobj(z) or (np.ndim(z) == 0 and isinstance(z, (int, float))):
        out = out.real
    if scalar:
        v = out[0]
        return float(v) if isinstance(v, (float, np.floating)) else complex(v)
    return out


def rgamma(x: float) -> float:
    """1/Gamma(x) for real x, zero on the pole set."""
    if x <= 0 and x == math.floor(x):
        return 0.0
    return 1.0 / gamma(float(x))


def gamma_half_modulus(xi):
    """|Gamma(1/2 + i xi)| = sqrt(pi / cosh(pi xi)), overflow-free."""
    a = np.pi * np.abs(np.asarray(xi, dtype=float))
    e = np.exp(-a)
    return np.sqrt(np.pi * 2.0 * e / (1.0 + e * e))


def laguerre(n: int, kappa: float, t):
    """Generalized Laguerre polynomial L_n^kappa(t) by forward recurrence.

    Complex t is accepted (used for complex-step derivatives).
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if kappa <= -1:
        raise ValueError("kappa must exceed -1")
    if n > 4096:
        raise ValueError("n exceeds the recurrence budget of 4096")
    t_arr = np.asarray(t)
    t_arr = t_arr.astype(complex if np.iscomplexobj(t_arr) else float)
    scalar = complex if np.iscomplexobj(t_arr) else float
    prev = np.ones_like(t_arr)
    if n == 0:
        return scalar(prev) if t_arr.ndim == 0 else prev
    cur = 1.0 + kappa - t_arr
    for j in range(1, n):
        prev, cur = cur, ((2 * j + kappa + 1 - t_arr) * cur - (j + kappa) * prev) / (j + 1)
    return scalar(cur) if t_arr.ndim == 0 else cur


def laguerre_table(n_max: int, kappa: float, t, log_prefactor=None, normalized=False):
    """Rows p(t)*L_n^kappa(t) for n = 0..n_max, with p = exp(log_prefactor).

    The recurrence runs on rescaled values with a running log-scale per
    column, so huge polynomial values times tiny prefactors (Gauss-Laguerre
    weights, e^{-t/2}) never overflow.  With ``normalized`` each row carries
    the factor sqrt(n!/Gamma(n+1+kappa)).
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    logp = np.zeros_like(t) if log_prefactor is None else np.asarray(log_prefactor, dtype=float) + 0 * t
    out = np.zeros((n_max + 1, t.size))
    scale = logp.copy()
    if normalized:
        scale = scale - 0.5 * math.lgamma(1.0 + kappa)
    prev = np.zeros_like(t)
    cur = np.ones_like(t)
    out[0] = np.exp(scale)
    for j in range(n_max):
        # plain recurrence: (j+1) L_{j+1} = (2j+k+1-t) L_j - (j+k) L_{j-1}
        a = (2 * j + kappa + 1 - t) / (j + 1)
        b = (j + kappa) / (j + 1)
        if normalized:
            # u_{j+1}/u_j carries sqrt((j+1)/(j+1+k))
            r1 = math.sqrt((j + 1) / (j + 1 + kappa))
            r0 = math.sqrt(j / (j + kappa)) if j > 0 else 0.0
            nxt = a * r1 * cur - b * r1 * r0 * prev
        else:
            nxt = a * cur - b * prev
        prev, cur = cur, nxt
        big = np.maximum(np.abs(cur), np.abs(prev))
        rescale = big > 1e100
        if np.any(rescale):
            f = big[rescale]
            cur[rescale] /= f
            prev[rescale] /= f
            scale[rescale] += np.log(f)
        with np.errstate(under="ignore"):
            out[j + 1] = cur * np.exp(scale)
    return out


def laguerre_basis_fn(n: int, kappa: float, t):
    """Orthonormal Laguerre function u_n^kappa(t) on (0, inf)."""
    if n > 4096:
        raise ValueError("n exceeds the recurrence budget of 4096")
    t_arr = np.asarray(t, dtype=float)
    flat = np.atleast_1d(t_arr)
    if kappa == 0:
        logp = -0.5 * flat
    else:
        with np.errstate(divide="ignore"):
            logp = 0.5 * kappa * np.log(flat) - 0.5 * flat
    rows = laguerre_table(n, kappa, flat, logp, normalized=True)
    if kappa > 0:
        rows[:, flat == 0.0] = 0.0
    val = rows[n]
    return float(val[0]) if t_arr.ndim == 0 else val


def meixner_pollaczek(n: int, xi, method: str = "recurrence"):
    """Meixner-Pollaczek polynomial P_n(xi) = P_n^{(1)}(xi; pi/2).

    ``recurrence`` uses (n+1)P_{n+1} = 2 xi P_n - (n+1) P_{n-1}.  ``sum``
    evaluates the explicit alternating sum with compensated accumulation;
    it loses all digits once n grows past ~40 and is kept as a check.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n > 512:
        raise ValueError("n exceeds the supported range of 512")
    if method == "sum":
        return _mp_sum(n, float(xi))
    if method != "recurrence":
        raise ValueError(f"unknown method {method!r}")
    x = np.asarray(xi, dtype=float)
    prev = np.ones_like(x)
    cur = 2.0 * x
    if n == 0:
        cur = prev
    for j in range(1, n):
        prev, cur = cur, (2.0 * x * cur - (j + 1) * prev) / (j + 1)
    if x.ndim == 0:
        return complex(float(cur), 0.0)
    return cur.astype(complex)


def _mp_sum(n: int, xi: float) -> complex:
    re_terms, im_terms = [], []
    poch = complex(1.0, 0.0)
    coef = 1.0  # 2^m / m!
    for m in range(n + 1):
        if m > 0:
            poch *= complex(m, xi)
            coef *= 2.0 / m
        term = (-1) ** m * coef * math.comb(n + 1, m + 1) * poch
        if not cmath.isfinite(term):
            raise OverflowError("Pochhammer product overflowed")
        re_terms.append(term.real)
        im_terms.append(term.imag)
    s = complex(math.fsum(re_terms), math.fsum(im_terms))
    return (1j ** n) * s


def hyp_terminating(n: int, b: float, c: float, z: float) -> float:
    """Terminating Gauss series F(-n, b; c; z) as an exact (n+1)-term sum."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if c <= 0 and c == math.floor(c) and -c < n:
        raise ZeroDivisionError(f"Pochhammer (c)_m vanishes for c = {c:g} before truncation")
    terms = [1.0]
    term = 1.0
    for m in range(n):
        term *= (m - n) * (b + m) / ((c + m) * (m + 1)) * z
        terms.append(term)
    return math.fsum(terms)
