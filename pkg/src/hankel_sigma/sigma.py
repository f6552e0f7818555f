"""Sigma-functions as explicit distributions.

A sigma-function is stored as a list of atoms:

* ``Regular``: a locally integrable density (callable or grid samples);
* ``FinitePart``: coeff * (lambda - alpha)_+^{-k-1} e^{-r (lambda - alpha)}, k not in Z_+;
* ``DeltaDerivative``: coeff * delta^{(j)}(lambda - alpha) e^{-r (lambda - alpha)}.

The kernel b (t + r)^k e^{-alpha t} has sigma-function b/Gamma(-k) times the
finite-part atom, or b times the delta atom of order k when k is a
nonnegative integer.

Test functions on the lambda side follow a small protocol: a method
``derivatives(lam, order)`` returning the array of jets (leading axis is
the derivative order), an optional ``support`` tuple (``None`` for entire
functions), an optional ``budget`` (highest available order) and an
optional ``scale`` (decay length used to map a half-line).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from ._quad import integrate, integrate_power, integrate_to_inf
from .specfun import gamma as _gamma
from .specfun import rgamma
from .transforms import DerivativeBudgetError, GridFunction, LogGrid

__all__ = [
    "Regular",
    "FinitePart",
    "DeltaDerivative",
    "SigmaDistribution",
    "KernelTerm",
    "KernelSpec",
    "SpectralPrediction",
    "JetProduct",
    "RationalWeight",
    "quasi_carleman_sigma",
    "pair",
    "shift_damp",
    "predicted_counts",
    "dominance_holds",
    "positivity_check",
    "widom_bounded",
    "WidomResult",
    "symbol_from_sigma",
]

INFINITE = math.inf


def _is_nonneg_int(k: float) -> bool:
    return k >= 0 and float(k).is_integer()


# -- atoms --------------------------------------------------------------------

@dataclass(frozen=True)
class FinitePart:
    alpha: float
    k: float
    r: float = 0.0
    coeff: float = 1.0

    def __post_init__(self):
        if _is_nonneg_int(self.k):
            raise ValueError(f"finite part needs k outside Z_+, got k = {self.k:g}; use DeltaDerivative")
        if self.r < 0 or not math.isfinite(self.alpha):
            raise ValueError("damping must be nonnegative and alpha finite")

    def to_json(self) -> dict:
        return {"kind": "finite_part", "alpha": self.alpha, "k": self.k, "r": self.r, "coeff": self.coeff}


@dataclass(frozen=True)
class DeltaDerivative:
    alpha: float
    order: int = 0
    r: float = 0.0
    coeff: float = 1.0

    def __post_init__(self):
        if self.order < 0 or int(self.order) != self.order:
            raise ValueError("delta order must be a nonnegative integer")
        object.__setattr__(self, "order", int(self.order))
        if self.r < 0 or not math.isfinite(self.alpha):
            raise ValueError("damping must be nonnegative and alpha finite")

    def to_json(self) -> dict:
        return {"kind": "delta", "alpha": self.alpha, "order": self.order, "r": self.r, "coeff": self.coeff}


@dataclass(frozen=True)
class Regular:
    """A density given either by grid samples or by a vectorized callable.

    A callable density lives on [lower, upper] (either may be infinite);
    ``scale`` is its decay length, used when a half-line has to be mapped.
    """

    density: object
    lower: float = 0.0
    upper: float = math.inf
    scale: float = 1.0

    def __post_init__(self):
        if isinstance(self.density, GridFunction):
            pts = self.density.points
            object.__setattr__(self, "lower", float(pts[0]))
            object.__setattr__(self, "upper", float(pts[-1]))
        elif not callable(self.density):
            raise TypeError("density must be a GridFunction or a callable")
        if not self.lower < self.upper:
            raise ValueError("empty support")

    @property
    def on_grid(self) -> bool:
        return isinstance(self.density, GridFunction)

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=float)
        if self.on_grid:
            return np.asarray(self.density(lam))
        inside = (lam >= self.lower) & (lam <= self.upper)
        out = np.zeros(lam.shape, dtype=complex if np.iscomplexobj(self.density(np.array([self.lower if np.isfinite(self.lower) else 0.0]))) else float)
        if np.any(inside):
            out[inside] = self.density(lam[inside])
        return out

    def sample(self, grid: LogGrid) -> "Regular":
        pts = grid.points
        return Regular(GridFunction(grid, self(pts), "lambda" if grid.log else "linear"))

    def to_json(self) -> dict:
        if not self.on_grid:
            raise ValueError("a callable density must be sampled on a grid before serialization")
        return {"kind": "regular", **self.density.to_json()}


def _atom_from_json(d: dict):
    kind = d.get("kind")
    if kind == "finite_part":
        return FinitePart(float(d["alpha"]), float(d["k"]), float(d.get("r", 0.0)), float(d.get("coeff", 1.0)))
    if kind == "delta":
        return DeltaDerivative(float(d["alpha"]), int(d.get("order", 0)), float(d.get("r", 0.0)),
                               float(d.get("coeff", 1.0)))
    if kind == "regular":
        body = {key: v for key, v in d.items() if key != "kind"}
        return Regular(GridFunction.from_json(body))
    raise ValueError(f"unknown atom kind {kind!r}")


@dataclass(frozen=True)
class SigmaDistribution:
    atoms: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "atoms", tuple(self.atoms))
        for a in self.atoms:
            if not isinstance(a, (Regular, FinitePart, DeltaDerivative)):
                raise TypeError(f"not a sigma atom: {a!r}")

    def __add__(self, other: "SigmaDistribution") -> "SigmaDistribution":
        return SigmaDistribution(self.atoms + other.atoms)

    def scaled(self, c: float) -> "SigmaDistribution":
        out = []
        for a in self.atoms:
            if isinstance(a, Regular):
                dens = a.density
                if a.on_grid:
                    out.append(Regular(GridFunction(dens.grid, c * dens.values, dens.variable)))
                else:
                    out.append(Regular(lambda x, f=dens: c * f(x), a.lower, a.upper, a.scale))
            else:
                out.append(type(a)(a.alpha, a.k if isinstance(a, FinitePart) else a.order, a.r, c * a.coeff))
        return SigmaDistribution(out)

    def pair(self, w) -> complex | float:
        return pair(self, w)

    def to_json(self) -> dict:
        return {"atoms": [a.to_json() for a in self.atoms]}

    @classmethod
    def from_json(cls, d: dict) -> "SigmaDistribution":
        return cls(tuple(_atom_from_json(a) for a in d["atoms"]))


def quasi_carleman_sigma(alpha: float, r: float, k: float, b: float = 1.0) -> SigmaDistribution:
    """Sigma-function of b (t + r)^k e^{-alpha t}."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    if _is_nonneg_int(k):
        return SigmaDistribution((DeltaDerivative(alpha, int(k), r, b),))
    return SigmaDistribution((FinitePart(alpha, k, r, b * rgamma(-k)),))


# -- lambda-side test functions -------------------------------------------------

class JetProduct:
    """Pointwise product w1 * w2 with jets by the Leibniz rule."""

    def __init__(self, w1, w2):
        self.w1, self.w2 = w1, w2
        s1, s2 = getattr(w1, "support", None), getattr(w2, "support", None)
        if s1 is None:
            self.support = s2
        elif s2 is None:
            self.support = s1
        else:
            self.support = (max(s1[0], s2[0]), min(s1[1], s2[1]))
        self.budget = min(getattr(w1, "budget", math.inf), getattr(w2, "budget", math.inf))
        sc = [getattr(w, "scale", None) for w in (w1, w2)]
        sc = [s for s in sc if s is not None]
        # the product decays at the sum of the rates
        self.scale = 1.0 / sum(1.0 / s for s in sc) if sc else 1.0

    def derivatives(self, lam, order: int) -> np.ndarray:
        a = self.w1.derivatives(lam, order)
        b = self.w2.derivatives(lam, order)
        out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dtype=np.result_type(a, b))
        for p in range(order + 1):
            for j in range(p + 1):
                out[p] = out[p] + math.comb(p, j) * a[j] * b[p - j]
        return out

    def __call__(self, lam):
        return self.derivatives(lam, 0)[0]


class RationalWeight:
    """w(lambda) = 1/(lambda + mu1) - 1/(lambda + mu2) on lambda > -min(mu)."""

    support = None
    budget = math.inf

    def __init__(self, mu1: float, mu2: float):
        if mu1 <= 0 or mu2 <= 0:
            raise ValueError("mu1, mu2 must be positive")
        self.mu1, self.mu2 = float(mu1), float(mu2)
        self.scale = max(self.mu1, self.mu2, 1.0)

    def derivatives(self, lam, order: int) -> np.ndarray:
        lam = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.empty((order + 1, lam.size))
        for p in range(order + 1):
            c = (-1) ** p * math.factorial(p)
            out[p] = c * ((lam + self.mu1) ** (-p - 1) - (lam + self.mu2) ** (-p - 1))
        return out

    def __call__(self, lam):
        return self.derivatives(lam, 0)[0]


def _jets(w, lam, order: int) -> np.ndarray:
    budget = getattr(w, "budget", math.inf)
    if order > budget:
        raise DerivativeBudgetError(f"pairing needs {order} derivatives, the test function provides {budget}")
    return np.conj(np.asarray(w.derivatives(lam, order)))


def _damped_jet(w, lam, order: int, alpha: float, r: float) -> np.ndarray:
    """order-th derivative of e^{-r (lam - alpha)} conj(w)(lam)."""
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    jets = _jets(w, lam, order)
    acc = np.zeros(jets.shape[1:], dtype=jets.dtype)
    for j in range(order + 1):
        acc = acc + math.comb(order, j) * (-r) ** (order - j) * jets[j]
    with np.errstate(over="ignore", invalid="ignore"):
        return acc * np.exp(-r * (lam - alpha))


def _clean(fun):
    def wrapped(x):
        with np.errstate(over="ignore", invalid="ignore", under="ignore"):
            v = fun(x)
        return np.where(np.isfinite(v), v, 0.0)

    return wrapped


def _half_line(fun, a: float, b: float, scale: float) -> complex | float:
    """int_a^b fun with b possibly infinite."""
    if b <= a:
        return 0.0
    if math.isfinite(b):
        return integrate(_clean(fun), a, b)
    return integrate_to_inf(_clean(fun), a, scale)


def _power_integral(g, beta: float, length: float, scale: float) -> complex | float:
    """int_0^length x^beta g(x) dx with an endpoint singularity at 0 (length may be inf)."""
    head = min(0.25 * length, scale) if math.isfinite(length) else scale
    val = integrate_power(_clean(g), head, beta)
    if length > head:
        val = val + _half_line(lambda x: x**beta * g(x), head, length, scale)
    return val


def _pair_finite_part(atom: FinitePart, w):
    alpha, k, r = atom.alpha, atom.k, atom.r
    a = -k - 1.0
    supp = getattr(w, "support", None)
    lo, hi = (-math.inf, math.inf) if supp is None else supp
    scale = getattr(w, "scale", 1.0) or 1.0
    if r > 0:
        scale = min(scale, 1.0 / r)
    if hi <= alpha:
        return 0.0
    if lo > alpha:
        # psi vanishes near alpha: the finite part is the plain integral
        val = integrate(_clean(lambda lam: (lam - alpha) ** a * _damped_jet(w, lam, 0, alpha, r)), lo, hi)
        return atom.coeff * val
    if k < 0:
        val = _power_integral(lambda x: _damped_jet(w, alpha + x, 0, alpha, r), a, hi - alpha, scale)
        return atom.coeff * val
    # integrate by parts n0 + 1 times: no Taylor subtraction, no cancellation
    n0 = math.floor(k)
    denom = 1.0
    for i in range(n0 + 1):
        denom *= (i - k)
    val = _power_integral(lambda x: _damped_jet(w, alpha + x, n0 + 1, alpha, r), n0 - k, hi - alpha, scale)
    return atom.coeff * (-1) ** (n0 + 1) / denom * val


def _pair_delta(atom: DeltaDerivative, w):
    j = atom.order
    val = _damped_jet(w, np.array([atom.alpha]), j, atom.alpha, atom.r)[0]
    return atom.coeff * (-1) ** j * val


def _grid_weights(gf: GridFunction) -> np.ndarray:
    g = gf.grid
    w = np.full(g.n_points, g.dx)
    if g.log:
        w = w * gf.points
    return w


def _pair_regular(atom: Regular, w):
    if atom.on_grid:
        gf = atom.density
        lam = gf.points
        vals = _jets(w, lam, 0)[0]
        return np.sum(gf.values * vals * _grid_weights(gf))
    supp = getattr(w, "support", None)
    lo, hi = atom.lower, atom.upper
    if supp is not None:
        lo, hi = max(lo, supp[0]), min(hi, supp[1])
    if hi <= lo:
        return 0.0
    scale = min(atom.scale, getattr(w, "scale", atom.scale) or atom.scale)

    def f(lam):
        return atom.density(lam) * _jets(w, lam, 0)[0]

    if math.isfinite(lo):
        return _half_line(f, lo, hi, scale)
    # (-inf, hi]: reflect
    mid = min(0.0, hi)
    left = integrate_to_inf(_clean(lambda x: f(mid - x)), 0.0, scale)
    return left + _half_line(f, mid, hi, scale)


def pair(sigma: SigmaDistribution, w) -> complex | float:
    """<sigma, w>: linear in sigma, antilinear in w."""
    total = 0.0
    for atom in sigma.atoms:
        if atom_coeff_is_zero(atom):
            continue
        if isinstance(atom, FinitePart):
            total = total + _pair_finite_part(atom, w)
        elif isinstance(atom, DeltaDerivative):
            total = total + _pair_delta(atom, w)
        else:
            total = total + _pair_regular(atom, w)
    total = complex(total)
    return total.real if total.imag == 0.0 else total


def atom_coeff_is_zero(atom) -> bool:
    return not isinstance(atom, Regular) and atom.coeff == 0.0


def shift_damp(sigma: SigmaDistribution, alpha: float, r: float) -> SigmaDistribution:
    """e^{-r (lambda - alpha)} sigma(lambda - alpha)."""
    if r < 0:
        raise ValueError("r must be nonnegative")
    out = []
    for a in sigma.atoms:
        if isinstance(a, FinitePart):
            out.append(FinitePart(a.alpha + alpha, a.k, a.r + r, a.coeff * math.exp(-r * a.alpha)))
        elif isinstance(a, DeltaDerivative):
            out.append(DeltaDerivative(a.alpha + alpha, a.order, a.r + r, a.coeff * math.exp(-r * a.alpha)))
        else:
            dens = a.density
            if a.on_grid and alpha == 0 and r == 0:
                out.append(a)
                continue

            def moved(lam, d=dens):
                with np.errstate(over="ignore"):
                    return np.exp(-r * (lam - alpha)) * np.asarray(d(lam - alpha))

            out.append(Regular(moved, a.lower + alpha, a.upper + alpha, a.scale))
    return SigmaDistribution(out)


# -- kernels ------------------------------------------------------------------

@dataclass(frozen=True)
class KernelTerm:
    """b (t + r)^k e^{-alpha t}."""

    b: float
    alpha: float
    r: float
    k: float

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("r must be nonnegative")

    def __call__(self, t):
        t = np.asarray(t)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.b * (t + self.r) ** self.k * np.exp(-self.alpha * t)

    def to_json(self) -> dict:
        return {"b": self.b, "alpha": self.alpha, "r": self.r, "k": self.k}


@dataclass(frozen=True)
class KernelSpec:
    """A Hankel kernel: a finite sum of quasi-Carleman terms or a tabulated callable.

    Tabulated kernels declare their power at 0 (``singularity``), their
    power at infinity (``tail_power``), their exponential ``decay_rate``,
    and whether they grow (``two_sided``: sigma supported on all of R).
    """

    terms: tuple = ()
    func: object = None
    singularity_: float | None = None
    tail_power_: float | None = None
    decay_rate_: float | None = None
    two_sided: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.func is None and not self.terms and not self.name == "zero":
            object.__setattr__(self, "name", self.name or "zero")
        if self.func is not None and self.terms:
            raise ValueError("give either terms or a tabulated function, not both")

    @classmethod
    def quasi_carleman(cls, alpha: float, r: float, k: float, b: float = 1.0) -> "KernelSpec":
        return cls((KernelTerm(b, alpha, r, k),))

    @classmethod
    def tabulated(cls, func, singularity: float = 0.0, tail_power: float | None = None,
                  decay_rate: float = 0.0, two_sided: bool = False, name: str = "") -> "KernelSpec":
        return cls((), func, singularity, tail_power, decay_rate, two_sided, name)

    @property
    def is_catalog(self) -> bool:
        return self.func is None

    @property
    def singularity(self) -> float:
        if self.singularity_ is not None:
            return self.singularity_
        ks = [t.k for t in self.terms if t.r == 0 and t.b != 0]
        return min(min(ks), 0.0) if ks else 0.0

    @property
    def decay_rate(self) -> float:
        if self.decay_rate_ is not None:
            return self.decay_rate_
        return min((t.alpha for t in self.terms if t.b != 0), default=0.0)

    @property
    def tail_power(self) -> float | None:
        if self.func is not None:
            return self.tail_power_
        rate = self.decay_rate
        ks = [t.k for t in self.terms if t.alpha == rate and t.b != 0]
        return max(ks) if ks else None

    def __call__(self, t):
        if self.func is not None:
            return self.func(t)
        t = np.asarray(t)
        out = np.zeros(t.shape, dtype=complex if np.iscomplexobj(t) else float)
        for term in self.terms:
            out = out + term(t)
        return out

    def sigma(self) -> SigmaDistribution:
        if not self.is_catalog:
            raise ValueError("tabulated kernels have no symbolic sigma-function")
        out = SigmaDistribution()
        for t in self.terms:
            out = out + quasi_carleman_sigma(t.alpha, t.r, t.k, t.b)
        return out

    def to_json(self) -> dict:
        if not self.is_catalog:
            raise ValueError("tabulated kernels are not serializable")
        return {"terms": [t.to_json() for t in self.terms]}

    @classmethod
    def from_json(cls, d: dict) -> "KernelSpec":
        terms = []
        for item in d["terms"]:
            unknown = set(item) - {"b", "alpha", "r", "k"}
            if unknown:
                raise ValueError(f"unknown kernel-term keys: {sorted(unknown)}")
            terms.append(KernelTerm(float(item.get("b", 1.0)), float(item.get("alpha", 0.0)),
                                    float(item.get("r", 0.0)), float(item["k"])))
        return cls(tuple(terms))


# -- sign counts ----------------------------------------------------------------

@dataclass(frozen=True)
class SpectralPrediction:
    """Predicted (N+, N-); ``math.inf`` marks an infinite count.

    ``predicted`` is False when the kernel lies outside every covered
    case; ``basis`` names the result the prediction rests on.
    """

    n_plus: float | None
    n_minus: float | None
    basis: str = ""
    predicted: bool = True

    def __post_init__(self):
        for v in (self.n_plus, self.n_minus):
            if v is not None and v != INFINITE and (v < 0 or int(v) != v):
                raise ValueError("finite counts must be nonnegative integers")

    @classmethod
    def none(cls, reason: str) -> "SpectralPrediction":
        return cls(None, None, reason, False)

    def to_json(self) -> dict:
        def enc(v):
            return "infinite" if v == INFINITE else (None if v is None else int(v))

        return {"predicted": self.predicted, "n_plus": enc(self.n_plus), "n_minus": enc(self.n_minus),
                "basis": self.basis}


def _delta_counts(order: int, c: float) -> tuple[float, float]:
    # rank-(order+1) form
    if order % 2 == 0:
        pos, neg = order // 2 + 1, order // 2
    else:
        pos = neg = (order + 1) // 2
    return (pos, neg) if c > 0 else (neg, pos)


def dominance_holds(k: float, perturbations, mu=None) -> bool:
    """1 + sum a_j Gamma(-k)/Gamma(-k_j) mu^{k-k_j} >= 0 for all mu > 0.

    ``perturbations`` is a list of (a_j, k_j) relative to a unit leading
    coefficient; integer k_j contribute nothing away from the singular point.
    """
    mu = np.logspace(-6, 6, 4096) if mu is None else np.asarray(mu)
    g = _gamma(-k)
    acc = np.ones_like(mu)
    for a, kj in perturbations:
        if _is_nonneg_int(kj):
            continue
        acc = acc + a * g / _gamma(-kj) * mu ** (k - kj)
    return bool(np.all(acc >= -1e-12))


def _point_counts(group: list) -> tuple[float, float] | str:
    """Counts contributed by the terms sitting at one singular point."""
    if len(group) == 1:
        t = group[0]
        if _is_nonneg_int(t.k):
            return _delta_counts(int(t.k), t.b)
        if t.k < 0:
            return (INFINITE, 0) if t.b > 0 else (0, INFINITE)
        n = math.floor(t.k)
        # sign of sigma just right of alpha is sign(b / Gamma(-k)) = sign(b) (-1)^{n+1}
        lead = t.b * (-1) ** (n + 1)
        fin = n // 2 + 1
        return (INFINITE, fin) if lead > 0 else (fin, INFINITE)
    rs = {t.r for t in group}
    if len(rs) != 1:
        return "terms sharing a singular point have different shifts r"
    lead = max(group, key=lambda t: t.k)
    if sum(1 for t in group if t.k == lead.k) > 1:
        return "repeated exponents at one singular point"
    if lead.k <= 0:
        if all(not _is_nonneg_int(t.k) for t in group):
            signs = {t.b > 0 for t in group}
            if len(signs) == 1:
                return (INFINITE, 0) if signs.pop() else (0, INFINITE)
        return "mixed-sign or mixed-type terms with nonpositive exponents"
    if _is_nonneg_int(lead.k):
        return "a delta-type leading term with perturbations"
    others = [(t.b / lead.b, t.k) for t in group if t is not lead]
    if not dominance_holds(lead.k, others):
        return "the dominance condition for the leading singularity fails"
    return _point_counts([lead])


def predicted_counts(spec: KernelSpec) -> SpectralPrediction:
    """(N+, N-) for sums of quasi-Carleman terms.

    Terms are grouped by their exponential rate alpha (the singular points
    of sigma).  Each point contributes independently: a delta of order n
    gives a rank n+1 block, a non-integer k > 0 gives [n/2] + 1 on the side
    opposite to the blow-up of sigma and infinity on the other, k < 0 gives
    a sign-definite density.  Several terms at one point are covered when
    the highest exponent dominates.  The result does not depend on a common
    shift of all alpha.
    """
    if not spec.is_catalog:
        return SpectralPrediction.none("tabulated kernel")
    terms = [t for t in spec.terms if t.b != 0]
    if not terms:
        return SpectralPrediction(0, 0, "zero kernel")
    groups: dict[float, list] = {}
    for t in terms:
        groups.setdefault(t.alpha, []).append(t)
    plus = minus = 0
    for alpha in sorted(groups):
        res = _point_counts(groups[alpha])
        if isinstance(res, str):
            return SpectralPrediction.none(res)
        plus += res[0]
        minus += res[1]
    if len(terms) == 1:
        t = terms[0]
        basis = "finite rank" if _is_nonneg_int(t.k) else ("positive form" if t.k < 0 else "single singularity")
    else:
        basis = "independent singularities" if len(groups) > 1 else "dominant singularity"
    return SpectralPrediction(plus, minus, basis)


# -- diagnostics ----------------------------------------------------------------

def positivity_check(sigma: SigmaDistribution, tol: float = 1e-12) -> bool:
    """True when every atom is a nonnegative measure."""
    for a in sigma.atoms:
        if isinstance(a, FinitePart):
            if a.coeff == 0:
                continue
            if a.k >= 0 or a.coeff < 0:
                return False
        elif isinstance(a, DeltaDerivative):
            if a.coeff == 0:
                continue
            if a.order > 0 or a.coeff < 0:
                return False
        else:
            if a.on_grid:
                vals = np.asarray(a.density.values)
            else:
                lo = a.lower if math.isfinite(a.lower) else -40.0 * a.scale
                hi = a.upper if math.isfinite(a.upper) else lo + 80.0 * a.scale
                vals = np.asarray(a(np.linspace(lo, hi, 4001)))
            if np.any(np.abs(vals.imag) > tol * max(1.0, np.max(np.abs(vals)))) if np.iscomplexobj(vals) else False:
                return False
            if np.min(vals.real) < -tol * max(1.0, np.max(np.abs(vals))):
                return False
    return True


@dataclass(frozen=True)
class WidomResult:
    bounded: bool
    constant: float
    slope_left: float
    slope_right: float

    def __bool__(self) -> bool:
        return self.bounded

    def to_json(self) -> dict:
        return {"bounded": self.bounded, "constant": self.constant,
                "slope_left": self.slope_left, "slope_right": self.slope_right}


def _measure_below(a, lam: np.ndarray) -> np.ndarray:
    """M([0, lam)) for one measure atom."""
    if isinstance(a, DeltaDerivative):
        if a.order != 0:
            raise ValueError("only order-0 delta atoms are measures")
        return np.where(lam > a.alpha, a.coeff, 0.0) if a.alpha >= 0 else np.zeros_like(lam)
    if isinstance(a, FinitePart):
        if a.k >= 0:
            raise ValueError("finite parts with k >= 0 are not measures")
        s = -a.k  # exponent of the cumulative power
        x = np.clip(lam - max(a.alpha, 0.0), 0.0, None)
        base = max(0.0, -a.alpha)
        if base > 0 and a.alpha < 0:
            # the part of the density on (alpha, 0) is not in [0, lam)
            raise ValueError("measure atoms must live on [0, inf)")
        if a.r == 0:
            return a.coeff * x**s / s
        return a.coeff * gammainc(s, a.r * x) * math.gamma(s) / a.r**s
    if a.on_grid:
        gf = a.density
        pts = gf.points
        vals = np.asarray(gf.values).real
        w = _grid_weights(gf)
        # first cell: treat sigma as a power law between 0 and the first node
        cum = np.cumsum(vals * w) - 0.5 * vals * w
        cum = cum + 0.5 * vals[0] * w[0]
        return np.interp(lam, pts, cum, left=np.nan, right=np.nan)
    out = np.empty_like(lam)
    prev, acc = max(a.lower, 0.0), 0.0
    for i, x in enumerate(lam):
        hi = min(x, a.upper)
        if hi > prev:
            acc += float(np.real(integrate(lambda s: np.real(a.density(s)), prev, hi)))
            prev = hi
        out[i] = acc
    return out


def widom_bounded(sigma: SigmaDistribution, lam=None, slope_tol: float = 0.05) -> WidomResult:
    """Numerical check of M([0, lambda)) = O(lambda).

    R(lambda) = M([0, lambda))/lambda is evaluated on a log-spaced grid; the
    measure passes when R stays bounded at both ends, judged by the
    logarithmic slope of R over the outermost decade.
    """
    for a in sigma.atoms:
        if isinstance(a, DeltaDerivative) and a.order > 0:
            raise ValueError("widom_bounded needs a measure: delta derivatives are not")
        if isinstance(a, FinitePart) and a.k >= 0:
            raise ValueError("widom_bounded needs a measure: finite parts with k >= 0 are not")
    if lam is None:
        lo, hi = -8.0, 8.0
        for a in sigma.atoms:
            if isinstance(a, Regular) and a.on_grid:
                lo = max(lo, math.log10(a.lower))
                hi = min(hi, math.log10(a.upper))
        lam = np.logspace(lo, hi, 801)
    lam = np.asarray(lam, dtype=float)
    total = np.zeros_like(lam)
    for a in sigma.atoms:
        total = total + _measure_below(a, lam)
    if np.any(total < -1e-12 * max(1.0, np.max(np.abs(total)))):
        raise ValueError("atoms do not form a positive measure")
    ratio = np.clip(total, 0.0, None) / lam
    logs = np.log10(lam)
    span = min(1.0, 0.25 * (logs[-1] - logs[0]))

    def slope(edge: int) -> float:
        other = np.argmin(np.abs(logs - (logs[edge] + (span if edge == 0 else -span))))
        r0, r1 = ratio[edge], ratio[other]
        if r0 <= 1e-300 and r1 <= 1e-300:
            return 0.0
        if r0 <= 1e-300 or r1 <= 1e-300:
            return -math.inf if (edge == 0) == (r0 <= 1e-300) else math.inf
        return float((math.log10(r1) - math.log10(r0)) / (logs[other] - logs[edge]))

    sl, sr = slope(0), slope(len(lam) - 1)
    # left: R must not blow up as lambda -> 0 (slope >= 0); right: must not grow
    bounded = sl >= -slope_tol and sr <= slope_tol
    return WidomResult(bool(bounded), float(np.max(ratio)), sl, sr)


def symbol_from_sigma(sigma: SigmaDistribution, mu1: float, mu2: float) -> float:
    """omega(mu1) - omega(mu2) = <sigma, 1/(lambda + mu1) - 1/(lambda + mu2)>."""
    for a in sigma.atoms:
        lo = a.lower if isinstance(a, Regular) else a.alpha
        if lo < 0:
            raise ValueError("symbol_from_sigma needs sigma supported in [0, inf)")
    return pair(sigma, RationalWeight(mu1, mu2))
