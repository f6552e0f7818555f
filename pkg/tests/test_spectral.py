import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from hankel_sigma.sigma import DeltaDerivative, Regular, SigmaDistribution, quasi_carleman_sigma
from hankel_sigma.spectral import (HankelSection, TestBasis, apply_via_pdo, count_signs, default_tau, eig_sym,
                                   gram_form_kernel, gram_form_sigma, matrix_from_csv, pdo_form, pdo_gram,
                                   verify_main_identity)
from hankel_sigma.transforms import TestFunction, laplace_direct

# 3 x 3 Hilbert matrix, mpmath eigenvalues at 40 digits
HILBERT3 = (0.002687340355773529231, 0.12232706585390584656, 1.4083189271236539575)

CARLEMAN = SigmaDistribution((Regular(np.ones_like),))

BASIS = TestBasis((TestFunction(0.6, 0.3), TestFunction(1.0, 0.5, (1.0, -0.7)),
                   TestFunction(1.8, 0.6, (0.4, 0.0, 1.1))))


# -- eigenvalues ---------------------------------------------------------------

def test_eig_sym_small_cases():
    assert np.allclose(eig_sym(np.diag([3.0, -1.0, 0.0])), [-1.0, 0.0, 3.0], atol=1e-15)
    assert np.allclose(eig_sym([[0.0, 1.0], [1.0, 0.0]]), [-1.0, 1.0], atol=1e-15)
    assert np.array_equal(eig_sym(np.zeros((4, 4))), np.zeros(4))
    assert eig_sym([[2.5]]) == pytest.approx([2.5])


def test_eig_sym_hilbert_oracle():
    h = 1.0 / (np.arange(3)[:, None] + np.arange(3)[None, :] + 1.0)
    assert np.allclose(eig_sym(h), HILBERT3, rtol=1e-13, atol=0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 24), st.integers(0, 2**31 - 1))
def test_eig_sym_invariants(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a = a + a.T
    e = eig_sym(a)
    scale = np.linalg.norm(a)
    assert len(e) == n and np.all(np.diff(e) >= 0)
    assert abs(np.sum(e) - np.trace(a)) <= 1e-12 * scale
    assert abs(np.sum(e**2) - np.sum(a * a)) <= 1e-12 * scale**2
    assert np.allclose(e, np.linalg.eigvalsh(a), atol=1e-12 * scale)


def test_eig_sym_rejects_bad_input():
    with pytest.raises(ValueError):
        eig_sym([[0.0, 1.0], [2.0, 0.0]])
    with pytest.raises(ValueError):
        eig_sym(np.ones((2, 3)))


def test_count_signs():
    e = [-2.0, -1e-20, 0.0, 1e-20, 0.5, 3.0]
    assert count_signs(e) == (3, 2)
    assert count_signs(e, 1e-16) == (2, 1)
    with pytest.raises(ValueError):
        count_signs(e, -1.0)


# -- Hankel sections -------------------------------------------------------------

def test_section_structure():
    q = [float(v) for v in range(7)]
    m = HankelSection(q, 4).matrix
    assert m.shape == (4, 4)
    assert all(m[i, j] == i + j for i in range(4) for j in range(4))


def test_section_truncates_and_validates():
    assert len(HankelSection(list(range(20)), 3).q) == 5
    with pytest.raises(ValueError):
        HankelSection([1.0, 2.0], 2)
    with pytest.raises(ValueError):
        HankelSection([1.0, math.nan, 1.0], 2)
    with pytest.raises(ValueError):
        HankelSection([1.0], 0)


def test_hilbert_section_is_positive():
    sec = HankelSection([1 / (n + 1) for n in range(5)], 3)
    assert np.allclose(sec.eigenvalues(), HILBERT3, rtol=1e-13)
    assert sec.counts() == (3, 0)
    assert sec.default_tau() == pytest.approx(default_tau(3, 1.0))


def test_rank_one_section():
    # q_n = mu^n: Sylvester gives exactly one positive square
    sec = HankelSection([0.7**n for n in range(15)], 8)
    assert sec.counts() == (1, 0)
    assert HankelSection([-(0.7**n) for n in range(15)], 8).counts() == (0, 1)


def test_section_csv_roundtrip():
    sec = HankelSection([1 / (n + 1) for n in range(9)], 5)
    assert np.array_equal(matrix_from_csv(sec.to_csv()), sec.matrix)
    d = sec.to_json()
    assert d["n"] == 5 and len(d["q"]) == 9


# -- Gram forms --------------------------------------------------------------------

def test_zero_kernel_gives_zero_gram():
    assert np.array_equal(gram_form_kernel(lambda t: 0.0 * t, BASIS), np.zeros((3, 3)))
    assert np.array_equal(gram_form_sigma(SigmaDistribution(()), BASIS), np.zeros((3, 3)))


def test_carleman_gram_single_bump_is_positive():
    g = gram_form_kernel(lambda t: 1 / t, [TestFunction(1.0, 0.4)])
    assert g[0, 0] > 0


def test_kernel_gram_matches_double_integral():
    f = TestFunction(1.0, 0.5, (1.0, -0.7))
    g = gram_form_kernel(lambda t: 1 / t, [f])
    inner = lambda s: quad(lambda u: f(u) / (u + s), 0.5, 1.5, epsabs=0, epsrel=1e-12)[0]
    ref = quad(lambda s: f(s) * inner(s), 0.5, 1.5, epsabs=0, epsrel=1e-12)[0]
    assert g[0, 0] == pytest.approx(ref, rel=1e-9)


def test_delta_sigma_gram_is_rank_one():
    a = 1.3
    s = gram_form_sigma(SigmaDistribution((DeltaDerivative(a),)), BASIS)
    lf = np.array([laplace_direct(f, a) for f in BASIS])
    assert np.allclose(s, np.outer(lf, lf), rtol=1e-12, atol=1e-16)
    assert count_signs(eig_sym(s), 1e-12 * np.max(np.abs(s))) == (1, 0)


def test_gram_forms_are_symmetric():
    g = gram_form_kernel(lambda t: 1 / t, BASIS)
    s = gram_form_sigma(CARLEMAN, BASIS)
    assert np.array_equal(g, g.T) and np.array_equal(s, s.T)


def test_main_identity_for_exponential_kernel():
    rep = verify_main_identity(lambda t: np.exp(-0.8 * t), quasi_carleman_sigma(0.8, 0.0, 0.0), BASIS)
    assert rep["max_error"] <= 1e-12
    assert set(rep) == {"max_error", "per_entry", "kernel_gram", "sigma_gram"}


# -- Mellin-side operator ------------------------------------------------------------

def test_pdo_zero_sigma():
    f = BASIS[1]
    assert pdo_form(SigmaDistribution(()), f, f) == 0.0
    _, v = apply_via_pdo(SigmaDistribution(()), f, [0.5, 1.0])
    assert np.array_equal(v, np.zeros(2))


def test_pdo_matches_kernel_gram():
    g = pdo_gram(CARLEMAN, BASIS)
    ref = gram_form_kernel(lambda t: 1 / t, BASIS)
    assert np.max(np.abs(g - ref)) <= 1e-10 * np.max(np.abs(ref))


def test_pdo_is_symmetric_and_linear():
    g = pdo_gram(CARLEMAN, BASIS)
    assert np.allclose(g, g.T, rtol=1e-10, atol=1e-14)
    two = pdo_gram(CARLEMAN.scaled(2.0), BASIS)
    assert np.allclose(two, 2 * g, rtol=1e-12)


def test_apply_via_pdo_carleman_values():
    f = BASIS[1]
    t, v = apply_via_pdo(CARLEMAN, f, [0.1, 0.5, 1.0, 2.0, 10.0])
    ref = [quad(lambda s: f(s) / (s + x), 0.5, 1.5, epsabs=0, epsrel=1e-13)[0] for x in t]
    assert np.allclose(v, ref, rtol=1e-9, atol=1e-13)


def test_apply_via_pdo_interval_indicator():
    # sigma = chi[0.5, 2]: h(t) = (e^{-t/2} - e^{-2t}) / t
    f = BASIS[0]
    sigma = SigmaDistribution((Regular(np.ones_like, 0.5, 2.0),))
    t, v = apply_via_pdo(sigma, f, [0.3, 1.0, 3.0])

    def h(x):
        return (np.exp(-0.5 * x) - np.exp(-2 * x)) / x

    ref = [quad(lambda s: f(s) * h(s + x), 0.3, 0.9, epsabs=0, epsrel=1e-13)[0] for x in t]
    assert np.allclose(v, ref, rtol=1e-8, atol=1e-13)


def test_pdo_rejects_unbounded_sigma():
    f = BASIS[0]
    with pytest.raises(ValueError):
        pdo_form(SigmaDistribution((DeltaDerivative(1.0),)), f, f)
    with pytest.raises(ValueError):
        pdo_form(quasi_carleman_sigma(1.0, 0.0, 0.5), f, f)
    with pytest.raises(ValueError):
        pdo_form(SigmaDistribution((Regular(np.ones_like, -1.0, 1.0),)), f, f)


def test_basis_validation():
    with pytest.raises(ValueError):
        TestBasis(())
    with pytest.raises(ValueError):
        TestBasis((TestFunction(1.0, 0.5), TestFunction(1.0, 0.5)))
    with pytest.raises(TypeError):
        TestBasis((lambda t: t,))
