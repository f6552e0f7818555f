import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hankel_sigma._quad import integrate
from hankel_sigma.sigma import KernelSpec
from hankel_sigma.specfun import gamma
from hankel_sigma.transforms import (DerivativeBudgetError, GridFunction, LinearGrid, LogGrid, RegularizationError,
                                     TestFunction, TruncationWarning, amplification, bump_basis, convolution_values,
                                     inverse_laplace, inverse_mellin, laplace_convolution, laplace_direct,
                                     laplace_via_mellin, mellin, sigma_from_kernel)

WIDE = LogGrid(-64.0, 16.0, 65536)
# e^{-t}: e^{x/2} e^{-e^x} is below 1e-13 at x = -60
EXP_GRID = LogGrid(-60.0, 6.0, 16384)


def _l2_half_line(f):
    a, b = f.support
    return math.sqrt(integrate(lambda t: f(t) ** 2, a, b))


def _xi_norm(F):
    return math.sqrt(np.sum(np.abs(F.values) ** 2) * F.grid.dxi)


# -- grids and test functions ------------------------------------------------------

@pytest.mark.parametrize("args", [(1.0, 0.0, 1024), (-1.0, 1.0, 100), (-1.0, 1.0, 32)])
def test_log_grid_rejects_bad_parameters(args):
    with pytest.raises(ValueError):
        LogGrid(*args)


def test_log_grid_geometry():
    g = LogGrid(-4.0, 4.0, 256)
    assert g.dx == pytest.approx(8 / 256)
    assert g.dxi * g.dx * g.n_points == pytest.approx(2 * math.pi)
    assert np.allclose(g.points, np.exp(g.x))
    assert 0.0 in g.xi


def test_test_function_support_and_validation():
    f = TestFunction(1.0, 0.5)
    assert f.support == (0.5, 1.5)
    assert f(0.5) == 0.0 and f(1.5) == 0.0 and f(1.0) == pytest.approx(math.exp(-1))
    with pytest.raises(ValueError):
        TestFunction(0.5, 0.6)
    with pytest.raises(ValueError):
        TestFunction(1.0, 0.0)


def test_test_function_derivatives_match_finite_differences():
    f = TestFunction(1.3, 0.7, (0.4, -1.1, 0.6))
    t = np.linspace(0.7, 1.9, 13)
    d = f.derivatives(t, 3)
    h = 1e-5
    for p in range(1, 4):
        fd = (f.derivatives(t + h, p - 1)[p - 1] - f.derivatives(t - h, p - 1)[p - 1]) / (2 * h)
        assert np.allclose(d[p], fd, rtol=1e-6, atol=1e-6 * np.max(np.abs(d[p])))


def test_test_function_budget():
    f = TestFunction(1.0, 0.5, budget=3)
    with pytest.raises(DerivativeBudgetError):
        f.derivatives(1.0, 4)


def test_normalized_bump_has_unit_norm():
    for f in bump_basis([0.5, 2.0], [0.3, 1.0]):
        assert _l2_half_line(f) == pytest.approx(1.0, rel=1e-12)


# -- Laplace ---------------------------------------------------------------------

def test_laplace_at_zero_is_integral():
    f = TestFunction(1.0, 0.5, (1.0, 0.3))
    assert laplace_direct(f, 0.0) == pytest.approx(integrate(f, 0.5, 1.5), rel=1e-13)


def test_laplace_of_positive_bump_decreases():
    f = TestFunction(1.0, 0.5)
    vals = [laplace_direct(f, lam) for lam in np.linspace(-2, 6, 17)]
    assert all(v > 0 for v in vals)
    assert all(b < a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("gam", [0.5, 1.0, 1.5])
def test_laplace_via_mellin_matches_direct(gam):
    f = TestFunction(1.0, 0.5)
    lf = laplace_via_mellin(f, WIDE, gamma=gam)
    for lam in (0.5, 1.0, 2.0):
        j = int(np.argmin(np.abs(WIDE.points - lam)))
        d = laplace_direct(f, WIDE.points[j])
        assert abs(lf.values[j] - d) <= 1e-8 * abs(d)


def test_laplace_via_mellin_is_linear():
    f, g = TestFunction(1.0, 0.5), TestFunction(2.0, 0.8, (1.0, 0.5))
    grid = LogGrid(-30.0, 10.0, 8192)

    def combo(t):
        return 2.0 * f(t) - 3.0 * g(t)

    lhs = laplace_via_mellin(combo, grid).values
    rhs = 2.0 * laplace_via_mellin(f, grid).values - 3.0 * laplace_via_mellin(g, grid).values
    keep = np.abs(grid.x) <= 10
    assert np.max(np.abs(lhs - rhs)[keep]) <= 1e-12 * np.max(np.abs(rhs))


def test_laplace_norm_bound():
    grid = LogGrid(-40.0, 12.0, 16384)
    for f in bump_basis([0.3, 1.0, 4.0], [0.2, 0.9, 3.0]):
        lf = laplace_via_mellin(f, grid).values
        norm = math.sqrt(np.sum(np.abs(lf) ** 2 * grid.points) * grid.dx)
        assert norm <= math.sqrt(math.pi) * _l2_half_line(f)


# -- Mellin ----------------------------------------------------------------------

def test_mellin_of_exponential_is_gamma():
    F = mellin(lambda t: np.exp(-t), EXP_GRID)
    xi = EXP_GRID.xi
    keep = np.abs(xi) <= 20
    # (Mf)(xi) = (2 pi)^{-1/2} int f(t) t^{-1/2 - i xi} dt = Gamma(1/2 - i xi)/sqrt(2 pi)
    ref = gamma(0.5 - 1j * xi[keep]) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(F.values[keep] - ref)) <= 1e-8


def test_mellin_inverse_roundtrip():
    f = TestFunction(1.5, 0.6, (1.0, -0.4))
    back = inverse_mellin(mellin(f, WIDE))
    # the e^{-x/2} weight amplifies roundoff far out on the grid; compare where it is O(1)
    keep = np.abs(WIDE.x) <= 8
    assert np.max(np.abs(back.values - f(WIDE.points))[keep]) <= 1e-12


def test_mellin_dilation():
    rho = 2.0
    f = TestFunction(1.5, 0.6)
    F = mellin(f, WIDE)
    Fr = mellin(lambda t: f(rho * t), WIDE)
    xi = WIDE.xi
    keep = np.abs(xi) <= 30
    expect = rho ** (-0.5 + 1j * xi[keep]) * F.values[keep]
    assert np.max(np.abs(Fr.values[keep] - expect)) <= 1e-8


def test_mellin_warns_on_truncation():
    with pytest.warns(TruncationWarning):
        mellin(lambda t: np.exp(-t), LogGrid())


@settings(max_examples=20, deadline=None)
@given(st.floats(0.3, 5.0), st.floats(0.1, 0.95), st.lists(st.floats(-2, 2), min_size=1, max_size=3))
def test_mellin_is_unitary(c, frac, coeffs):
    f = TestFunction(c, frac * c, tuple(coeffs))
    norm = _l2_half_line(f)
    if norm < 1e-3:
        return
    assert abs(_xi_norm(mellin(f, WIDE)) - norm) <= 1e-10 * max(1.0, norm)


# -- inverse Laplace and sigma -------------------------------------------------------

def _window(xi, cutoff, taper):
    return np.exp(-0.5 * (np.maximum(np.abs(xi) - cutoff, 0.0) / taper) ** 2)


def test_inverse_laplace_roundtrip_on_bump_is_band_limited_projection():
    # a compactly supported bump keeps ~5% of its Mellin energy above
    # |xi| = 12, so the regularized inverse returns M^{-1} W M f, not f
    grid = LogGrid(-40.0, 40.0, 16384)
    f = TestFunction(1.0, 0.5)
    back = inverse_laplace(laplace_via_mellin(f, grid), cutoff=12.0, taper_width=1.0)
    F = mellin(f, grid)
    proj = inverse_mellin(GridFunction(grid, _window(grid.xi, 12.0, 1.0) * F.values, "xi"))
    inner = (grid.points > 0.6) & (grid.points < 1.4)
    err = np.linalg.norm((back.values - proj.values)[inner]) / np.linalg.norm(proj.values[inner])
    assert err <= 1e-6
    lost = np.linalg.norm((proj.values - f(grid.points))[inner]) / np.linalg.norm(f(grid.points)[inner])
    assert 1e-3 < lost < 0.1


WIDE_SYM = LogGrid(-40.0, 40.0, 8192)


@pytest.mark.parametrize("g, f, tol", [
    (lambda lam: 1 / (lam + 1), lambda t: np.exp(-t), 1e-5),
    (lambda lam: 1 / (lam + 1) ** 2, lambda t: t * np.exp(-t), 1e-5),
])
def test_inverse_laplace_classical_pairs(g, f, tol):
    out = inverse_laplace(g, cutoff=12.0, grid=WIDE_SYM)
    inner = np.abs(WIDE_SYM.x) <= 2.0
    t = WIDE_SYM.points[inner]
    assert np.max(np.abs(out.values[inner] - f(t)) / np.abs(f(t))) <= tol


def test_inverse_laplace_zero_cutoff_keeps_one_mode():
    grid = WIDE_SYM
    out = inverse_laplace(lambda lam: 1 / (lam + 1), cutoff=0.0, taper_width=0.0, grid=grid)
    shape = out.values * np.sqrt(grid.points)
    assert np.max(np.abs(shape - shape[0])) <= 1e-12 * np.max(np.abs(shape))


def test_inverse_laplace_refuses_hopeless_cutoff():
    assert amplification(12.0) == pytest.approx(math.exp(6 * math.pi), rel=0.5)
    with pytest.raises(RegularizationError):
        inverse_laplace(lambda lam: 1 / (lam + 1), cutoff=30.0)


def test_sigma_of_carleman_kernel():
    grid = LogGrid()
    s = sigma_from_kernel(KernelSpec.tabulated(lambda t: 1 / t, singularity=-1, tail_power=-1), grid)
    inner = np.abs(grid.x) <= 6
    assert np.max(np.abs(s.values[inner] - 1)) <= 1e-4


def test_sigma_of_inverse_square_root():
    grid = LogGrid()
    s = sigma_from_kernel(KernelSpec.tabulated(lambda t: t**-0.5, singularity=-0.5, tail_power=-0.5), grid)
    inner = np.abs(grid.x) <= 6
    lam = grid.points[inner]
    assert np.max(np.abs(s.values[inner] - lam**-0.5 / math.sqrt(math.pi))) <= 1e-4


def test_sigma_of_growing_gaussian_is_two_sided():
    s = sigma_from_kernel(KernelSpec.tabulated(lambda t: np.exp(t**2), two_sided=True))
    assert isinstance(s.grid, LinearGrid)
    p = s.points
    keep = np.abs(p) <= 10
    assert np.max(np.abs(s.values[keep] - np.exp(-p[keep] ** 2 / 4) / (2 * math.sqrt(math.pi)))) <= 1e-4


def test_sigma_of_exponential_kernel_is_quasi_singular():
    # h = e^{-t} has sigma = delta(lambda - 1); the regularized inverse
    # concentrates its mass near lambda = 1
    grid = LogGrid()
    s = sigma_from_kernel(KernelSpec.tabulated(lambda t: np.exp(-t), decay_rate=1.0), WIDE_SYM, cutoff=8.0)
    grid = WIDE_SYM
    peak = grid.points[np.argmax(s.values)]
    assert 0.7 < peak < 1.4


# -- convolution -------------------------------------------------------------------

def test_convolution_vanishes_outside_support_sum():
    f1, f2 = TestFunction(1.0, 0.3), TestFunction(2.0, 0.5)
    for t in (0.5, 2.19, 3.81, 5.0):
        assert laplace_convolution(f1, f2, t) == 0.0
    assert laplace_convolution(f1, f2, 3.0) > 0.0
    assert np.all(convolution_values(f1, f2, np.array([0.1, 2.2, 3.8, 4.0])) == 0.0)


def test_convolution_is_commutative():
    f1, f2 = TestFunction(1.0, 0.3, (1.0, 0.5)), TestFunction(2.0, 0.5, (0.2, -1.0))
    for t in np.linspace(2.3, 3.7, 8):
        assert laplace_convolution(f1, f2, t) == pytest.approx(laplace_convolution(f2, f1, t), rel=1e-12, abs=1e-16)


def test_convolution_theorem():
    f1, f2 = TestFunction(1.0, 0.3, (1.0, 0.5)), TestFunction(2.0, 0.5, (0.2, -1.0))
    for lam in (0.5, 1.0, 2.0):
        lhs = integrate(lambda t: np.exp(-lam * t) * convolution_values(f1, f2, t, panels=16), 1.8, 3.8,
                        rtol=1e-13, atol=1e-18)
        rhs = laplace_direct(f1, lam) * laplace_direct(f2, lam)
        assert lhs == pytest.approx(rhs, rel=1e-8)


def test_convolution_scalar_and_vector_paths_agree():
    f1, f2 = TestFunction(1.0, 0.3), TestFunction(2.0, 0.5)
    t = np.linspace(2.25, 3.75, 7)
    vec = convolution_values(f1, f2, t, panels=16)
    assert np.allclose(vec, [laplace_convolution(f1, f2, s) for s in t], rtol=1e-10, atol=1e-16)


# -- serialization -------------------------------------------------------------------

def test_grid_function_json_roundtrip_is_bit_exact():
    grid = LogGrid(-3.0, 3.0, 64)
    rng = np.random.default_rng(0)
    gf = GridFunction(grid, rng.normal(size=64) + 1j * rng.normal(size=64), "lambda")
    back = GridFunction.from_json(gf.to_json())
    assert back.grid == grid and back.variable == "lambda"
    assert np.array_equal(back.values, gf.values)


def test_grid_function_csv_roundtrip_is_bit_exact():
    grid = LogGrid(-3.0, 3.0, 64)
    gf = GridFunction(grid, np.random.default_rng(1).normal(size=64))
    back = GridFunction.from_csv(gf.to_csv(), grid)
    assert np.array_equal(back.values, gf.values)
    assert gf.to_csv().splitlines()[0] == "x,re,im"


def test_grid_function_rejects_nan():
    with pytest.raises(ValueError):
        GridFunction(LogGrid(-1.0, 1.0, 64), np.full(64, np.nan))


def test_no_warning_on_well_resolved_input():
    with warnings.catch_warnings():
        warnings.simplefilter("error", TruncationWarning)
        laplace_via_mellin(TestFunction(1.0, 0.5), WIDE)
