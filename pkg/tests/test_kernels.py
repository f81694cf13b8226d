"""Kernel identities against independent quadrature oracles."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad
from scipy.interpolate import BSpline

from dtblab.kernels import (
    CONV_SUPPORT, PiecewisePolynomial, TabulatedFunction, TailPowerLaw, Zero,
    aperture_eval, band_response, bspline_eval, default_kernels, edge_response,
    hilbert_keys_deriv, kernel_K, keys_eval, lambda_conv_w, radon_of_radial,
    read_table_csv,
)
from dtblab.quadrature import gauss_legendre


def keys_classic(t):
    """Keys cubic with a = -1/2, written out piecewise."""
    a = abs(t)
    if a <= 1:
        return 1.5 * a**3 - 2.5 * a**2 + 1
    if a < 2:
        return -0.5 * a**3 + 2.5 * a**2 - 4 * a + 2
    return 0.0


def keys_classic_deriv(t):
    a = abs(t)
    sg = math.copysign(1.0, t)
    if a <= 1:
        return sg * (4.5 * a**2 - 5 * a)
    if a < 2:
        return sg * (-1.5 * a**2 + 5 * a - 4)
    return 0.0


def pv_hilbert_oracle(t):
    """(1/pi) p.v. int ik'(s) / (t - s) ds with the pole subtracted."""
    g0 = keys_classic_deriv(t) if abs(t) < 2 else 0.0

    def reg(s):
        if s == t:
            return 0.0
        return (keys_classic_deriv(s) - g0) / (t - s)

    pts = sorted({-1.0, 0.0, 1.0, t} & {p for p in (-1.0, 0.0, 1.0, t) if -2 < p < 2})
    val = quad(reg, -2, 2, points=pts or None, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    if g0:
        val += g0 * math.log(abs((t + 2) / (t - 2)))
    return val / math.pi


def ik_conv_w_oracle(t):
    pts = [p for p in (t - 2, t - 1, t, t + 1, t + 2) if -1 < p < 1]
    return quad(lambda s: keys_classic(t - s) * aperture_eval(s), -1, 1,
                points=pts or None, limit=200, epsabs=1e-14)[0]


def gl_integral(f, a, b, panels=64, n=20):
    x, w = gauss_legendre(n)
    br = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(br[:-1], br[1:]):
        total += 0.5 * (hi - lo) * np.sum(w * f(lo + 0.5 * (hi - lo) * (x + 1)))
    return total


# -- B-splines and the Keys kernel -----------------------------------------

def test_bspline_examples():
    assert bspline_eval(3, 2) == pytest.approx(2 / 3, abs=1e-15)
    assert bspline_eval(2, 1.5) == pytest.approx(0.75, abs=1e-15)
    assert bspline_eval(3, -0.1) == 0.0


@pytest.mark.parametrize("degree", [2, 3])
def test_bspline_matches_cox_de_boor(degree):
    ref = BSpline.basis_element(np.arange(degree + 2), extrapolate=False)
    t = np.linspace(0.001, degree + 0.999, 997)
    assert np.max(np.abs(bspline_eval(degree, t) - ref(t))) < 1e-13


def test_bspline_rejects_degree():
    with pytest.raises(ValueError):
        bspline_eval(4, 0.5)


def test_keys_examples():
    assert keys_eval(0) == 1.0
    assert keys_eval(0.5) == pytest.approx(0.5625, abs=1e-12)
    assert keys_eval(2.25) == 0.0


def test_keys_matches_piecewise_form():
    t = np.linspace(-2.5, 2.5, 2001)
    ref = np.array([keys_classic(v) for v in t])
    assert np.max(np.abs(keys_eval(t) - ref)) < 1e-12


def test_keys_matches_bspline_sum():
    t = np.linspace(-2.5, 2.5, 2001)
    ref = 3 * bspline_eval(3, t + 2) - (bspline_eval(2, t + 2) + bspline_eval(2, t + 1))
    assert np.max(np.abs(keys_eval(t) - ref)) < 1e-12


def test_keys_interpolates():
    assert keys_eval(0.0) == 1.0
    for n in (-2, -1, 1, 2):
        assert keys_eval(float(n)) == 0.0


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 1, exclude_max=True))
def test_keys_reproduces_linears(u):
    j = np.arange(-4, 5)
    vals = keys_eval(u - j)
    assert abs(vals.sum() - 1) < 1e-12
    assert abs((j * vals).sum() - u) < 1e-12


# -- aperture ----------------------------------------------------------------

def test_aperture_examples():
    assert aperture_eval(0) == pytest.approx(35 / 32, abs=1e-15)
    assert aperture_eval(1) == 0.0
    assert aperture_eval(-0.3) - aperture_eval(0.3) == 0.0


def test_aperture_mass():
    assert abs(quad(aperture_eval, -1, 1, epsabs=1e-14)[0] - 1) < 1e-10


# -- Hilbert filter ----------------------------------------------------------

@pytest.mark.parametrize("t", [0.7, 0.0, 1.0, 2.0, 0.35, 1.5, 3.7, 8.0])
def test_lambda_matches_pv_oracle(t):
    ref = pv_hilbert_oracle(t)
    assert hilbert_keys_deriv(t) == pytest.approx(ref, rel=1e-8, abs=1e-12)


@pytest.mark.parametrize("t", [0.2, 1.1, 2.6])
def test_lambda_even(t):
    assert abs(hilbert_keys_deriv(-t) - hilbert_keys_deriv(t)) < 1e-14


def test_lambda_tail_bounded():
    t = np.linspace(10, 1e4, 5000)
    scaled = hilbert_keys_deriv(t) * t**2
    assert np.all(np.abs(scaled) < 1)
    # leading tail -1 / (pi t^2)
    assert scaled[-1] == pytest.approx(-1 / math.pi, rel=1e-6)


def test_lambda_frozen_values():
    # frozen from the pole-subtracted quadrature oracle
    assert hilbert_keys_deriv(0.0) == pytest.approx(pv_hilbert_oracle(0.0), rel=1e-10)
    assert hilbert_keys_deriv(0.0) > 0


def test_lambda_conv_w_against_quadrature():
    for t in (0.0, 0.45, 1.3, 2.9, 4.2):
        pts = [p for p in (t - 3, t - 2, t - 1, t, t + 1, t + 2, t + 3) if -1 < p < 1]
        ref = quad(lambda s: hilbert_keys_deriv(t - s) * aperture_eval(s), -1, 1,
                   points=pts or None, limit=200, epsabs=1e-13)[0]
        assert lambda_conv_w(t) == pytest.approx(ref, abs=1e-9)


# -- edge and band responses -------------------------------------------------

def test_edge_examples():
    assert edge_response(-3.01) == 0.0
    assert edge_response(0) == pytest.approx(0.5, abs=1e-12)
    assert edge_response(3.01) == 1.0
    assert abs(edge_response(-3.0)) < 1e-8 and abs(edge_response(3.0) - 1) < 1e-8


def test_ik_conv_w_table_matches_quadrature():
    kern = default_kernels()
    for t in np.linspace(-3.2, 3.2, 33):
        assert kern.ik_conv_w(t) == pytest.approx(ik_conv_w_oracle(t), abs=1e-9)


def test_ik_conv_w_support():
    kern = default_kernels()
    t = np.concatenate([np.linspace(-6, -3, 50), np.linspace(3, 6, 50)])
    assert np.all(kern.ik_conv_w(t) == 0)


def test_band_examples():
    for h in (-4.0, -0.3, 0.0, 2.2):
        assert band_response(h, 0) == 0.0
    assert band_response(5, 1) == 0.0


def test_band_against_double_quadrature():
    def oracle(h, H):
        lo, hi = sorted((0.0, H))
        val = quad(ik_conv_w_oracle, h - hi, h - lo, limit=200, epsabs=1e-13)[0]
        return val if H >= 0 else -val

    assert band_response(0.7, 1.3) == pytest.approx(oracle(0.7, 1.3), abs=1e-9)
    for h in np.linspace(-4, 4, 10):
        for H in np.linspace(-3, 3, 10):
            assert band_response(h, H) == pytest.approx(oracle(h, H), abs=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.floats(-6, 6), st.floats(-4, 4))
def test_band_is_edge_difference(h, H):
    assert band_response(h, H) == pytest.approx(edge_response(h) - edge_response(h - H), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5))
def test_edge_symmetry(h):
    assert edge_response(h) + edge_response(-h) == pytest.approx(1.0, abs=1e-10)


# -- radial kernel K ---------------------------------------------------------

def test_kernel_K_rejects_negative():
    with pytest.raises(ValueError):
        kernel_K(-0.1)


def test_kernel_K_outside_support():
    assert abs(kernel_K(3.2)) < 1e-4
    assert np.max(np.abs(kernel_K(np.linspace(3.05, 5, 40)))) < 1e-4


def test_kernel_K_mass():
    kern = default_kernels()
    mass = 2 * math.pi * gl_integral(lambda r: kern.k_radial(r) * r, 0, CONV_SUPPORT)
    assert abs(mass - 1) < 1e-8


def test_kernel_K_table_matches_quadrature():
    kern = default_kernels()
    rho = np.linspace(0.013, 2.99, 23)
    assert np.max(np.abs(kern.k_radial(rho) - kernel_K(rho))) < 1e-9


@pytest.mark.parametrize("t", [0.0, 0.4, 1.1, 2.5, 3.5])
def test_radon_of_K_is_ik_conv_w(t):
    kern = default_kernels()
    val = float(radon_of_radial(kern.k_radial, t)[0])
    assert val == pytest.approx(ik_conv_w_oracle(t), abs=1e-4)
    if t == 0:
        assert val > 0


def test_radon_of_indicator():
    disc = TabulatedFunction(0.0, 1 / 64, np.ones(65))
    assert float(radon_of_radial(disc, 0.0)[0]) == pytest.approx(2.0, abs=1e-10)
    assert float(radon_of_radial(disc, 1.5)[0]) == 0.0


def test_kernels_even():
    kern = default_kernels()
    t = np.linspace(0.01, 4, 200)
    assert np.max(np.abs(keys_eval(t) - keys_eval(-t))) < 1e-12
    assert np.max(np.abs(aperture_eval(t) - aperture_eval(-t))) < 1e-12
    assert np.max(np.abs(kern.ik_conv_w(t) - kern.ik_conv_w(-t))) < 1e-12
    assert np.max(np.abs(hilbert_keys_deriv(t) - hilbert_keys_deriv(-t))) < 1e-12


# -- tables ------------------------------------------------------------------

def test_table_exact_at_nodes():
    samples = np.sin(np.linspace(0, 2, 41))
    tab = TabulatedFunction(0.0, 0.05, samples)
    assert np.array_equal(tab(tab.nodes), samples)


def test_table_outside_rules():
    tab = TabulatedFunction(-1.0, 0.5, np.ones(5))
    assert tab(1.5) == 0.0 and tab(-1.01) == 0.0
    tail = TabulatedFunction(-1.0, 0.5, np.ones(5), TailPowerLaw(2.0, -2.0))
    assert tail(2.0) == pytest.approx(0.5)


def test_table_validation():
    with pytest.raises(ValueError):
        TabulatedFunction(0.0, 0.0, np.ones(3))
    with pytest.raises(ValueError):
        TabulatedFunction(0.0, 0.1, np.array([]))


def test_table_csv_round_trip(tmp_path):
    kern = default_kernels()
    path = tmp_path / "edge.csv"
    kern.edge.to_csv(path, "edge")
    name, tab = read_table_csv(path)
    assert name == "edge"
    assert tab.grid_step == pytest.approx(kern.edge.grid_step, rel=1e-14)
    assert np.allclose(tab.samples, kern.edge.samples, rtol=1e-14, atol=1e-15)


def test_piecewise_polynomial_moments():
    # hat function on [-1, 1]
    from numpy.polynomial import Polynomial
    hat = PiecewisePolynomial.from_global([-1.0, 0.0, 1.0], [Polynomial([1, 1]), Polynomial([1, -1])])
    assert hat.integral() == pytest.approx(1.0, abs=1e-14)
    assert hat.moment(1) == pytest.approx(0.0, abs=1e-14)
    assert hat(0.5) == pytest.approx(0.5)
