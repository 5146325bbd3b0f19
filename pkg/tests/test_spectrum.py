import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import argrelmax

from blockade_lab import spectral
from blockade_lab.errors import DomainError
from blockade_lab.params import SystemParams
from blockade_lab.spectrum import (a_coeff, default_n_cut, kappa_n, s_bad_cavity,
                                   s_integral, s_series, sideband_series)
from reference import lorentzian_sum_brute


def test_a_coeff_zero_temperature():
    assert a_coeff(0, 0.5, 0.0) == pytest.approx(math.exp(-0.25), rel=1e-15)
    assert a_coeff(-1, 0.5, 0.0) == 0.0
    assert a_coeff(3, 0.5, 0.0) == pytest.approx(math.exp(-0.25) * 0.25 ** 3 / 6, rel=1e-14)


@pytest.mark.parametrize("n", [-4, -1, 0, 2, 9])
@pytest.mark.parametrize("eta,nbar", [(0.5, 0.5), (1.3, 5.0), (2.0, 10.0)])
def test_a_coeff_finite_temperature_against_mpmath(n, eta, nbar):
    with mpmath.workdps(30):
        s, N = mpmath.mpf(eta) ** 2, mpmath.mpf(nbar)
        ref = (mpmath.exp(-s * (2 * N + 1)) * mpmath.besseli(n, 2 * s * mpmath.sqrt(N * (N + 1)))
               * ((N + 1) / N) ** (mpmath.mpf(n) / 2))
    assert a_coeff(n, eta, nbar) == pytest.approx(float(ref), rel=1e-12)


def test_a_coeff_approaches_poisson_as_nbar_vanishes():
    for n in range(4):
        assert a_coeff(n, 0.7, 1e-9) == pytest.approx(a_coeff(n, 0.7, 0.0), rel=1e-6)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 2.0), st.sampled_from([0.0, 0.5, 5.0]) | st.floats(0.0, 10.0))
def test_a_sum_rules(eta, nbar):
    table = sideband_series(SystemParams.from_ratios(eta, 0.1, nbar=nbar), n_cut=default_n_cut(eta, nbar, 1e-15))
    w = table.weight_array()
    n = table.orders()
    assert abs(w.sum() - 1) <= 1e-10
    assert abs(n @ w - eta ** 2) <= 1e-10


def test_kappa_n():
    p = SystemParams.from_ratios(0.5, 0.1)
    assert kappa_n(3, p) == p.kappa
    half = SystemParams.from_ratios(0.5, 0.1, Q=1e3, nbar=0.5)
    Gamma, _ = spectral.gamma_dephasing(half)
    assert kappa_n(2, half) == pytest.approx(half.kappa + Gamma + half.gamma, rel=1e-14)
    hot = SystemParams.from_ratios(0.5, 0.1, Q=1e3, nbar=10.0)
    Gamma, _ = spectral.gamma_dephasing(hot)
    assert kappa_n(5, hot) == pytest.approx(hot.kappa + 2 * Gamma, rel=1e-14)


def test_sideband_table_truncation():
    p = SystemParams.from_ratios(1.0, 0.1)
    table = sideband_series(p)
    assert table.n_min == 0
    assert table.truncation_error < 1e-12
    assert sum(table.weights.values()) == pytest.approx(1.0, abs=1e-12)
    thermal = sideband_series(SystemParams.from_ratios(1.0, 0.1, nbar=2.0), n_cut=10)
    assert thermal.n_min == -10
    with pytest.raises(ValueError):
        sideband_series(p, n_cut=0)
    with pytest.raises(DomainError):
        sideband_series(SystemParams.from_ratios(1.0, 0.1, nbar=1e8))


def test_a_coeff_series_and_bessel_branches_agree():
    # z = 2 eta^2 sqrt(N(N+1)) straddles the switch at 15
    eta = math.sqrt(7.5 / math.sqrt(2.0 * 3.0)) * 1.0000001
    for n in (-3, 0, 4):
        below = a_coeff(n, eta * (1 - 1e-7), 2.0)
        above = a_coeff(n, eta, 2.0)
        assert below == pytest.approx(above, rel=1e-5)


def test_empty_cavity_lorentzian():
    p = SystemParams.from_ratios(1e-12, 0.1)
    d = np.linspace(-1, 1, 9)
    lor = 0.01 / (0.01 + d ** 2)
    assert s_series(0.0, p) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(s_series(d, p), lor, rtol=1e-10)
    np.testing.assert_allclose(s_integral(d, p), lor, rtol=1e-8)


def test_series_against_brute_sum():
    p = SystemParams.from_ratios(0.6, 0.08)
    table = sideband_series(p)
    for d in (-0.9, -0.36, 0.2, 1.64):
        assert s_series(d, p) == pytest.approx(
            lorentzian_sum_brute(d + p.delta_g_m, 0.08, table.weights), rel=1e-13)


def test_integral_matches_series_at_finite_q_zpl():
    p = SystemParams.from_ratios(0.5, 0.1, Q=150.0)
    zpl = -p.delta_g
    assert s_integral(zpl, p) == pytest.approx(s_series(zpl, p), abs=1e-3)


def test_full_kernel_quadrature_approaches_series_as_q_grows():
    # below Q = 100 the frequency-quadrature kernel is used; its gap to the
    # Lorentzian series is the high-Q approximation error, O(1/Q)
    d = np.array([-0.09, 0.4, 0.91])
    gaps = []
    for Q in (20.0, 40.0, 90.0):
        p = SystemParams.from_ratios(0.3, 0.2, Q=Q)
        gaps.append(np.abs(s_integral(d, p) / s_series(d, p) - 1).max())
    assert gaps[0] > gaps[1] > gaps[2]
    assert gaps[2] * 90.0 < 1.0


def test_peak_positions_and_first_sideband_height():
    p = SystemParams.from_ratios(0.5, 0.05)
    d = np.linspace(-p.delta_g_m - 0.5, -p.delta_g_m + 3.5, 8001)
    s = s_series(d, p)
    peaks = d[argrelmax(s)[0]]
    expected = -p.delta_g_m + np.arange(4)
    np.testing.assert_allclose(peaks, expected, atol=p.kappa_m / 2)
    first = s_series(-p.delta_g + 1.0, p)
    assert first == pytest.approx(math.exp(-0.25) * 0.25, rel=0.05)


def test_zero_phonon_line_at_minus_delta_g():
    p = SystemParams.from_ratios(0.5, 0.1, Q=150.0)
    d = np.linspace(-1.0, 0.5, 3001)
    assert d[np.argmax(s_series(d, p))] == pytest.approx(-0.25, abs=1e-3)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 1.5), st.floats(0.02, 2.0), st.floats(-5, 5), st.sampled_from([0.0, 0.3, 3.0]))
def test_spectrum_bounded(eta, kappa, delta, nbar):
    p = SystemParams.from_ratios(eta, kappa, Q=1e4, nbar=nbar)
    s = s_series(delta, p)
    assert 0 < s <= 1 + 1e-12


def test_weak_coupling_approaches_lorentzian():
    d = 0.15
    lor = 0.04 / (0.04 + d ** 2)
    scaled = []
    for eta in (0.1, 0.03, 0.01):
        p = SystemParams.from_ratios(eta, 0.2)
        scaled.append(abs(s_series(d, p) - lor) / eta ** 2)
    # the deviation is O(eta^2): the rescaled error settles to a constant
    assert scaled[2] == pytest.approx(scaled[1], rel=0.05)
    assert max(scaled) < 10


def test_bad_cavity_closed_form_points():
    p = SystemParams.from_ratios(8 / math.sqrt(2), 4.0)
    _, tphi_inv = spectral.gamma_dephasing(p)
    t_phi = 1 / tphi_inv
    peak = s_bad_cavity(0.0, p)
    assert peak == pytest.approx(math.sqrt(math.pi) * 4.0 * t_phi, rel=1e-14)
    assert s_bad_cavity(tphi_inv, p) == pytest.approx(peak / math.e, rel=1e-14)
    with pytest.warns(UserWarning):
        s_bad_cavity(0.0, SystemParams.from_ratios(0.5, 0.1))


def test_bad_cavity_line_approaches_quadrature_when_dephasing_is_slow():
    # kappa T_phi = 0.05: the Lorentzian core dominates and the Gaussian
    # reading is accurate to a few percent near the peak
    p = SystemParams.from_ratios(100 / math.sqrt(2), 4.0)
    _, tphi_inv = spectral.gamma_dephasing(p)
    d = np.array([-0.5, 0.0, 0.5]) * tphi_inv
    np.testing.assert_allclose(s_integral(d, p), s_bad_cavity(d, p), rtol=0.1)
