r"""Mechanical bath: occupation numbers, photon nonlinearity and the
displacement-correlation kernels :math:`F_2` and :math:`F_4`.

The general kernels integrate

.. math::
    F_k = \frac{2}{\pi}\int_0^\infty d\omega\, \frac{J(\omega)}{\omega^2}
          \left[(N(\omega)+1) f_k + N(\omega) f_k^*\right]

over frequency. Because the bracket is linear in :math:`f_k`, and
:math:`f_4` is a signed sum of six :math:`f_2` terms with shifted arguments,
every :math:`F_4` evaluation reduces to :math:`F_2` evaluations
(:func:`f4_from_f2`). High-Q and bad-cavity closed forms are provided for the
fast paths used by :mod:`blockade_lab.spectrum` and
:mod:`blockade_lab.correlations`.
"""

from __future__ import annotations

import math
import warnings

import numpy as np
from scipy import integrate

from .errors import ConvergenceError, DomainError
from .params import QuadratureSpec, SpectralDensity, SystemParams, thermal_ratio

_DEFAULT_SPEC = QuadratureSpec()


def bose_occupation(omega: float, T: float) -> float:
    """Bose-Einstein occupation ``1/(exp(hbar omega / k_B T) - 1)``."""
    if not omega > 0:
        raise DomainError(f"bose_occupation needs omega > 0, got {omega}")
    if T < 0:
        raise DomainError("temperature must be non-negative")
    x = thermal_ratio(omega, T)
    if math.isinf(x):
        return 0.0
    return 1.0 / math.expm1(x)


def _coth_half(u, x_m):
    """``2N(u)+1 = coth(u x_m / 2)`` in units where omega_m = 1."""
    if math.isinf(x_m):
        return np.ones_like(u) if isinstance(u, np.ndarray) else 1.0
    return 1.0 / np.tanh(0.5 * u * x_m)


def _j_over(u, sd: SpectralDensity, power: int):
    """Dimensionless ``J(omega)/omega**power`` with omega = u omega_m."""
    Q = sd.Q
    return (sd.eta ** 2 / Q) * u ** (1 - power) / ((u * u - 1.0) ** 2 + u * u / Q ** 2)


def _breakpoints(sd: SpectralDensity, u_max: float, extra=()):
    # resonance window plus a geometric ladder through its Lorentzian tails
    w = 3.0 / sd.Q
    pts = {0.0, u_max, *extra}
    while w < 0.5:
        pts.update((1.0 - w, 1.0 + w))
        w *= 8.0
    return sorted(p for p in pts if 0.0 <= p <= u_max)


def _quad(func, a, b, spec: QuadratureSpec, **kw):
    out = integrate.quad(
        func, a, b, epsabs=spec.abs_tol, epsrel=spec.rel_tol,
        limit=spec.max_subdivisions, full_output=1, **kw,
    )
    value, err = out[0], out[1]
    if len(out) > 3:
        message = out[3]
        # roundoff-limited results at tiny absolute scale are still usable
        if err > max(10 * spec.abs_tol, 1e3 * spec.rel_tol * abs(value)):
            raise ConvergenceError(f"quadrature on [{a}, {b}] failed: {message}", estimate=err)
    return value


def _u_max(sd: SpectralDensity, spec: QuadratureSpec) -> float:
    if spec.omega_max is None:
        return 40.0
    return spec.omega_max / sd.omega_m


def delta_g(sd: SpectralDensity, spec: QuadratureSpec = _DEFAULT_SPEC) -> float:
    """Photon nonlinearity ``(2/pi) int_0^omega_max J(w)/w dw`` in rad/s.

    The integral up to infinity equals ``g0**2/omega_m`` for every Q; the
    frequency cutoff leaves a residual of order ``eta**2 / (Q u_max**3)``.
    """
    u_max = _u_max(sd, spec)
    pts = _breakpoints(sd, u_max)
    total = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(pts[:-1], pts[1:]):
            total += _quad(lambda u: _j_over(u, sd, 1), a, b, spec)
    return (2.0 / math.pi) * total * sd.omega_m


def _f2_quadrature_m(tau_m: float, sd: SpectralDensity, x_m: float, spec: QuadratureSpec) -> complex:
    """F2 at dimensionless time ``tau_m = omega_m tau``; ``tau_m`` may be negative."""
    if tau_m == 0.0:
        return 0j
    sign = 1.0 if tau_m > 0 else -1.0
    tau = abs(tau_m)
    u_max = _u_max(sd, spec)
    # below u_split the (1 - cos) factor is kept intact so the infrared end is finite
    u_split = min(0.5, 1.0 / tau)
    pts = _breakpoints(sd, u_max, extra=(u_split,))

    def weight(u):
        return _j_over(u, sd, 2) * _coth_half(u, x_m)

    def re_full(u):
        return weight(u) * 2.0 * np.sin(0.5 * u * tau) ** 2

    def im_full(u):
        return _j_over(u, sd, 2) * np.sin(u * tau)

    re = im = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        for a, b in zip(pts[:-1], pts[1:]):
            if b <= u_split:
                re += _quad(re_full, a, b, spec)
                im += _quad(im_full, a, b, spec)
            else:
                re += _quad(weight, a, b, spec)
                re -= _quad(weight, a, b, spec, weight="cos", wvar=tau)
                im += _quad(lambda u: _j_over(u, sd, 2), a, b, spec, weight="sin", wvar=tau)
    scale = 2.0 / math.pi
    return complex(scale * re, sign * scale * im)


def f2_kernel(tau: float, sd: SpectralDensity, T: float,
              spec: QuadratureSpec = _DEFAULT_SPEC) -> complex:
    """Two-point kernel ``F2(tau)`` by frequency quadrature.

    Parameters
    ----------
    tau : float
        Delay in seconds, ``tau >= 0``.
    sd : SpectralDensity
        Bath model (finite Q).
    T : float
        Temperature in kelvin.
    spec : QuadratureSpec
        Tolerances and the frequency cutoff.
    """
    if tau < 0:
        raise DomainError("f2_kernel needs tau >= 0")
    return _f2_quadrature_m(tau * sd.omega_m, sd, thermal_ratio(sd.omega_m, T), spec)


def gamma_dephasing(params: SystemParams) -> tuple[float, float]:
    """Return ``(Gamma, 1/T_phi)`` in rad/s.

    ``Gamma = eta^2 (2 nbar + 1) gamma`` for any ``T > 0`` and exactly zero at
    ``T = 0``; ``1/T_phi = 2 g0 sqrt(nbar + 1/2)``.
    """
    nbar = params.nbar
    Gamma = 0.0 if params.T == 0 else params.eta ** 2 * (2 * nbar + 1) * params.gamma
    return Gamma, 2.0 * params.g0 * math.sqrt(nbar + 0.5)


def _check_high_q(Q: float):
    if Q < 10:
        raise DomainError(f"high-Q closed form needs Q >= 10, got {Q}")
    if Q < 100:
        warnings.warn(f"high-Q closed form used at Q={Q} < 100", stacklevel=3)


def f2_highq_m(tau_m, eta: float, nbar: float, gamma_m: float, Gamma_m: float):
    """Vectorized high-Q ``F2`` at dimensionless time (any sign)."""
    tau_m = np.asarray(tau_m, dtype=float)
    a = np.abs(tau_m)
    env = np.exp(-0.5 * gamma_m * a)
    re = Gamma_m * a + eta ** 2 * (2 * nbar + 1) * (1.0 - np.cos(a) * env)
    im = eta ** 2 * np.sin(a) * env
    return re + 1j * np.sign(tau_m) * im


def highq_args(params: SystemParams) -> tuple[float, float, float, float]:
    """``(eta, nbar, gamma_m, Gamma_m)`` for :func:`f2_highq_m`."""
    Gamma, _ = gamma_dephasing(params)
    return params.eta, params.nbar, params.gamma_m, Gamma / params.omega_m


def f2_highq(tau: float, params: SystemParams) -> complex:
    """High-Q closed form of ``F2(tau)``.

    ``Gamma tau + eta^2 (2N+1) (1 - cos(wm tau) e^{-gamma tau/2})
    + i eta^2 sin(wm tau) e^{-gamma tau/2}``.
    """
    if tau < 0:
        raise DomainError("f2_highq needs tau >= 0")
    _check_high_q(params.Q)
    return complex(f2_highq_m(tau * params.omega_m, *highq_args(params)))


def f2_bad_cavity_m(tau_m, params: SystemParams):
    """Short-time form ``i Delta_g tau + tau^2 / (4 T_phi^2)``, dimensionless."""
    tau_m = np.asarray(tau_m, dtype=float)
    _, tphi_inv = gamma_dephasing(params)
    tphi_inv_m = tphi_inv / params.omega_m
    return 0.25 * (tphi_inv_m * tau_m) ** 2 + 1j * params.delta_g_m * tau_m


def f4_from_f2(f2, t1, t2, t3):
    """Combine a two-point kernel into the four-point kernel.

    ``f4 = f2(t1) + f2(t1-t2) + f2(t1+t3) + f2(t1+t3-t2) - f2(-t2) - f2(t3)``
    holds pointwise in frequency, and ``F2(-s) = conj F2(s)``. ``f2`` must
    accept negative (array) arguments.
    """
    return (f2(t1) + f2(t1 - t2) + f2(t1 + t3) + f2(t1 + t3 - t2)
            - f2(-t2) - f2(t3))


def f4_kernel(tau1: float, tau2: float, tau3: float, sd: SpectralDensity, T: float,
              spec: QuadratureSpec = _DEFAULT_SPEC) -> complex:
    """Four-point kernel ``F4(tau1, tau2, tau3)`` by frequency quadrature."""
    if min(tau1, tau2, tau3) < 0:
        raise DomainError("f4_kernel needs non-negative times")
    x_m = thermal_ratio(sd.omega_m, T)
    w = sd.omega_m

    def f2(s):
        return _f2_quadrature_m(s * w, sd, x_m, spec)

    return f4_from_f2(f2, tau1, tau2, tau3)


def f4_highq_m(t1, t2, t3, params: SystemParams):
    """Vectorized high-Q ``F4`` at dimensionless times."""
    args = highq_args(params)
    return f4_from_f2(lambda s: f2_highq_m(s, *args), t1, t2, t3)


def f4_bad_cavity_m(t1, t2, t3, params: SystemParams):
    """``i Delta_g (4t1 - t2 + t3) + (2t1 - t2 + t3)^2 / (4 T_phi^2)``."""
    _, tphi_inv = gamma_dephasing(params)
    tphi_inv_m = tphi_inv / params.omega_m
    s = 2 * t1 - t2 + t3
    return 0.25 * (tphi_inv_m * s) ** 2 + 1j * params.delta_g_m * (4 * t1 - t2 + t3)
