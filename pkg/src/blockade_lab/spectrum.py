"""Cavity excitation spectrum ``S(delta0)`` at weak drive.

Three routes:

* :func:`s_series`: sum of phonon-sideband Lorentzians with Huang-Rhys weights;
* :func:`s_integral`: direct delay-time quadrature of the displacement
  correlation ``exp(-F2(tau))``;
* :func:`s_bad_cavity`: Gaussian line for ``kappa >> omega_m``.

``S`` is normalized to the resonant photon number ``drive**2 / kappa**2`` of
the empty cavity, so the drive amplitude never enters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import spectral
from .errors import DomainError
from .params import QuadratureSpec, SpectralDensity, SystemParams
from .specfun import bessel_i

DEFAULT_TAIL = 1e-12
_A_SERIES_SWITCH = 15.0
# sideband variance eta^2 (2 nbar + 1) above which the order walk is refused
MAX_SIDEBAND_VARIANCE = 500.0
_DEFAULT_SPEC = QuadratureSpec()


def a_coeff(n: int, eta: float, nbar: float) -> float:
    """Huang-Rhys weight of the ``n``-phonon sideband.

    ``A_n = exp(-eta^2 (2N+1)) I_n(2 eta^2 sqrt(N(N+1))) ((N+1)/N)^(n/2)``,
    evaluated through its Poisson limit ``exp(-eta^2) eta^(2n) / n!`` when
    ``nbar == 0``.
    """
    if eta < 0 or nbar < 0:
        raise ValueError("eta and nbar must be non-negative")
    s = eta * eta
    if s == 0:
        return 1.0 if n == 0 else 0.0
    if nbar == 0:
        if n < 0:
            return 0.0
        return math.exp(-s + n * math.log(s) - math.lgamma(n + 1))
    z = 2.0 * s * math.sqrt(nbar * (nbar + 1.0))
    if z < _A_SERIES_SWITCH:
        return _a_coeff_series(n, s, nbar)
    i_n = bessel_i(n, z)
    if i_n == 0.0:
        return 0.0
    log_a = -s * (2 * nbar + 1) + math.log(i_n) + 0.5 * n * math.log1p(1.0 / nbar)
    return math.exp(log_a)


def _a_coeff_series(n: int, s: float, nbar: float) -> float:
    # Bessel series with the ((N+1)/N)^(n/2) factor folded in, so nothing
    # underflows as nbar -> 0: sum_k s^(m+2k) up^(m+k) down^k / (k! (m+k)!)
    m = abs(n)
    up, down = (nbar + 1.0, nbar) if n >= 0 else (nbar, nbar + 1.0)
    log_lead = -s * (2 * nbar + 1) + m * (math.log(s) + math.log(up)) - math.lgamma(m + 1)
    q = s * s * up * down
    term, total, k = 1.0, 1.0, 0
    while term > 1e-17 * total:
        k += 1
        term *= q / (k * (k + m))
        total += term
    return math.exp(log_lead) * total


def kappa_n(n: int, params: SystemParams) -> float:
    """Linewidth of sideband ``n`` (rad/s).

    ``kappa + Gamma + |n| gamma / 2`` while ``nbar <= 1``, otherwise
    ``kappa + 2 Gamma``.
    """
    Gamma, _ = spectral.gamma_dephasing(params)
    if params.nbar <= 1.0:
        return params.kappa + Gamma + abs(n) * params.gamma / 2
    return params.kappa + 2 * Gamma


@dataclass(frozen=True)
class SidebandSeriesA:
    """Truncated table of sideband weights and widths (widths in rad/s)."""

    n_min: int
    n_max: int
    weights: dict[int, float] = field(default_factory=dict)
    widths: dict[int, float] = field(default_factory=dict)
    truncation_error: float = 0.0

    def orders(self) -> np.ndarray:
        return np.arange(self.n_min, self.n_max + 1)

    def weight_array(self) -> np.ndarray:
        return np.array([self.weights[n] for n in range(self.n_min, self.n_max + 1)])

    def width_array(self) -> np.ndarray:
        return np.array([self.widths[n] for n in range(self.n_min, self.n_max + 1)])


def _weights_until_negligible(eta, nbar, tiny=1e-20):
    """All non-negligible ``A_n`` as ``{n: A_n}``, walking outward from the peak."""
    if eta * eta * (2 * nbar + 1) > MAX_SIDEBAND_VARIANCE:
        raise DomainError(
            f"sideband distribution too wide (eta^2 (2 nbar + 1) = {eta * eta * (2 * nbar + 1):.3g})")
    out = {}
    # mean order is eta^2; the distribution is unimodal around it
    centre = int(round(eta * eta))
    for step in (1, -1):
        n = centre if step == 1 else centre - 1
        while True:
            a = a_coeff(n, eta, nbar)
            out[n] = a
            if (a < tiny and abs(n - centre) > 2) or abs(n) > 5000:
                break
            if nbar == 0 and n < 0:
                break
            n += step
    return out


def default_n_cut(eta: float, nbar: float, tail: float = DEFAULT_TAIL) -> int:
    """Smallest ``n`` with ``sum_{|k|>n} A_k < tail``."""
    w = _weights_until_negligible(eta, nbar)
    n = 0
    while _tail(w, n) >= tail:
        n += 1
    return max(n, 1)


def _tail(weights: dict[int, float], n_cut: int) -> float:
    return float(sum(a for k, a in weights.items() if abs(k) > n_cut))


def sideband_series(params: SystemParams, n_cut: int | None = None,
                    *, zero_width_correction: bool = True) -> SidebandSeriesA:
    """Build the sideband table for ``params``.

    With ``zero_width_correction=False`` all widths are ``kappa`` (the
    infinite-Q reading used by the two-photon series).
    """
    eta, nbar = params.eta, params.nbar
    w = _weights_until_negligible(eta, nbar)
    if n_cut is None:
        n_cut = default_n_cut(eta, nbar)
    if n_cut < 1:
        raise ValueError("n_cut must be >= 1")
    n_min = 0 if nbar == 0 else -n_cut
    weights = {n: (w[n] if n in w else a_coeff(n, eta, nbar)) for n in range(n_min, n_cut + 1)}
    if zero_width_correction:
        widths = {n: kappa_n(n, params) for n in weights}
    else:
        widths = {n: params.kappa for n in weights}
    return SidebandSeriesA(n_min, n_cut, weights, widths, _tail(w, n_cut))


def s_from_table(delta0_m, params: SystemParams, table: SidebandSeriesA):
    """Lorentzian sum in units of omega_m; ``delta0_m`` may be an array."""
    d = np.asarray(delta0_m, dtype=float)[..., None] + params.delta_g_m
    n = table.orders()
    kn = table.width_array() / params.omega_m
    lor = kn / (kn ** 2 + (d - n) ** 2)
    return params.kappa_m * (lor @ table.weight_array())


def s_series(delta0, params: SystemParams, n_cut: int | None = None):
    """Excitation spectrum from the sideband series.

    Parameters
    ----------
    delta0 : float or array_like
        Bare detuning in rad/s.
    params : SystemParams
        ``params.detuning0`` is ignored in favour of ``delta0``.
    n_cut : int, optional
        Keep orders ``|n| <= n_cut``; default keeps a discarded weight below
        ``1e-12`` (see :attr:`SidebandSeriesA.truncation_error`).
    """
    table = sideband_series(params, n_cut)
    out = s_from_table(np.asarray(delta0, dtype=float) / params.omega_m, params, table)
    return float(out) if np.ndim(out) == 0 else out


def _segment_rule(rate: float, nodes: int):
    """Gauss-Legendre rule on one segment ``[0, h]``, ``h = 2 pi / ceil(rate)``."""
    h = 2 * math.pi / max(1, math.ceil(rate))
    x, w = np.polynomial.legendre.leggauss(nodes)
    return h, 0.5 * h * (x + 1.0), 0.5 * h * w


class _DelayGrid:
    """Segmented delay grid and ``exp(-F2)`` on it, shared by all detunings."""

    def __init__(self, params: SystemParams, spec: QuadratureSpec, max_abs_delta_m: float):
        self.params = params
        k = params.kappa_m
        _, tphi_inv = spectral.gamma_dephasing(params)
        rate = max(1.0, 2 * k, max_abs_delta_m / 3.0, 2 * tphi_inv / params.omega_m)
        h, x, w = _segment_rule(rate, spec.nodes_per_period)
        if spec.tau_max is not None:
            tau_end = spec.tau_max * params.omega_m
        else:
            # tail of kappa * int e^{-kappa tau} is below abs_tol
            tau_end = -math.log(spec.abs_tol) / k
        n_seg = max(1, math.ceil(tau_end / h))
        starts = h * np.arange(n_seg)[:, None]
        self.tau = (starts + x).ravel()
        self.weights = np.tile(w, n_seg)
        self.n_seg = n_seg
        self.kernel, self.delta_g_m = self._kernel(spec)

    def _kernel(self, spec):
        p = self.params
        if math.isinf(p.Q) or p.Q >= 100:
            f2 = spectral.f2_highq_m(self.tau, *spectral.highq_args(p))
            return np.exp(-f2), p.delta_g_m
        sd = SpectralDensity.from_params(p)
        x_m = p.x_m
        f2 = np.array([spectral._f2_quadrature_m(t, sd, x_m, spec) for t in self.tau])
        return np.exp(-f2), spectral.delta_g(sd, spec) / p.omega_m


def s_integral(delta0, params: SystemParams, spec: QuadratureSpec = _DEFAULT_SPEC):
    """Excitation spectrum by delay-time quadrature.

    ``S = kappa Re int_0^inf exp((i Delta - kappa) tau) exp(-F2(tau)) dtau``
    with ``Delta = delta0 + Delta_g``. The delay axis is cut into mechanical
    periods (or shorter segments when the integrand varies faster), each
    integrated with a fixed Gauss-Legendre rule. ``F2`` comes from the high-Q
    closed form when ``Q >= 100`` and from frequency quadrature otherwise.
    """
    d0 = np.asarray(delta0, dtype=float) / params.omega_m
    grid = _DelayGrid(params, spec, float(np.max(np.abs(d0))) + params.delta_g_m)
    delta = d0[..., None] + grid.delta_g_m
    k = params.kappa_m
    phase = np.exp((1j * delta - k) * grid.tau)
    out = k * np.real(phase @ (grid.weights * grid.kernel))
    return float(out) if np.ndim(out) == 0 else out


def s_bad_cavity(delta0, params: SystemParams):
    """Gaussian line ``sqrt(pi) kappa T_phi exp(-(delta0 T_phi)^2)``."""
    if params.kappa < params.omega_m:
        warnings.warn("bad-cavity line shape used with kappa < omega_m", stacklevel=2)
    _, tphi_inv = spectral.gamma_dephasing(params)
    t_phi = 1.0 / tphi_inv
    d0 = np.asarray(delta0, dtype=float)
    out = math.sqrt(math.pi) * params.kappa * t_phi * np.exp(-(d0 * t_phi) ** 2)
    return float(out) if np.ndim(out) == 0 else out
