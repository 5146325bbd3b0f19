"""Equal-time two-photon correlation ``g2(0)`` at weak drive.

The two-photon moment ``G2`` (normalized by the squared empty-cavity photon
number) is computed from the triple sideband sum over the weights
``B[n, m, p]`` (:func:`g2_series`) or by direct triple delay-time quadrature
of ``exp(-F4)`` (:func:`g2_integral`). ``g2 = G2 / S**2`` with ``S`` taken
from the same route. Closed-form estimates live alongside.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.special import gammaln

from . import spectral, spectrum
from .errors import ConvergenceError, ResolutionError, SearchError, TruncationError
from .params import QuadratureSpec, SystemParams
from .specfun import w_over_factorial

_DEFAULT_SPEC = QuadratureSpec()


@dataclass(frozen=True)
class BCoeffTable:
    """Two-photon sideband weights on a box of orders.

    ``values[i, j, k]`` holds ``B[n_min + i, m_min + j, p_min + k]``.
    """

    n_min: int
    m_min: int
    p_min: int
    values: np.ndarray
    truncation_error: float
    eta: float
    nbar: float

    @property
    def cutoffs(self) -> tuple[int, int, int]:
        nx, mx, px = self.values.shape
        return self.n_min + nx - 1, self.m_min + mx - 1, self.p_min + px - 1

    def orders(self):
        nx, mx, px = self.values.shape
        return (np.arange(self.n_min, self.n_min + nx),
                np.arange(self.m_min, self.m_min + mx),
                np.arange(self.p_min, self.p_min + px))

    def __getitem__(self, nmp) -> float:
        n, m, p = nmp
        i, j, k = n - self.n_min, m - self.m_min, p - self.p_min
        nx, mx, px = self.values.shape
        if 0 <= i < nx and 0 <= j < mx and 0 <= k < px:
            return float(self.values[i, j, k])
        return 0.0

    def total(self) -> float:
        return float(self.values.sum())

    def restricted(self, n_cut: int) -> "BCoeffTable":
        """Keep only ``|n|, |m|, |p| <= n_cut``."""
        n, m, p = self.orders()
        sel = [np.abs(o) <= n_cut for o in (n, m, p)]
        vals = self.values[np.ix_(*sel)]
        lo = [int(o[s][0]) for o, s in zip((n, m, p), sel)]
        return BCoeffTable(*lo, vals, abs(1.0 - float(vals.sum())) + self.truncation_error,
                           self.eta, self.nbar)


@dataclass
class G2Result:
    """Outcome of a ``g2(0)`` evaluation."""

    g2: float
    G2_raw: float
    S_value: float
    method: str
    diagnostics: dict = field(default_factory=dict)


def b_coeff_t0(n: int, m: int, p: int, eta: float) -> float:
    """Zero-temperature weight ``exp(-2 eta^2) eta^(2p) W_np W_mp / (n! m! p!)``."""
    if min(n, m, p) < 0:
        return 0.0
    s = eta * eta
    pref = math.exp(-2 * s + p * math.log(s) - math.lgamma(p + 1))
    lo, hi = sorted((n, m))  # fixed product order keeps n <-> m symmetry exact
    return pref * w_over_factorial(lo, p, eta) * w_over_factorial(hi, p, eta)


def _b_box_t0(eta: float, k_max: int) -> np.ndarray:
    s = eta * eta
    c = np.array([[w_over_factorial(n, p, eta) for p in range(k_max + 1)]
                  for n in range(k_max + 1)])
    p = np.arange(k_max + 1)
    pref = np.exp(-2 * s + p * math.log(s) - gammaln(p + 1))
    # B[n, m, p] = pref[p] c[n, p] c[m, p]
    return np.einsum("np,mp,p->nmp", c, c, pref)


def b_table_t0(eta: float, tol: float = 1e-10, k_start: int = 12, k_limit: int = 100) -> BCoeffTable:
    """Closed-form zero-temperature table, grown until the cut weight is below ``tol``."""
    if eta <= 0:
        raise ValueError("eta must be positive")
    k = k_start
    while True:
        box = _b_box_t0(eta, k)
        shell = max(np.abs(box[-1]).max(), np.abs(box[:, -1]).max(), np.abs(box[:, :, -1]).max())
        err = abs(1.0 - box.sum())
        if (err < tol and shell < 1e-3 * tol) or k >= k_limit:
            break
        k = min(k_limit, int(k * 1.5))
    return BCoeffTable(0, 0, 0, box, err, eta, 0.0)


def b_table_numeric(eta: float, nbar: float, grid: int = 128) -> BCoeffTable:
    """Extract ``B`` by discrete Fourier analysis of ``exp(-F4)`` over one period.

    Valid for infinite Q, where ``exp(-F4)`` is exactly periodic in each
    delay. The fundamental harmonics carry the signs
    ``exp(i (n tau2 - m tau3 - p tau1))``.
    """
    if grid < 64 or grid & (grid - 1):
        raise ValueError("grid must be a power of two >= 64")
    # exp(-F2) is 2 pi periodic, so every delay combination is a grid index mod grid
    tau = 2 * math.pi * np.arange(grid) / grid
    e = np.exp(-spectral.f2_highq_m(tau, eta, nbar, 0.0, 0.0))
    i = np.arange(grid)
    i1, i2, i3 = i[:, None, None], i[None, :, None], i[None, None, :]
    # product form of exp(-F4) for the six-term F2 decomposition
    h = (e[i1] * e[(i1 - i2) % grid] * e[(i1 + i3) % grid] * e[(i1 + i3 - i2) % grid]
         / (e[(-i2) % grid] * e[i3]))
    # coefficient of exp(-i p tau1): ifft; exp(+i n tau2): fft / N; exp(-i m tau3): ifft
    c = np.fft.ifft(h, axis=0)
    c = np.fft.fft(c, axis=1) / grid
    c = np.fft.ifft(c, axis=2)
    c = np.fft.fftshift(c)  # axes now (p, n, m), zero order at index grid // 2
    keep = grid // 4
    mid = grid // 2
    inner = c[mid - keep + 1: mid + keep, mid - keep + 1: mid + keep, mid - keep + 1: mid + keep]
    outer_max = float(np.abs(c).max()) if inner.size == 0 else float(
        max(np.abs(c[: mid - keep + 1]).max(), np.abs(c[mid + keep:]).max(),
            np.abs(c[:, : mid - keep + 1]).max(), np.abs(c[:, mid + keep:]).max(),
            np.abs(c[:, :, : mid - keep + 1]).max(), np.abs(c[:, :, mid + keep:]).max()))
    if outer_max > 1e-8:
        raise ResolutionError(f"aliased modes up to {outer_max:.2e}; increase grid", leakage=outer_max)
    if np.abs(inner.imag).max() > 1e-8:
        raise ResolutionError("extracted weights are not real", leakage=float(np.abs(inner.imag).max()))
    vals = np.transpose(inner.real, (1, 2, 0))  # -> (n, m, p)
    lo = -keep + 1
    vals, (n0, m0, p0) = _trim(vals, (lo, lo, lo), 1e-18)
    return BCoeffTable(n0, m0, p0, vals, abs(1.0 - vals.sum()) + outer_max, eta, nbar)


def _trim(vals, lows, floor):
    mask = np.abs(vals) > floor
    idx = []
    for ax in range(3):
        other = tuple(a for a in range(3) if a != ax)
        hit = np.nonzero(mask.any(axis=other))[0]
        idx.append((hit[0], hit[-1] + 1))
    # n and m share one extent so the table stays symmetric
    shared = (min(idx[0][0], idx[1][0]), max(idx[0][1], idx[1][1]))
    idx[0] = idx[1] = shared
    sl = tuple(slice(a, b) for a, b in idx)
    return vals[sl], tuple(l + a for l, (a, _) in zip(lows, idx))


def b_table(params: SystemParams, tol: float = 1e-10) -> BCoeffTable:
    """Closed form at zero temperature, Fourier extraction otherwise."""
    if params.nbar == 0:
        return b_table_t0(params.eta, tol)
    return b_table_numeric(params.eta, params.nbar)


def _g2_terms(d0_m: np.ndarray, params: SystemParams, table: BCoeffTable):
    """Raw ``G2`` for an array of bare detunings (units of omega_m)."""
    k = params.kappa_m
    dg = params.delta_g_m
    delta = d0_m[:, None] + dg
    n, m, p = table.orders()
    a = 1.0 / (k + 1j * (delta - n))
    b = 1.0 / (k - 1j * (delta - m))
    d = 2 * k ** 3 / (2 * k - 1j * (2 * delta + 2 * dg - p))
    return np.real(np.einsum("nmp,kn,km,kp->k", table.values, a, b, d, optimize=True))


def _check_table(params: SystemParams, table: BCoeffTable, rel_tol: float):
    if not (math.isclose(table.eta, params.eta, rel_tol=1e-12)
            and math.isclose(table.nbar, params.nbar, rel_tol=1e-9, abs_tol=1e-15)):
        raise ValueError("B table was built for different eta/nbar")
    if table.truncation_error > rel_tol:
        raise TruncationError(
            f"B table truncation error {table.truncation_error:.2e} exceeds {rel_tol:.2e}",
            leakage=table.truncation_error)
    if params.gamma > 1e-3 * params.kappa:
        warnings.warn("two-photon series neglects mechanical damping; gamma is not << kappa",
                      stacklevel=3)


def g2_series_values(delta0, params: SystemParams, table: BCoeffTable | None = None,
                     rel_tol: float = 1e-8):
    """Vectorized ``g2`` from the series; returns ``(g2, G2, S)`` arrays."""
    if params.g0 == 0:
        d0 = np.atleast_1d(np.asarray(delta0, dtype=float)) / params.omega_m
        s = params.kappa_m ** 2 / (params.kappa_m ** 2 + d0 ** 2)
        return np.ones_like(s), s ** 2, s
    if table is None:
        table = b_table(params)
    _check_table(params, table, rel_tol)
    d0 = np.atleast_1d(np.asarray(delta0, dtype=float)) / params.omega_m
    a_table = spectrum.sideband_series(params, zero_width_correction=False)
    s = spectrum.s_from_table(d0, params, a_table)
    big = _g2_terms(d0, params, table)
    return big / s ** 2, big, s


def g2_series(delta0: float, params: SystemParams, table: BCoeffTable | None = None,
              n_cut: int | None = None, rel_tol: float = 1e-8) -> G2Result:
    """``g2(0)`` from the triple sideband sum.

    Parameters
    ----------
    delta0 : float
        Bare detuning, rad/s.
    params : SystemParams
        Mechanical damping is ignored (infinite-Q reading).
    table : BCoeffTable, optional
        Precomputed weights; built from ``params`` when omitted.
    n_cut : int, optional
        Restrict the table to orders ``|n|, |m|, |p| <= n_cut``.
    rel_tol : float
        Largest acceptable table truncation error.
    """
    if params.g0 > 0:
        if table is None:
            table = b_table(params)
        if n_cut is not None:
            table = table.restricted(n_cut)
    g2, big, s = g2_series_values(delta0, params, table, rel_tol)
    diag = {}
    if table is not None:
        diag = {"cutoffs": table.cutoffs, "b_truncation_error": table.truncation_error,
                "b_sum": table.total()}
    return G2Result(float(g2[0]), float(big[0]), float(s[0]), "series", diag)


def _axis_rule(rate: float, nodes: int, period: float):
    """Gauss-Legendre nodes on ``[0, period]`` split into ``ceil(rate)`` segments."""
    n_seg = max(1, math.ceil(rate))
    h = period / n_seg
    x, w = np.polynomial.legendre.leggauss(nodes)
    starts = h * np.arange(n_seg)[:, None]
    return (starts + 0.5 * h * (x + 1)).ravel(), np.tile(0.5 * h * w, n_seg)


def g2_integral(delta0: float, params: SystemParams,
                spec: QuadratureSpec = _DEFAULT_SPEC) -> G2Result:
    """``g2(0)`` by direct triple quadrature over the three delays.

    The kernel is
    ``exp(2(i Delta + i Delta_g - kappa) t1) exp((-i Delta - kappa) t2)
    exp((i Delta - kappa) t3) exp(-F4(t1, t2, t3))``. At infinite Q,
    ``exp(-F4)`` is periodic in each delay, so each semi-infinite axis folds
    exactly onto one mechanical period with a geometric factor
    ``1 / (1 - exp(-a 2 pi))``. Finite Q sums periods explicitly until the
    ``exp(-kappa tau)`` envelope drops below ``spec.abs_tol``, which is only
    practical for large ``kappa``.
    """
    k = params.kappa_m
    d0 = delta0 / params.omega_m
    if params.g0 == 0:
        return G2Result(1.0, (k ** 2 / (k ** 2 + d0 ** 2)) ** 2, k ** 2 / (k ** 2 + d0 ** 2),
                        "quadrature", {"note": "uncoupled cavity"})
    dg = params.delta_g_m
    delta = d0 + dg
    rates = np.array([2 * k - 2j * (delta + dg), k + 1j * delta, k - 1j * delta])
    if math.isinf(params.Q):
        _, tphi_inv = spectral.gamma_dephasing(params)
        rate = max(1.0, abs(delta) / 2, 2 * abs(dg), tphi_inv / params.omega_m, k)
        period = 2 * math.pi
        tau, w = _axis_rule(2 * rate, spec.nodes_per_period, period)
        folds = 1.0 / (1.0 - np.exp(-rates * period))
        axes = [(tau, w * np.exp(-r * tau) * f) for r, f in zip(rates, folds)]
    else:
        spectral._check_high_q(params.Q)
        axes = []
        for r in rates:
            end = -math.log(spec.abs_tol) / r.real
            rate = max(1.0, abs(r.imag) / 2, k)
            n_per = math.ceil(end / (2 * math.pi))
            tau, w = _axis_rule(2 * rate * n_per, spec.nodes_per_period, 2 * math.pi * n_per)
            axes.append((tau, w * np.exp(-r * tau)))
        n_pts = np.prod([len(a[0]) for a in axes])
        if n_pts > 5e8:
            raise ConvergenceError(
                f"finite-Q triple quadrature needs {n_pts:.1e} points; use the oracle", estimate=None)
    (t1, w1), (t2, w2), (t3, w3) = axes
    args = spectral.highq_args(params)

    def f2(s):
        return spectral.f2_highq_m(s, *args)

    total = 0j
    chunk = max(1, int(2e6 // (len(t2) * len(t3))))
    for start in range(0, len(t1), chunk):
        a1 = t1[start:start + chunk, None, None]
        kern = np.exp(-spectral.f4_from_f2(f2, a1, t2[None, :, None], t3[None, None, :]))
        total += np.einsum("ijk,i,j,k->", kern, w1[start:start + chunk], w2, w3)
    big = 2 * k ** 3 * total.real
    s = spectrum.s_integral(delta0, params, spec)
    return G2Result(big / s ** 2, big, s, "quadrature",
                    {"nodes": tuple(len(a[0]) for a in axes)})


def approx_constants(params: SystemParams, table: BCoeffTable | None = None) -> tuple[float, float]:
    """``C0 = B000 / A0^2`` and ``C1 = B001 / (eta^2 A0^2)``; both 1 at ``T = 0``."""
    if params.nbar == 0:
        return 1.0, 1.0
    if table is None:
        table = b_table(params)
    a0 = spectrum.a_coeff(0, params.eta, params.nbar)
    return table[0, 0, 0] / a0 ** 2, table[0, 0, 1] / (params.eta ** 2 * a0 ** 2)


def g2_approx(delta0, params: SystemParams, table: BCoeffTable | None = None):
    """Two-Lorentzian estimate of ``g2(0)`` near the zero-phonon line.

    ``C0 (k^2 + D^2) / (k^2 + (D + Dg)^2)
    + eta^2 C1 (k^2 + D^2) / (k^2 + (D + Dg - wm/2)^2)`` with ``D = delta0 + Dg``.
    """
    eta, k, dg = params.eta, params.kappa_m, params.delta_g_m
    d = np.asarray(delta0, dtype=float) / params.omega_m + dg
    if eta >= 1 or k >= 1 or np.any(np.abs(d) > 0.5):
        warnings.warn("g2_approx outside eta < 1, kappa < omega_m, |Delta| << omega_m",
                      stacklevel=2)
    c0, c1 = approx_constants(params, table) if eta > 0 else (1.0, 1.0)
    num = k * k + d * d
    out = c0 * num / (k * k + (d + dg) ** 2) + eta ** 2 * c1 * num / (k * k + (d + dg - 0.5) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def g2_min_formula_value(eta: float, kappa_m: float) -> float:
    """``(k/wm)^2 [1/eta^4 + 4 eta^2 / ((k/wm)^2 + (1 - 2 eta^2)^2)]``."""
    return kappa_m ** 2 * (1 / eta ** 4 + 4 * eta ** 2 / (kappa_m ** 2 + (1 - 2 * eta ** 2) ** 2))


def g2_min(params: SystemParams, mode: str = "scan", *, full_range: bool = False,
           table: BCoeffTable | None = None, points: int = 201) -> tuple[float, float]:
    """Minimum of ``g2(0)`` over the bare detuning.

    Returns ``(delta0_opt, g2_min)`` with ``delta0_opt`` in rad/s.

    ``mode="formula"`` gives the closed form at ``Delta = 0`` when
    ``g0 > kappa`` and ``1 - g0^2/(omega_m kappa)`` at ``Delta = kappa``
    otherwise. ``mode="scan"`` evaluates the series on a grid around the
    zero-phonon line (``+- omega_m/2``; ``+- 2 omega_m`` with
    ``full_range``) and refines the best point by golden-section search.
    """
    wm, dg, k = params.omega_m, params.delta_g_m, params.kappa_m
    if mode == "formula":
        if params.g0 > params.kappa:
            return -dg * wm, g2_min_formula_value(params.eta, k)
        return (k - dg) * wm, 1.0 - params.eta ** 2 / k
    if mode != "scan":
        raise ValueError(f"unknown mode {mode!r}")
    if params.g0 == 0:
        return 0.0, 1.0
    if table is None:
        table = b_table(params)
    half = 2.0 if full_range else 0.5
    if full_range:
        points = max(points, 801)
    grid = np.linspace(-dg - half, -dg + half, points)
    vals, _, _ = g2_series_values(grid * wm, params, table)
    i = int(np.argmin(vals))
    if i in (0, len(grid) - 1):
        return grid[i] * wm, float(vals[i])

    def f(x):
        return float(g2_series_values(np.array([x * wm]), params, table)[0][0])

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = optimize.minimize_scalar(f, bracket=(grid[i - 1], grid[i], grid[i + 1]),
                                       method="golden", tol=1e-10)
    if not res.success or res.fun > vals[i] * (1 + 1e-12):
        raise SearchError(f"golden-section refinement failed: {res.message}")
    return float(res.x) * wm, float(res.fun)


def g2_bad_cavity(delta0, params: SystemParams):
    """Bad-cavity estimate ``exp((delta0 T_phi)^2) / (sqrt(4 pi) kappa T_phi)``."""
    _, tphi_inv = spectral.gamma_dephasing(params)
    t_phi = 1.0 / tphi_inv
    d0 = np.asarray(delta0, dtype=float)
    out = np.exp((d0 * t_phi) ** 2) / (math.sqrt(4 * math.pi) * params.kappa * t_phi)
    return float(out) if np.ndim(out) == 0 else out
