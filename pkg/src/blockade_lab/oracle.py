"""Brute-force master-equation reference.

Builds the single-mode driven optomechanical Hamiltonian on a truncated
photon x phonon Fock space and solves the Lindblad equation for its steady
state. None of the series or kernel machinery is used here.

Rate convention: the cavity field decays at ``kappa``, so the photon collapse
operator is ``sqrt(2 kappa) c``. The mechanics sees a local thermal bath with
collapse operators ``sqrt(gamma (nbar+1)) b`` and ``sqrt(gamma nbar) b^dag``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import expm_multiply, splu

from .errors import ConvergenceError, SizeError, SolverError, TruncationError
from .params import SystemParams

MAX_BASIS = 10 ** 6
_NULLSPACE_LIMIT = 10 ** 4  # Hilbert dimension above which time integration is used


@dataclass(frozen=True)
class TruncationSpec:
    n_photon_max: int = 4
    n_phonon_max: int = 14
    leakage_tol: float = 1e-6

    def __post_init__(self):
        if self.n_photon_max < 2 or self.n_phonon_max < 4:
            raise ValueError("need n_photon_max >= 2 and n_phonon_max >= 4")

    @property
    def dims(self) -> tuple[int, int]:
        return self.n_photon_max + 1, self.n_phonon_max + 1


def default_truncation(params: SystemParams, leakage_tol: float = 1e-6) -> TruncationSpec:
    eta, nbar = params.eta, params.nbar
    n_b = math.ceil(16 * eta ** 2 + 10 + 4 * math.sqrt(nbar) * eta)
    return TruncationSpec(4, n_b, leakage_tol)


@dataclass
class SteadyStateResult:
    """Observables of a steady state (or of an extrapolation over drives)."""

    mean_photon: float
    two_photon_moment: float
    g2: float
    trace_defect: float
    leakage: float
    method: str
    spectrum_value: float = math.nan
    drive: float = math.nan
    hermiticity_defect: float = 0.0
    min_eigenvalue: float = 0.0
    notes: list = field(default_factory=list)
    rho: np.ndarray | None = field(default=None, repr=False)


def _ladder(dim: int) -> sp.csr_matrix:
    return sp.diags(np.sqrt(np.arange(1, dim)), 1, format="csr", dtype=complex)


def operators(trunc: TruncationSpec):
    """Return ``(c, b)`` on the product space, photon factor first."""
    dc, db = trunc.dims
    if dc * db > MAX_BASIS:
        raise SizeError(f"basis of {dc * db} states exceeds {MAX_BASIS}")
    c = sp.kron(_ladder(dc), sp.identity(db), format="csr")
    b = sp.kron(sp.identity(dc), _ladder(db), format="csr")
    return c, b


def build_hamiltonian(params: SystemParams, trunc: TruncationSpec) -> sp.csr_matrix:
    """``-D0 c^dag c + wm b^dag b + g0 (b^dag + b) c^dag c + i E (c^dag - c)`` in rad/s.

    Basis index is ``n_c * (n_phonon_max + 1) + n_b``.
    """
    c, b = operators(trunc)
    cd, bd = c.getH(), b.getH()
    n_c = cd @ c
    h = (-params.detuning0 * n_c + params.omega_m * (bd @ b)
         + params.g0 * ((bd + b) @ n_c) + 1j * params.drive * (cd - c))
    return h.tocsr()


def _dissipator(op: sp.spmatrix, ident: sp.spmatrix) -> sp.spmatrix:
    # column-stacking: vec(A X B) = (B^T kron A) vec(X)
    opd_op = (op.getH() @ op).tocsr()
    return (sp.kron(op.conj(), op) - 0.5 * sp.kron(ident, opd_op)
            - 0.5 * sp.kron(opd_op.T, ident))


def liouvillian(params: SystemParams, trunc: TruncationSpec, closed: bool = False) -> sp.csc_matrix:
    """Vectorized Lindblad generator in units of ``omega_m`` (column stacking)."""
    h = build_hamiltonian(params, trunc) / params.omega_m
    ident = sp.identity(h.shape[0], format="csr", dtype=complex)
    lv = -1j * (sp.kron(ident, h) - sp.kron(h.T, ident))
    if not closed:
        c, b = operators(trunc)
        lv = lv + 2 * params.kappa_m * _dissipator(c, ident)
        g = params.gamma_m
        if g > 0:
            nbar = params.nbar
            lv = lv + g * (nbar + 1) * _dissipator(b, ident)
            if nbar > 0:
                lv = lv + g * nbar * _dissipator(b.getH(), ident)
    return lv.tocsc()


def thermal_phonon_state(params: SystemParams, trunc: TruncationSpec) -> np.ndarray:
    """Photon vacuum times a (renormalized) thermal phonon state."""
    dc, db = trunc.dims
    nbar = params.nbar
    if nbar == 0:
        pops = np.zeros(db)
        pops[0] = 1.0
    else:
        pops = (nbar / (nbar + 1)) ** np.arange(db)
        pops /= pops.sum()
    rho_c = np.zeros((dc, dc))
    rho_c[0, 0] = 1.0
    return np.kron(rho_c, np.diag(pops)).astype(complex)


def _vec(rho):
    return np.asarray(rho).reshape(-1, order="F")


def _unvec(v, d):
    return np.asarray(v).reshape(d, d, order="F")


def _normalize(v, d):
    rho = _unvec(v, d)
    return v / np.trace(rho)


def _nullspace(lv: sp.csc_matrix, d: int, starts, tol=1e-13, max_iter=20):
    shift = 1e-11
    lu = splu((lv - shift * sp.identity(lv.shape[0], format="csc")).tocsc())
    out = []
    for v in starts:
        v = _normalize(v, d)
        for _ in range(max_iter):
            w = _normalize(lu.solve(v), d)
            delta = np.linalg.norm(w - v) / np.linalg.norm(w)
            v = w
            if delta < tol:
                break
        out.append(v)
    return out


def _time_integrate(lv, v0, d, max_time=1e7, tol=1e-12):
    v = v0
    dt = 1.0
    t = 0.0
    while t < max_time:
        v = expm_multiply(lv * dt, v)
        t += dt
        resid = np.linalg.norm(lv @ v) / np.linalg.norm(v)
        if resid < tol:
            return _normalize(v, d), t
        dt = min(dt * 2, 1e3)
    raise ConvergenceError(f"time integration not stationary after t={t}", estimate=resid)


def measure(rho: np.ndarray, trunc: TruncationSpec, params: SystemParams, method: str) -> SteadyStateResult:
    c, b = operators(trunc)
    dc, db = trunc.dims
    trace = np.trace(rho)
    herm = float(np.abs(rho - rho.conj().T).max())
    rho_h = 0.5 * (rho + rho.conj().T)
    n_c = c.getH() @ c
    two = (c.getH() @ c.getH() @ c @ c)
    mean = float(np.real(np.sum(n_c.multiply(rho_h.T))))
    g2_moment = float(np.real(np.sum(two.multiply(rho_h.T))))
    pops = np.real(np.diag(rho_h)).reshape(dc, db)
    leakage = float(max(pops[-1].sum(), pops[:, -1].sum()))
    min_eig = float(np.linalg.eigvalsh(rho_h).min())
    n0 = params.drive ** 2 / params.kappa ** 2 if params.drive > 0 else math.nan
    return SteadyStateResult(
        mean_photon=mean,
        two_photon_moment=g2_moment,
        g2=g2_moment / mean ** 2 if mean > 0 else math.nan,
        trace_defect=float(abs(trace - 1)),
        leakage=leakage,
        method=method,
        spectrum_value=mean / n0,
        drive=params.drive,
        hermiticity_defect=herm,
        min_eigenvalue=min_eig,
        rho=rho,
    )


def steady_state(params: SystemParams, trunc: TruncationSpec | None = None,
                 method: str = "nullspace") -> SteadyStateResult:
    """Steady state of the driven, damped system.

    Parameters
    ----------
    params : SystemParams
        Needs ``drive > 0`` and a finite Q.
    trunc : TruncationSpec, optional
        Defaults to :func:`default_truncation`.
    method : {"nullspace", "time-integration"}
        ``nullspace`` runs shifted inverse iteration on the vectorized
        generator; ``time-integration`` propagates from the photon vacuum
        times the thermal phonon state. Large spaces always integrate.

    Raises
    ------
    TruncationError
        When the top photon or phonon level holds more than
        ``trunc.leakage_tol`` of the population.
    SolverError
        For a degenerate steady state or an unphysical density matrix.
    """
    if params.drive <= 0:
        raise ValueError("steady_state needs drive > 0")
    if math.isinf(params.Q):
        raise ValueError("oracle needs a finite Q so that the mechanics relaxes")
    trunc = trunc or default_truncation(params)
    dc, db = trunc.dims
    d = dc * db
    lv = liouvillian(params, trunc)
    rho0 = thermal_phonon_state(params, trunc)
    if method == "nullspace" and d <= _NULLSPACE_LIMIT:
        uniform = _vec(np.identity(d, dtype=complex) / d)
        v1, v2 = _nullspace(lv, d, [uniform, _vec(rho0)])
        spread = np.linalg.norm(v1 - v2) / np.linalg.norm(v1)
        if spread > 1e-6:
            raise SolverError(f"steady state is degenerate (spread {spread:.2e})")
        v = v1
        used = "nullspace"
    elif method in ("nullspace", "time-integration"):
        v, _ = _time_integrate(lv, _vec(rho0), d)
        used = "time-integration"
    else:
        raise ValueError(f"unknown method {method!r}")
    rho = _unvec(v, d)
    res = measure(rho, trunc, params, used)
    if res.trace_defect > 1e-10 or res.hermiticity_defect > 1e-10 or res.min_eigenvalue < -1e-8:
        raise SolverError(
            f"unphysical steady state: trace defect {res.trace_defect:.1e}, "
            f"hermiticity {res.hermiticity_defect:.1e}, min eigenvalue {res.min_eigenvalue:.1e}")
    if res.leakage > trunc.leakage_tol:
        raise TruncationError(
            f"top-level population {res.leakage:.2e} exceeds {trunc.leakage_tol:.1e}",
            leakage=res.leakage)
    return res


def weak_drive_extrapolation(params: SystemParams, trunc: TruncationSpec | None = None,
                             drives=(0.01, 0.02), *, relative: bool = True,
                             method: str = "nullspace") -> SteadyStateResult:
    """Extrapolate ``g2`` and the normalized spectrum to vanishing drive.

    Each observable is fitted linearly in ``drive**2``. ``drives`` are in
    units of ``kappa`` when ``relative`` is true, otherwise rad/s.
    """
    drives = [float(e) * (params.kappa if relative else 1.0) for e in drives]
    if len(drives) < 2:
        raise ValueError("need at least two drive values")
    if max(drives) > 0.1 * params.kappa * (1 + 1e-12):
        raise ValueError("drives must not exceed 0.1 kappa")
    trunc = trunc or default_truncation(params)
    runs = [steady_state(params.replace(drive=e), trunc, method) for e in drives]
    x = np.array(drives) ** 2
    notes = []

    def fit(y):
        y = np.asarray(y)
        coef = np.polyfit(x, y, 1)
        resid = float(np.abs(np.polyval(coef, x) - y).max()) if len(x) > 2 else 0.0
        return float(coef[1]), float(coef[0]), resid

    g2_0, g2_slope, g2_res = fit([r.g2 for r in runs])
    s_0, _, s_res = fit([r.spectrum_value for r in runs])
    if len(x) > 2:
        tol = 1e-3 * abs(g2_0)
        if g2_res > tol:
            notes.append(f"g2 fit residual {g2_res:.2e} exceeds {tol:.2e}")
            warnings.warn(notes[-1], stacklevel=2)
    notes.append(f"g2 slope in drive^2: {g2_slope:.6e}")
    first = runs[0]
    return SteadyStateResult(
        mean_photon=first.mean_photon,
        two_photon_moment=first.two_photon_moment,
        g2=g2_0,
        trace_defect=max(r.trace_defect for r in runs),
        leakage=max(r.leakage for r in runs),
        method=f"{first.method}+extrapolation",
        spectrum_value=s_0,
        drive=0.0,
        hermiticity_defect=max(r.hermiticity_defect for r in runs),
        min_eigenvalue=min(r.min_eigenvalue for r in runs),
        notes=notes,
    )


def evolve(params: SystemParams, trunc: TruncationSpec, rho0: np.ndarray, times,
           closed: bool = False) -> list[np.ndarray]:
    """Density matrices at ``times`` (seconds) starting from ``rho0`` at t = 0.

    With ``closed=True`` all dissipators are dropped (isolated system).
    """
    lv = liouvillian(params, trunc, closed=closed)
    d = rho0.shape[0]
    times = np.asarray(times, dtype=float) * params.omega_m
    out = []
    v = _vec(rho0.astype(complex))
    t_prev = 0.0
    for t in times:
        if t < t_prev:
            raise ValueError("times must be non-decreasing")
        if t > t_prev:
            v = expm_multiply(lv * (t - t_prev), v)
        t_prev = t
        out.append(_unvec(v, d).copy())
    return out


def expectation(op: sp.spmatrix, rho: np.ndarray) -> complex:
    return complex(np.sum(op.multiply(rho.T)))
