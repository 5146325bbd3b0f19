"""Parameter bundles.

Frequencies and rates are angular (rad/s) at this boundary. The numerical
modules work in units of the mechanical frequency, so most code reads the
dimensionless ratios exposed by :class:`SystemParams` (``eta``, ``kappa_m``,
``delta_g_m`` and friends) rather than the raw fields.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from scipy.constants import hbar, k as k_B

from .errors import DomainError


def thermal_ratio(omega: float, T: float) -> float:
    """Return ``hbar * omega / (k_B * T)``; ``inf`` at zero temperature."""
    if T == 0:
        return math.inf
    return hbar * omega / (k_B * T)


def temperature_for_nbar(nbar: float, omega_m: float) -> float:
    """Temperature at which the mode ``omega_m`` has mean occupation ``nbar``."""
    if nbar < 0:
        raise DomainError("nbar must be non-negative")
    if nbar == 0:
        return 0.0
    return hbar * omega_m / (k_B * math.log1p(1.0 / nbar))


@dataclass(frozen=True)
class SystemParams:
    """Physical parameters of the driven optomechanical cavity.

    Parameters
    ----------
    g0 : float
        Single-photon coupling, rad/s.
    omega_m : float
        Mechanical frequency, rad/s.
    kappa : float
        Cavity *field* decay rate, rad/s (photon number decays at ``2 kappa``).
    Q : float
        Mechanical quality factor, ``>= 1`` or ``math.inf``.
    T : float
        Support temperature in kelvin.
    drive : float
        Drive amplitude, rad/s.
    detuning0 : float
        Bare laser detuning ``omega_L - omega_c``, rad/s.
    """

    g0: float
    omega_m: float = 1.0
    kappa: float = 0.1
    Q: float = math.inf
    T: float = 0.0
    drive: float = 0.0
    detuning0: float = 0.0

    def __post_init__(self):
        for name in ("g0", "omega_m", "kappa", "T", "drive", "detuning0"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        if self.g0 < 0:
            raise DomainError("g0 must be non-negative")
        if self.omega_m <= 0 or self.kappa <= 0:
            raise DomainError("omega_m and kappa must be positive")
        if not (self.Q >= 1):
            raise DomainError("Q must be >= 1 (or inf)")
        if self.T < 0 or self.drive < 0:
            raise DomainError("T and drive must be non-negative")

    def replace(self, **changes) -> "SystemParams":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_ratios(cls, eta, kappa, *, omega_m=1.0, Q=math.inf, nbar=0.0,
                    drive=0.0, detuning0=0.0):
        """Build from ``g0/omega_m``, ``kappa/omega_m`` and the occupation."""
        return cls(
            g0=eta * omega_m,
            omega_m=omega_m,
            kappa=kappa * omega_m,
            Q=Q,
            T=temperature_for_nbar(nbar, omega_m),
            drive=drive * omega_m,
            detuning0=detuning0 * omega_m,
        )

    @property
    def eta(self) -> float:
        return self.g0 / self.omega_m

    @property
    def delta_g(self) -> float:
        """Single-mode photon nonlinearity ``g0**2 / omega_m`` (rad/s)."""
        return self.g0 ** 2 / self.omega_m

    @property
    def gamma(self) -> float:
        """Mechanical damping rate ``omega_m / Q``; zero for infinite Q."""
        return 0.0 if math.isinf(self.Q) else self.omega_m / self.Q

    @property
    def x_m(self) -> float:
        """``hbar omega_m / k_B T``."""
        return thermal_ratio(self.omega_m, self.T)

    @property
    def nbar(self) -> float:
        x = self.x_m
        return 0.0 if math.isinf(x) else 1.0 / math.expm1(x)

    # dimensionless views (units of omega_m)
    @property
    def kappa_m(self) -> float:
        return self.kappa / self.omega_m

    @property
    def delta_g_m(self) -> float:
        return self.eta ** 2

    @property
    def gamma_m(self) -> float:
        return 0.0 if math.isinf(self.Q) else 1.0 / self.Q

    @property
    def drive_m(self) -> float:
        return self.drive / self.omega_m

    @property
    def detuning0_m(self) -> float:
        return self.detuning0 / self.omega_m


@dataclass(frozen=True)
class SpectralDensity:
    """Ohmic bath with a single mechanical resonance.

    ``J(w) = (w/Q) eta^2 / ((w^2/wm^2 - 1)^2 + w^2/(wm^2 Q^2))``
    """

    omega_m: float
    Q: float
    eta: float
    model: str = "ohmic-resonance"

    def __post_init__(self):
        if self.model != "ohmic-resonance":
            raise DomainError(f"unsupported spectral density model {self.model!r}")
        if self.omega_m <= 0 or self.eta < 0:
            raise DomainError("need omega_m > 0 and eta >= 0")
        if not (1 <= self.Q < math.inf):
            raise DomainError("spectral density needs a finite Q >= 1")

    @classmethod
    def from_params(cls, params: SystemParams) -> "SpectralDensity":
        return cls(omega_m=params.omega_m, Q=params.Q, eta=params.eta)

    def __call__(self, omega):
        return j_ohmic(omega, self)


def j_ohmic(omega, sd: SpectralDensity):
    """Evaluate the spectral density; works on scalars and arrays."""
    x = omega / sd.omega_m
    return (omega / sd.Q) * sd.eta ** 2 / ((x * x - 1.0) ** 2 + x * x / sd.Q ** 2)


@dataclass(frozen=True)
class QuadratureSpec:
    """Controls for the oscillatory integrals.

    ``omega_max`` and ``tau_max`` may be left as ``None`` to use the defaults
    (``40 omega_m`` and the decay-envelope rule, respectively).
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-13
    omega_max: float | None = None
    tau_max: float | None = None
    max_subdivisions: int = 2000
    nodes_per_period: int = 48

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("tolerances must be positive")
        if self.omega_max is not None and self.omega_max <= 0:
            raise DomainError("omega_max must be positive")
        if self.tau_max is not None and self.tau_max <= 0:
            raise DomainError("tau_max must be positive")
        if self.max_subdivisions < 1 or self.nodes_per_period < 4:
            raise DomainError("grid controls too small")
