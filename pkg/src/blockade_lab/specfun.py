r"""Special functions for the sideband series.

Integer-order modified Bessel functions :math:`I_n(x)`, generalized Laguerre
polynomials :math:`L_n^{(\alpha)}(x)` and the coefficients

.. math::
    W_{n,p}(\eta) = (-1)^n U(-n, 1-n+p, \eta^2) = n!\, L_n^{(p-n)}(\eta^2)

that build the zero-temperature two-photon weights. Everything here is a
plain function of floats, with no caching.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError

_SERIES_SWITCH = 15.0
_RESCALE = 1e250


@dataclass(frozen=True)
class PolyCoeffs:
    """Real polynomial stored in ascending powers."""

    degree: int
    coefficients: tuple[float, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.degree < 0:
            raise DomainError("degree must be non-negative")
        if len(self.coefficients) != self.degree + 1:
            raise DomainError("need degree + 1 coefficients")
        if self.degree > 0 and self.coefficients[-1] == 0:
            raise DomainError("leading coefficient is zero")

    def __call__(self, x: float) -> float:
        acc = 0.0
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc


def _check_finite(*values):
    for v in values:
        if not math.isfinite(v):
            raise DomainError(f"non-finite argument {v!r}")


def _bessel_i_series(n: int, x: float) -> float:
    # sum_k (x/2)^{2k+n} / (k! (k+n)!)
    half = 0.5 * x
    lead = 1.0
    for k in range(1, n + 1):
        lead *= half / k
        if lead == 0.0:
            return 0.0
    q = half * half
    term = lead
    total = lead
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if term < 1e-17 * total:
            return total


def _bessel_i_miller(n: int, x: float) -> float:
    """Downward recurrence normalized with exp(x) = I_0 + 2 sum_k I_k."""
    scale = max(n, x)
    start = int(scale + 30 + 12 * math.sqrt(scale))
    start += start % 2
    two_over_x = 2.0 / x
    i_next, i_cur = 0.0, 1e-300
    norm = 0.0
    target = 0.0
    for k in range(start, 0, -1):
        i_prev = i_next + k * two_over_x * i_cur
        i_next, i_cur = i_cur, i_prev
        # i_cur now holds the unnormalized I_{k-1}
        if k - 1 == n:
            target = i_cur
        if k - 1 > 0:
            norm += 2.0 * i_cur
        else:
            norm += i_cur
        if abs(i_cur) > _RESCALE:
            i_cur /= _RESCALE
            i_next /= _RESCALE
            norm /= _RESCALE
            target /= _RESCALE
    if target == 0.0:
        return 0.0
    log_value = x + math.log(target) - math.log(norm)
    if log_value > 709.78:
        raise OverflowError(f"I_{n}({x}) overflows double precision")
    return math.exp(log_value)


def bessel_i(n: int, x: float) -> float:
    """Modified Bessel function of the first kind, integer order.

    Parameters
    ----------
    n : int
        Order, ``|n| <= 10**4``. Negative orders use ``I_{-n} = I_n``.
    x : float
        Non-negative argument.

    Raises
    ------
    DomainError
        For ``x < 0``, non-finite ``x`` or an order out of range.
    OverflowError
        When the value exceeds the double range.
    """
    _check_finite(x)
    if x < 0:
        raise DomainError(f"bessel_i needs x >= 0, got {x}")
    n = abs(int(n))
    if n > 10_000:
        raise DomainError(f"order {n} out of supported range")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x < _SERIES_SWITCH:
        return _bessel_i_series(n, x)
    return _bessel_i_miller(n, x)


def laguerre_assoc(n: int, alpha: float, x: float) -> float:
    """Generalized Laguerre polynomial by the three-term recurrence.

    For a negative integer ``alpha = -k`` with ``k <= n`` the forward
    recurrence loses all digits through cancellation, so the exact reflection
    ``L_n^(-k)(x) = (-x)^k (n-k)!/n! L_{n-k}^(k)(x)`` is used instead.
    """
    _check_finite(alpha, x)
    if n < 0 or n > 200:
        raise DomainError(f"laguerre_assoc needs 0 <= n <= 200, got {n}")
    if n == 0:
        return 1.0
    if alpha < 0 and alpha == int(alpha) and -alpha <= n:
        k = int(-alpha)
        ratio = 1.0
        for j in range(n - k + 1, n + 1):
            ratio /= j
        return (-x) ** k * ratio * laguerre_assoc(n - k, float(k), x)
    l_prev = 1.0
    l_cur = 1.0 + alpha - x
    for k in range(1, n):
        l_prev, l_cur = l_cur, ((2 * k + 1 + alpha - x) * l_cur - (k + alpha) * l_prev) / (k + 1)
    return l_cur


def w_coeff(n: int, p: int, eta: float) -> float:
    """``W_{n,p}(eta) = (-1)^n U(-n, 1-n+p, eta^2)``.

    Uses ``U(-n, b, x) = (-1)^n n! L_n^{(b-1)}(x)``, so the value is
    ``n! L_n^{(p-n)}(eta^2)``, a degree-``n`` polynomial in ``eta^2``.
    """
    _check_finite(eta)
    if eta <= 0:
        raise DomainError(f"w_coeff needs eta > 0, got {eta}")
    if not (0 <= n <= 100 and 0 <= p <= 100):
        raise DomainError(f"w_coeff needs 0 <= n, p <= 100, got n={n}, p={p}")
    return math.factorial(n) * laguerre_assoc(n, float(p - n), eta * eta)


def w_over_factorial(n: int, p: int, eta: float) -> float:
    """``W_{n,p}(eta) / n!`` without forming the factorial."""
    if eta <= 0:
        raise DomainError(f"eta must be positive, got {eta}")
    return laguerre_assoc(n, float(p - n), eta * eta)
