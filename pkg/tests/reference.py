"""Independent reference computations used as test oracles.

Nothing here imports the code under test except parameter containers.
"""

from __future__ import annotations

import math
from fractions import Fraction

import mpmath
import numpy as np
from scipy import integrate


def bessel_i_mp(n, x, dps=40):
    """Power series sum x^{2k+n} / (4^k 2^n k! (k+n)!) at high precision."""
    with mpmath.workdps(dps):
        x = mpmath.mpf(x)
        n = abs(n)
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = (x / 2) ** (2 * k + n) / (mpmath.factorial(k) * mpmath.factorial(k + n))
            total += term
            if term < mpmath.mpf(10) ** (-dps) * total or (x == 0 and k > 0):
                return float(total)
            k += 1


def laguerre_exact(n, alpha, x):
    """Sum_k (-1)^k binom(n+alpha, n-k) x^k / k! in rational arithmetic."""
    alpha, x = Fraction(alpha), Fraction(x)
    total = Fraction(0)
    for k in range(n + 1):
        # generalized binomial binom(n + alpha, n - k)
        top = n - k
        binom = Fraction(1)
        for j in range(top):
            binom *= (n + alpha - j)
            binom /= (j + 1)
        total += (-1) ** k * binom * x ** k / math.factorial(k)
    return total


def kummer_u_negative(n, b, x):
    """U(-n, b, x) = (-1)^n sum_s binom(n, s) (b+s)_{n-s} (-x)^s, exact."""
    b, x = Fraction(b), Fraction(x)
    total = Fraction(0)
    for s in range(n + 1):
        poch = Fraction(1)
        for j in range(n - s):
            poch *= b + s + j
        total += math.comb(n, s) * poch * (-x) ** s
    return (-1) ** n * total


def w_exact(n, p, eta_sq):
    """W_{n,p} with eta^2 given as a rational."""
    return (-1) ** n * kummer_u_negative(n, 1 - n + p, eta_sq)


def brute_b_t0(n, m, p, eta):
    """Coefficient extraction from the product of exponential series.

    exp(-eta^2 f4) = e^{-2 eta^2} e^{-eta^2 x} e^{-eta^2 y} exp(eta^2 z (1+x)(1+y));
    the coefficient of x^n y^m z^p is summed term by term.
    """
    s = eta * eta

    def c(k):
        return sum(math.comb(p, j) * (-s) ** (k - j) / math.factorial(k - j)
                   for j in range(0, min(k, p) + 1))

    return math.exp(-2 * s) * s ** p / math.factorial(p) * c(n) * c(m)


def f_kernel_direct(fk, omega_m, Q, eta, x_m, u_max=40.0):
    """(2/pi) int J/w^2 [(N+1) f + N f*] dw, integrating the full f at once.

    ``fk(u)`` returns the complex f at dimensionless frequency u.
    """
    def j_over_w2(u):
        return (eta ** 2 / Q) / (u * ((u * u - 1) ** 2 + u * u / Q ** 2))

    def occ(u):
        return 0.0 if math.isinf(x_m) else 1.0 / math.expm1(u * x_m)

    def re(u):
        f = fk(u)
        n = occ(u)
        return j_over_w2(u) * ((n + 1) * f + n * np.conj(f)).real

    def im(u):
        f = fk(u)
        n = occ(u)
        return j_over_w2(u) * ((n + 1) * f + n * np.conj(f)).imag

    pts = [1 - 3 / Q, 1 - 24 / Q, 1 + 3 / Q, 1 + 24 / Q, 0.5, 1.5, 3.0]
    pts = sorted(p for p in pts if 0 < p < u_max)
    r = integrate.quad(re, 0, u_max, points=pts, limit=5000, epsabs=1e-13, epsrel=1e-11)[0]
    i = integrate.quad(im, 0, u_max, points=pts, limit=5000, epsabs=1e-13, epsrel=1e-11)[0]
    return 2 / math.pi * complex(r, i)


def f4_symbol(u, t1, t2, t3):
    e = np.exp
    return (2 + e(1j * u * t2) + e(-1j * u * t3)
            - (1 + e(1j * u * t2)) * e(-1j * u * t1) * (1 + e(-1j * u * t3)))


def lorentzian_sum_brute(delta, kappa, weights):
    """kappa * sum_n A_n kappa / (kappa^2 + (delta - n)^2) with explicit loops."""
    return kappa * sum(a * kappa / (kappa ** 2 + (delta - n) ** 2) for n, a in weights.items())
