"""Cylinder functions and Bernoulli machinery.

The Bessel kernels are thin wrappers over :mod:`scipy.special` (AMOS/Cephes)
that add the integer-order reflection rules explicitly, so that negative
orders differ from positive ones by an exact sign flip, and that reject the
logarithmic singularity of Y_n at the origin.

Bernoulli numbers are generated exactly with rational arithmetic; Bernoulli
polynomials are evaluated at elevated precision with :mod:`mpmath` because the
monomial expansion cancels badly for large orders.
"""

from fractions import Fraction
from functools import lru_cache
import math

import mpmath
import numpy as np
from scipy import special as sp

from .errors import DomainError

__all__ = [
    "bessel_j",
    "bessel_y",
    "hankel1",
    "bessel_j_prime",
    "bessel_y_prime",
    "hankel1_prime",
    "bernoulli_number",
    "bernoulli_poly",
    "bernoulli_poly_mp",
    "zeta_partial",
    "EULER_GAMMA",
]

EULER_GAMMA = 0.57721566490153286061


def _reflect_sign(n):
    return -1.0 if (n < 0 and n % 2) else 1.0


def _check_positive(x):
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0.0):
        raise DomainError("argument must be strictly positive (singular at x = 0)")
    return xa


def bessel_j(n, x):
    """Bessel function of the first kind J_n(x) for integer n and real x >= 0."""
    n = int(n)
    xa = np.asarray(x, dtype=float)
    val = sp.jv(abs(n), xa) * _reflect_sign(n)
    return float(val) if val.ndim == 0 else val


def bessel_y(n, x):
    """Bessel function of the second kind Y_n(x); x must be strictly positive."""
    n = int(n)
    xa = _check_positive(x)
    val = sp.yv(abs(n), xa) * _reflect_sign(n)
    return float(val) if val.ndim == 0 else val


def hankel1(n, x):
    """Hankel function of the first kind, H_n^(1)(x) = J_n(x) + i Y_n(x)."""
    n = int(n)
    xa = _check_positive(x)
    val = sp.hankel1(abs(n), xa) * _reflect_sign(n)
    return complex(val) if val.ndim == 0 else val


def _prime(fn, n, x):
    return 0.5 * (fn(n - 1, x) - fn(n + 1, x))


def bessel_j_prime(n, x):
    """dJ_n/dx via 2 J_n' = J_{n-1} - J_{n+1}."""
    return _prime(bessel_j, int(n), x)


def bessel_y_prime(n, x):
    """dY_n/dx via the same three-term relation as J."""
    return _prime(bessel_y, int(n), x)


def hankel1_prime(n, x):
    """dH_n^(1)/dx."""
    return _prime(hankel1, int(n), x)


@lru_cache(maxsize=None)
def _bernoulli_table(m_max):
    # B_1 = -1/2 convention
    b = [Fraction(0)] * (m_max + 1)
    b[0] = Fraction(1)
    for m in range(1, m_max + 1):
        acc = Fraction(0)
        for k in range(m):
            acc += math.comb(m + 1, k) * b[k]
        b[m] = -acc / (m + 1)
    return tuple(b)


def bernoulli_number(m):
    """Exact Bernoulli number B_m as a :class:`fractions.Fraction` (B_1 = -1/2)."""
    if m < 0:
        raise ValueError("order must be non-negative")
    size = max(64, 1 << (int(m).bit_length()))
    return _bernoulli_table(size)[m]


def bernoulli_poly_mp(m, x, dps=None):
    """B_m(x) as an mpmath number, evaluated with ``dps`` decimal digits."""
    if m < 0:
        raise ValueError("order must be non-negative")
    dps = dps or 30 + m
    with mpmath.workdps(dps):
        xm = mpmath.mpf(x)
        acc = mpmath.mpf(0)
        for k in range(m + 1):
            bk = bernoulli_number(k)
            if bk == 0:
                continue
            acc += math.comb(m, k) * mpmath.mpf(bk.numerator) / bk.denominator * xm ** (m - k)
        return +acc


def bernoulli_poly(m, x):
    """Bernoulli polynomial B_m(x) in the standard convention, B_m(0) = B_m."""
    return float(bernoulli_poly_mp(int(m), float(x)))


def zeta_partial(s, tol=1e-12):
    """Sum of mu^-s over mu >= 1 for integer s >= 2.

    The explicit partial sum is closed with the integral (Euler-Maclaurin)
    tail estimate; terms are added until the bound on what that estimate
    leaves out drops below ``tol``.
    """
    s = int(s)
    if s < 2:
        raise ValueError("s must be an integer >= 2")
    n = 8
    while True:
        # bound on the first neglected Euler-Maclaurin term
        bound = s * (s + 1) * (s + 2) / 720.0 * n ** (-(s + 3))
        if bound < tol or n > 1 << 24:
            break
        n *= 2
    head = math.fsum(mu ** (-s) for mu in range(1, n))
    tail = n ** (1 - s) / (s - 1) + 0.5 * n ** (-s) + s / 12.0 * n ** (-s - 1)
    return head + tail
