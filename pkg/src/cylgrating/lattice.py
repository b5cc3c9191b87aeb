"""Schlömilch lattice sums for a grating of rods along the y axis.

The sum of order n is

    I_n(Delta, psi) = sum_{p>=1} H_n(2 pi p Delta) [ (-1)^n e^{i p b} + e^{-i p b} ],

with b = 2 pi Delta sin(psi).  Three routes are provided:

* :func:`direct_sum` sums the Hankel series itself, accelerated with Wynn's
  epsilon algorithm.  It is the reference for the other two.
* :func:`elementary` evaluates the exact elementary-function representation
  (finite propagating-mode sums, Bernoulli polynomials, exponentially
  convergent evanescent tails).
* :func:`bessel_series`, :func:`neumann_series` and :func:`leading_terms`
  give the small-Delta approximations for a single propagating order.

Angle convention for the diffraction orders: sin(phi_mu) = sin(psi) + mu/Delta
with cos(phi_mu) > 0, mu running from -mu_minus to mu_plus.  Orders beyond
mu_plus (mu_minus) are evanescent with cosh(eta) = +sin(psi) + mu/Delta
(-sin(psi) + mu/Delta).  With these signs the elementary representation
reproduces the direct sum for every order; phi_0 = pi - psi.
"""

from dataclasses import dataclass, field
import math
import warnings

import mpmath
import numpy as np

from . import special as sf
from .errors import NoConvergence, PreconditionViolated, WoodAnomaly

WOOD_HARD = 1e-9
WOOD_WARN = 1e-3
_N_EVANESCENT = 512


# ---------------------------------------------------------------------------
# diffraction orders


@dataclass(frozen=True)
class ModeStructure:
    delta: float
    sin_psi: float
    mu_plus: int
    mu_minus: int
    phi: dict  # signed propagating order -> angle (rad)
    eta_plus: np.ndarray = field(repr=False)  # eta_mu^+ for mu = mu_plus + 1, ...
    eta_minus: np.ndarray = field(repr=False)  # eta_mu^- for mu = mu_minus + 1, ...

    @property
    def single_mode(self):
        return self.mu_plus == 0 and self.mu_minus == 0

    @property
    def phi0(self):
        return self.phi[0]


def _wood_check(delta, s):
    for side in (delta * (1.0 - s), delta * (1.0 + s)):
        if side < 0.5:
            continue  # only grazing emergence of a nonzero order is singular
        gap = abs(side - round(side))
        if gap < WOOD_HARD:
            raise WoodAnomaly(
                f"Delta*(1 +- sin psi) = {side!r} is an integer: grazing diffraction order"
            )
        if gap < WOOD_WARN:
            warnings.warn(
                f"within {gap:.1e} of a Wood anomaly; lattice sums lose accuracy",
                RuntimeWarning,
                stacklevel=3,
            )


def mode_structure_s(delta, s, n_evanescent=_N_EVANESCENT):
    """Same as :func:`mode_structure` but parametrised by sin(psi)."""
    if not delta > 0:
        raise ValueError("Delta must be positive")
    _wood_check(delta, s)
    mu_plus = math.floor(delta * (1.0 - s))
    mu_minus = math.floor(delta * (1.0 + s))
    phi = {}
    for mu in range(-mu_minus, mu_plus + 1):
        sn = min(1.0, max(-1.0, s + mu / delta))
        phi[mu] = math.atan2(sn, math.sqrt(1.0 - sn * sn))
    mu_p = np.arange(mu_plus + 1, mu_plus + 1 + n_evanescent, dtype=float)
    mu_m = np.arange(mu_minus + 1, mu_minus + 1 + n_evanescent, dtype=float)
    return ModeStructure(
        delta=float(delta),
        sin_psi=float(s),
        mu_plus=mu_plus,
        mu_minus=mu_minus,
        phi=phi,
        eta_plus=np.arccosh(s + mu_p / delta),
        eta_minus=np.arccosh(-s + mu_m / delta),
    )


def mode_structure(delta, psi_i, n_evanescent=_N_EVANESCENT):
    """Propagating orders and evanescent decay rates from the grating equation.

    Raises :class:`WoodAnomaly` within 1e-9 of an integer Delta*(1 +- sin psi)
    and warns within 1e-3.
    """
    return mode_structure_s(delta, math.sin(psi_i), n_evanescent)


# ---------------------------------------------------------------------------
# direct summation


def wynn_epsilon(seq):
    """Wynn's epsilon algorithm; returns the highest even-column estimate.

    Parameters
    ----------
    seq : array_like of complex
        Partial sums, oldest first.

    Returns
    -------
    best : complex
        Final entry of the deepest finite even column.
    column_estimates : list of complex
        Final entries of every even column, in order of depth.
    """
    e_prev = np.zeros(len(seq) + 1, dtype=complex)
    e_cur = np.asarray(seq, dtype=complex)
    best = e_cur[-1]
    estimates = [best]
    depth = 0
    while e_cur.size > 1:
        with np.errstate(invalid="ignore", over="ignore"):
            d = np.diff(e_cur)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            nxt = e_prev[1 : e_cur.size] + 1.0 / d
        e_prev, e_cur = e_cur, nxt
        depth += 1
        if depth % 2 == 0:
            if not np.isfinite(e_cur[-1]):
                break
            best = e_cur[-1]
            estimates.append(best)
    return complex(best), estimates


def _choose_stride(x, s, t_max=64):
    # stride so that both Floquet phases advance well away from 0 mod 2 pi
    best_t, best_v = 1, -1.0
    for t in range(1, t_max + 1):
        v = min(abs(math.sin(t * x * (1 + s) / 2)), abs(math.sin(t * x * (1 - s) / 2)))
        if v > best_v + 1e-3:
            best_t, best_v = t, v
    return best_t


def direct_sum_s(n, delta, s, tol=1e-10, window=41, max_terms=2_000_000):
    """Same as :func:`direct_sum` but parametrised by sin(psi)."""
    _wood_check(delta, s)
    x = 2.0 * math.pi * delta
    t = _choose_stride(x, s)
    sign = -1.0 if n % 2 else 1.0
    n_terms = t * window * 4
    history = []
    total = 0j
    done = 0
    partial = np.empty(0, dtype=complex)
    while True:
        p = np.arange(done + 1, n_terms + 1, dtype=float)
        z = p * x
        terms = sf.hankel1(n, z) * (np.exp(1j * z * s) * sign + np.exp(-1j * z * s))
        chunk = total + np.cumsum(terms)
        partial = np.concatenate([partial, chunk])
        total = chunk[-1]
        done = n_terms
        sampled = partial[t - 1 :: t]
        est, _ = wynn_epsilon(sampled[-window:])
        back, _ = wynn_epsilon(sampled[-window - 4 : -4])
        err = abs(est - back)
        history.append((n_terms, est, err))
        if err < tol * max(1.0, abs(est)):
            return est
        if n_terms * 2 > max_terms:
            raise NoConvergence(
                f"direct Schlömilch sum stalled (n={n}, Delta={delta}, sin psi={s}); "
                f"last error estimate {err:.2e}",
                history,
            )
        n_terms *= 2


def direct_sum(n, delta, psi_i, tol=1e-10):
    """I_n by summing the Hankel series, accelerated with Wynn's epsilon algorithm.

    Partial sums are sampled at a stride chosen so that both Floquet phases
    advance far from a multiple of 2 pi, and the epsilon table is applied to
    the trailing window.  The error estimate is the change in the estimate
    when the window is moved back by four samples; the number of terms is
    doubled until it drops below ``tol`` (relative to max(1, |I_n|)).
    """
    return direct_sum_s(int(n), delta, math.sin(psi_i), tol)


# ---------------------------------------------------------------------------
# elementary-function representation


def _evanescent_tail(order, eta, mu_first, delta):
    """sum_{mu >= mu_first} f(mu) for the evanescent part, with an
    Euler-Maclaurin closure after the explicitly summed block."""
    sh = np.sinh(eta)
    if order == 0:
        mu = mu_first + np.arange(eta.size)
        vals = 1.0 / (delta * sh) - 1.0 / mu
        head = math.fsum(vals)
        M = mu_first + eta.size
        eM = math.acosh(math.cosh(eta[-1]) + 1.0 / delta)
        shM, chM = math.sinh(eM), math.cosh(eM)
        f = 1.0 / (delta * shM) - 1.0 / M
        fp = -chM / (delta * delta * shM**3) + 1.0 / M**2
        integral = math.log(2.0 / delta) - eM + math.log(M)
        return head + integral + 0.5 * f - fp / 12.0
    with np.errstate(under="ignore"):
        vals = np.exp(-order * eta) / sh
    head = math.fsum(vals)
    if vals[-1] < 1e-300:
        return head
    eM = math.acosh(math.cosh(eta[-1]) + 1.0 / delta)
    shM, chM = math.sinh(eM), math.cosh(eM)
    ex = math.exp(-order * eM)
    f = ex / shM
    fp = -ex * (order * shM + chM) / (delta * shM**3)
    integral = delta * ex / order
    return head + integral + 0.5 * f - fp / 12.0


def _bernoulli_even(n, delta, s):
    dps = 30 + 2 * n
    with mpmath.workdps(dps):
        y = mpmath.mpf(delta) * mpmath.mpf(s)
        dl = mpmath.mpf(delta)
        acc = mpmath.mpf(1) / n
        for m in range(1, n + 1):
            coef = mpmath.mpf((-1) ** m * 2 ** (2 * m) * math.factorial(n + m - 1))
            coef /= math.factorial(2 * m) * math.factorial(n - m)
            acc += coef * sf.bernoulli_poly_mp(2 * m, y, dps) / dl ** (2 * m)
        return float(acc)


def _bernoulli_odd(n, delta, s):
    dps = 30 + 2 * n
    with mpmath.workdps(dps):
        y = mpmath.mpf(delta) * mpmath.mpf(s)
        dl = mpmath.mpf(delta)
        acc = mpmath.mpf(0)
        for m in range(0, n + 1):
            coef = mpmath.mpf((-1) ** m * 2 ** (2 * m) * math.factorial(n + m))
            coef /= math.factorial(2 * m + 1) * math.factorial(n - m)
            acc += coef * sf.bernoulli_poly_mp(2 * m + 1, y, dps) / dl ** (2 * m + 1)
        return float(acc)


def _elementary_nonneg(N, modes):
    D = modes.delta
    s = modes.sin_psi
    mus = np.array(sorted(modes.phi))
    phis = np.array([modes.phi[m] for m in mus])
    cphi = np.cos(phis)
    weight = np.where(mus >= 0, 1.0, -1.0)
    pi = math.pi
    if N == 0:
        val = -1.0 + math.fsum(1.0 / cphi) / (pi * D)
        log_part = (2.0 / pi) * math.log(D * math.exp(sf.EULER_GAMMA) / 2.0)
        harmonic = sum(1.0 / m for m in range(1, modes.mu_plus + 1))
        harmonic += sum(1.0 / m for m in range(1, modes.mu_minus + 1))
        tails = _evanescent_tail(0, modes.eta_plus, modes.mu_plus + 1, D)
        tails += _evanescent_tail(0, modes.eta_minus, modes.mu_minus + 1, D)
        imag = -log_part + harmonic / pi - tails / pi
        return complex(val, imag)
    t_plus = _evanescent_tail(N, modes.eta_plus, modes.mu_plus + 1, D)
    t_minus = _evanescent_tail(N, modes.eta_minus, modes.mu_minus + 1, D)
    if N % 2 == 0:
        n = N // 2
        real = math.fsum(np.cos(N * phis) / cphi) / (pi * D)
        split = math.fsum(weight * np.sin(N * phis) / cphi)
        imag = _bernoulli_even(n, D, s) / pi
        imag -= (split + (-1) ** n * (t_plus + t_minus)) / (pi * D)
        return complex(real, imag)
    n = (N - 1) // 2
    imag = -math.fsum(np.sin(N * phis) / cphi) / (pi * D)
    real = 2.0 / pi * _bernoulli_odd(n, D, s)
    split = math.fsum(weight * np.cos(N * phis) / cphi)
    real += (split + (-1) ** (n + 1) * (t_plus - t_minus)) / (pi * D)
    return complex(real, imag)


def elementary_s(n, delta, s, modes=None):
    """Same as :func:`elementary` but parametrised by sin(psi)."""
    n = int(n)
    if n < 0:
        n, s, modes = -n, -s, None
    if modes is None or modes.sin_psi != s or modes.delta != delta:
        modes = mode_structure_s(delta, s)
    return _elementary_nonneg(n, modes)


def elementary(n, delta, psi_i):
    """I_n from its elementary-function representation.

    Even orders combine the propagating-mode cosines, a Bernoulli-polynomial
    sum in Delta*sin(psi) and exponentially decaying evanescent terms; odd
    orders the corresponding sines and odd Bernoulli polynomials.  Negative
    orders use I_{-n}(sin psi) = I_n(-sin psi).
    """
    return elementary_s(n, delta, math.sin(psi_i))


# ---------------------------------------------------------------------------
# small-Delta forms (single propagating order)


def _require_single_mode(delta, s):
    modes = mode_structure_s(delta, s, n_evanescent=1)
    if not modes.single_mode:
        raise PreconditionViolated(
            "small-Delta forms need a single propagating order (Delta*(1 +- sin psi) < 1)"
        )
    return modes


def bessel_series(n, delta, psi_i):
    """Bessel-series part of I_n for a single propagating order.

    J_{2n} = 2 cos(2n phi0)/(k_r d cos phi0) - delta_{n0} and
    J_{2n+1} = -2i sin((2n+1) phi0)/(k_r d cos phi0); these are exact, not
    just small-Delta limits, once only the zeroth order propagates.
    """
    n = int(n)
    s = math.sin(psi_i)
    if n < 0:
        n, s = -n, -s
    phi0 = _require_single_mode(delta, s).phi0
    kd = 2 * math.pi * delta
    if n % 2 == 0:
        return 2 * math.cos(n * phi0) / (kd * math.cos(phi0)) - (1.0 if n == 0 else 0.0)
    return -2j * math.sin(n * phi0) / (kd * math.cos(phi0))


def neumann_series(n, delta, psi_i, zeta3=None):
    """Small-Delta Neumann-series part of I_n for a single propagating order.

    Returns the quantity N_n with I_n = J_n + i N_n.  For n = 0 this is the
    logarithm plus the zeta(3) correction; ``zeta3`` overrides the value of
    sum mu^-3 (default: computed to 1e-15).  For n >= 1 the Bernoulli
    polynomial sums are kept and the leading evanescent corrections are added,
    (-1)^{n+1} Delta^{2n} zeta(2n+1) / (pi 2^{2n-1}) for order 2n and
    i (-1)^{n+1} (n+1) sin(psi) Delta^{2n+2} zeta(2n+3) / (pi 2^{2n-1}) for order
    2n+1; higher orders are dropped.
    """
    n = int(n)
    s = math.sin(psi_i)
    if n < 0:
        n, s = -n, -s
    _require_single_mode(delta, s)
    pi = math.pi
    if n == 0:
        z3 = sf.zeta_partial(3, 1e-15) if zeta3 is None else zeta3
        g = math.exp(sf.EULER_GAMMA)
        return -2 / pi * math.log(g * delta / 2) - (1 + 2 * s * s) * delta**2 / pi * z3
    y = delta * s
    if n % 2 == 0:
        k = n // 2
        acc = 1.0 / (k * pi)
        for m in range(1, k + 1):
            coef = (-1) ** m * 2 ** (2 * m - 1) * math.factorial(k + m - 1)
            coef /= math.factorial(2 * m - 1) * math.factorial(k - m) * delta ** (2 * m)
            acc += coef * (sf.bernoulli_poly(2 * m, y) / m + y ** (2 * m - 1)) / pi
        zeta = sf.zeta_partial(2 * k + 1, 1e-15)
        acc += (-1) ** (k + 1) / (pi * delta) * delta ** (2 * k + 1) / 2 ** (2 * k - 1) * zeta
        return acc
    k = (n - 1) // 2
    acc = 0.0
    for m in range(0, k + 1):
        coef = (-1) ** m * 2 ** (2 * m) * math.factorial(k + m)
        coef /= math.factorial(2 * m) * math.factorial(k - m) * delta ** (2 * m + 1)
        acc += coef * (sf.bernoulli_poly(2 * m + 1, y) / (m + 0.5) + y ** (2 * m))
    zeta = sf.zeta_partial(2 * k + 3, 1e-15)
    corr = (-1) ** (k + 1) / (pi * delta) * s * delta ** (2 * k + 3) * (k + 1) / 2 ** (2 * k - 1) * zeta
    # odd-order Neumann part is imaginary: N = (1/(i pi)) * acc + i * corr
    return acc / (1j * pi) + 1j * corr


def leading_exponent(n):
    """Power p with I_n ~ h_n / (k_r d)^p as k_r d -> 0."""
    n = abs(int(n))
    return 1 if n <= 1 else 2 * (n // 2)


def h_constant(n, psi_i=math.pi, *, sin_phi0=None):
    """Leading coefficient h_n of I_n ~ h_n / (k_r d)^p for small k_r d.

    Closed forms for n = 0, 1 and the Bernoulli-number law for n >= 2,
    h_{2k} = (i/k)(-1)^k 2^{4k-1} pi^{2k-1} B_{2k} and
    h_{2k+1} = -4 i k h_{2k} sin(phi0).  Negative orders follow from
    I_{-n}(sin psi) = I_n(-sin psi).
    """
    n = int(n)
    sp = math.sin(psi_i) if sin_phi0 is None else sin_phi0
    if n < 0:
        n, sp = -n, -sp
    cp = math.sqrt(max(0.0, 1.0 - sp * sp))
    if n == 0:
        return complex(2.0 / cp)
    if n == 1:
        return -2j * sp / cp
    k = n // 2
    b = sf.bernoulli_number(2 * k)
    h_even = 1j / k * (-1) ** k * 2 ** (4 * k - 1) * math.pi ** (2 * k - 1) * float(b)
    if n % 2 == 0:
        return h_even
    return -4j * k * h_even * sp


def leading_terms(n, delta, psi_i):
    """h_n / (k_r d)^p: the leading small-spacing behaviour of I_n."""
    _require_single_mode(delta, -math.sin(psi_i) if n < 0 else math.sin(psi_i))
    kd = 2 * math.pi * delta
    return h_constant(n, psi_i) / kd ** leading_exponent(n)


def small_spacing_expansion(n, kd, psi_i, zeta3=None, zeta5=None):
    """Truncated small-k_r d expansions of I_0 ... I_4 (single mode).

    phi0 is the zeroth-order angle, sin(phi0) = sin(psi).  The correction
    terms of the odd orders carry the factor (n+1) from differentiating the
    evanescent decay rates with respect to sin(psi).

    ``zeta3``/``zeta5`` default to the sums of mu^-3 and mu^-5 to 1e-15.
    """
    z3 = sf.zeta_partial(3, 1e-15) if zeta3 is None else zeta3
    z5 = sf.zeta_partial(5, 1e-15) if zeta5 is None else zeta5
    sp = math.sin(psi_i)
    cp = math.sqrt(1 - sp * sp)
    pi = math.pi
    g = math.exp(sf.EULER_GAMMA)
    s2 = sp * sp
    if n == 0:
        return (2 / (kd * cp) - 2j / pi * math.log(g * kd / (4 * pi)) - 1
                - kd**2 / (2 * pi**3) * (0.5 + s2) * z3 * 1j)
    if n == 1:
        return -2j * sp / (kd * cp) + 2 * sp / pi + kd**2 * sp / (2 * pi**3) * z3
    if n == 2:
        return (4 * pi / (3j * kd**2) + 2 * math.cos(2 * math.asin(sp)) / (kd * cp)
                + 1j / pi * (1 - 2 * s2) + kd**2 / (2 * pi) ** 3 * z3 * 1j)
    if n == 3:
        return (-16 * pi * sp / (3 * kd**2) - 2j * math.sin(3 * math.asin(sp)) / (kd * cp)
                + 2 * sp / pi * (1 - 4 / 3 * s2) - 2 * sp * kd**4 / (2 * pi) ** 5 * z5)
    if n == 4:
        return (2**5 * pi**3 / (15j * kd**4) - 16j * pi / kd**2 * (1 / 6 - s2)
                + 2 * math.cos(4 * math.asin(sp)) / (kd * cp)
                + 1j / (2 * pi) * (1 - 8 * s2 + 8 * s2 * s2) - 1j * kd**4 / (4 * (2 * pi) ** 5) * z5)
    raise ValueError("expansions are tabulated for n = 0..4")


# ---------------------------------------------------------------------------
# tables


@dataclass(frozen=True)
class SchlomilchTable:
    delta: float
    psi_i: float
    values: dict  # signed order -> complex
    method: str

    @property
    def n_max(self):
        return max(abs(k) for k in self.values)

    def __getitem__(self, n):
        return self.values[n]


METHODS = ("direct", "elementary", "asymptotic")


def schlomilch_table(delta, psi_i, n_max, method="elementary", tol=1e-10):
    """Lattice sums for every order |n| <= n_max by the chosen route."""
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    s = math.sin(psi_i)
    values = {}
    if method == "elementary":
        m_pos = mode_structure_s(delta, s)
        m_neg = mode_structure_s(delta, -s)
        for n in range(0, n_max + 1):
            values[n] = _elementary_nonneg(n, m_pos)
            values[-n] = _elementary_nonneg(n, m_neg) if n else values[0]
    elif method == "direct":
        for n in range(-n_max, n_max + 1):
            values[n] = direct_sum_s(n, delta, s, tol)
    else:
        for n in range(-n_max, n_max + 1):
            values[n] = leading_terms(n, delta, psi_i)
    return SchlomilchTable(delta=float(delta), psi_i=float(psi_i), values=values, method=method)
