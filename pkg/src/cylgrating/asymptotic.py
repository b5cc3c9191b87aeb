"""Small-spacing asymptotic system for the wavelength-independent coefficients.

For k_r a << 1 and a/d < 1/2 the coefficients scale as

    A_{+-(2n-1)} ~ omega_{+-(2n-1)} (k_r a)^{2n},
    A_{+-2n}     ~ omega_{+-2n}     (k_r a)^{2n+2},   A_0 ~ omega_0 (k_r a)^2,

and the omega_p = (A_{p,0}, A^H_{p,0}) obey a linear system whose coefficients
involve only a/d, the leading lattice-sum constants h_n and the small-argument
rod scattering matrices.  The odd orders form a closed system driven by
E_{+-1}; the even orders are driven by E_{+-2}, by the monopole omega_0 and by
the odd orders through the odd h constants.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import exact
from . import lattice
from . import model
from .errors import PreconditionViolated, TruncationNotConverged


@dataclass(frozen=True)
class ScatteringMatrix:
    """Wavelength-independent 2x2 scattering matrix of order ``n``.

    The full small-argument matrix is ``entries * (k_r a)^(2n)``.
    """

    n: int
    sign: int
    entries: np.ndarray


def order_prefactor(n):
    """i n pi / (2^n n!)^2."""
    n = abs(int(n))
    return 1j * n * math.pi / (2.0**n * math.factorial(n)) ** 2


def scattering_matrix(n, sign, derived):
    """S_{sign*n,0} for n >= 1.

    The off-diagonal entries for positive orders are -2i xi0 F (upper) and
    +2i eta0 F (lower) and flip sign for negative orders; this is the branch
    obtained from the small-argument limit of the exact 2x2 system.
    """
    n = int(n)
    if n < 1:
        raise ValueError("order must be >= 1; use monopole_matrix for n = 0")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    sc = model.s_constants(derived)
    # positive orders take the s_{-xi}, s_{-eta} entries
    off_xi = sc.s_minus_xi if sign > 0 else sc.s_plus_xi
    off_eta = sc.s_minus_eta if sign > 0 else sc.s_plus_eta
    k = order_prefactor(n) / derived.D
    entries = k * np.array([[sc.s_eps_mu, off_xi], [off_eta, sc.s_mu_eps]], dtype=complex)
    return ScatteringMatrix(n, sign, entries)


def monopole_matrix(params):
    """Wavelength-independent n = 0 matrix: A_0 = -a^eps_0 X_0, A^H_0 = -a^mu_0 Y_0
    with a^zeta_0 ~ i pi (1 - zeta_r)(k_r a)^2 / 4."""
    return np.diag([1j * math.pi * (params.eps_r - 1) / 4, 1j * math.pi * (params.mu_r - 1) / 4])


def scale_exponent(p):
    """Power of k_r a carried by order p."""
    p = abs(int(p))
    if p == 0:
        return 2
    return p + 1 if p % 2 else p + 2


@dataclass(frozen=True)
class AsymptoticSet:
    m_trunc: int
    omega: dict  # p -> complex array (A_{p,0}, A^H_{p,0})
    a_over_d: float
    residual: float = 0.0

    @property
    def p_max(self):
        return max(abs(p) for p in self.omega)

    @property
    def scale_exponents(self):
        return {p: scale_exponent(p) for p in self.omega}


def _h_lookup(h, psi_i):
    if h is None:
        return lambda n: lattice.h_constant(n, psi_i)
    if callable(h):
        return h
    return lambda n: h[n]


def interaction_sums(omega, h, a_over_d, n, parity, sign=1, m_trunc=None, tol=None):
    """Scaled multiple-interaction sums acting on order sign*n.

    Returns (a/d)^{2(n-1)} (G, G^H) for the odd (``parity='odd'``, order
    2n-1) and even (``parity='even'``, order 2n) families, and (G, G^H) of the
    monopole for n = 0:

        odd:  sum_m (a/d)^{2(m+n-1)} h_{+-2(m+n-1)} omega_{-+(2m-1)}
        even: sum_m (a/d)^{2(m+n-1)} [h_{+-2(m+n-1)} omega_{-+2(m-1)}
                                      + h_{+-(2m+2n-1)} omega_{-+(2m-1)}]
        n=0:  h_{-1} omega_1 + h_0 omega_0 + h_1 omega_{-1}

    ``omega`` maps p to 2-vectors (missing orders count as zero); ``h`` maps
    order to constant (default: the constants at psi_i = pi).  The series
    over m stops at ``m_trunc`` (default: the largest m whose omega is
    present).

    Raises
    ------
    TruncationNotConverged
        If ``tol`` is given and the last retained term exceeds tol times the sum.
    """
    hf = _h_lookup(h, math.pi)
    zero = np.zeros(2, dtype=complex)

    def w(p):
        return np.asarray(omega.get(p, zero), dtype=complex)

    if n == 0:
        return hf(-1) * w(1) + hf(0) * w(0) + hf(1) * w(-1)
    if parity not in ("odd", "even"):
        raise ValueError("parity must be 'odd' or 'even'")
    s = 1 if sign >= 0 else -1
    if m_trunc is None:
        m_trunc = max([(abs(p) + 1) // 2 + 1 for p in omega] + [1])
    xi2 = a_over_d**2
    total = zero.copy()
    last = zero
    for m in range(1, m_trunc + 1):
        k = m + n - 1
        wt = xi2**k
        if parity == "odd":
            term = wt * hf(s * 2 * k) * w(-s * (2 * m - 1))
        else:
            term = wt * (hf(s * 2 * k) * w(-s * 2 * (m - 1)) + hf(s * (2 * k + 1)) * w(-s * (2 * m - 1)))
        total = total + term
        last = term
    if tol is not None and np.max(np.abs(last)) > tol * max(np.max(np.abs(total)), 1e-300):
        raise TruncationNotConverged(
            f"interaction sum tail {np.max(np.abs(last)):.2e} exceeds tolerance"
        )
    return total


def _check_preconditions(params, wave, derived):
    if params.a_over_d >= 0.5:
        raise PreconditionViolated("asymptotic system needs a/d < 1/2")
    s = wave.sin_psi
    if derived.Delta * (1 + abs(s)) >= 1:
        raise PreconditionViolated("asymptotic system needs a single propagating order")


def _assemble(params, wave, derived, m_trunc, h, forcing_orders):
    P = 2 * m_trunc + 1
    ps = list(range(-P, P + 1))
    idx = {p: i for i, p in enumerate(ps)}
    K = len(ps)
    M = np.eye(2 * K, dtype=complex)
    rhs = np.zeros(2 * K, dtype=complex)
    xi2 = params.a_over_d**2

    def add(row_p, S, coef, col_p):
        if col_p not in idx:
            return
        r, c = 2 * idx[row_p], 2 * idx[col_p]
        M[r : r + 2, c : c + 2] -= coef * S

    for p in ps:
        sgn = 1 if p > 0 else -1
        ap = abs(p)
        forced = forcing_orders is None or ap in forcing_orders
        E = model.incident_coeff(p, wave)
        if p == 0:
            S0 = monopole_matrix(params)
            if forced:
                rhs[2 * idx[0] : 2 * idx[0] + 2] = S0 @ np.array([E, 0.0])
            continue
        S = scattering_matrix(ap, sgn, derived).entries
        r = 2 * idx[p]
        if ap % 2:
            n = (ap + 1) // 2
            if n == 1 and forced:
                rhs[r : r + 2] = S[:, 0] * E
            for m in range(1, P + 1):
                k = m + n - 1
                add(p, S, xi2**k * h(sgn * 2 * k), -sgn * (2 * m - 1))
        else:
            n = ap // 2
            if n == 1 and forced:
                rhs[r : r + 2] = S[:, 0] * E
            for m in range(1, P + 1):
                k = m + n - 1
                add(p, S, xi2**k * h(sgn * 2 * k), -sgn * 2 * (m - 1))
                add(p, S, xi2**k * h(sgn * (2 * k + 1)), -sgn * (2 * m - 1))
    return ps, M, rhs


def _solve(params, wave, derived, m_trunc, h, forcing_orders):
    ps, M, rhs = _assemble(params, wave, derived, m_trunc, h, forcing_orders)
    u = np.linalg.solve(M, rhs)
    res = float(np.max(np.abs(M @ u - rhs)) / max(1.0, float(np.max(np.abs(rhs)))))
    omega = {p: u[2 * i : 2 * i + 2].copy() for i, p in enumerate(ps)}
    return omega, res


def solve_asymptotic(params, wave, derived=None, m_trunc=4, tol=1e-8, h_override=None,
                     forcing_orders=None, check_truncation=True):
    """Wavelength-independent coefficients omega_p for |p| <= 2 m_trunc + 1.

    Parameters
    ----------
    h_override : callable or mapping, optional
        Replacement for the leading lattice-sum constants h_n (test hook).
    forcing_orders : iterable of int, optional
        Restrict the incident forcing to these |p| (subset of {0, 1, 2}).
    check_truncation : bool
        Re-solve with m_trunc + 1 and require the shared orders to change by
        less than ``tol`` relative.

    Raises
    ------
    PreconditionViolated
        If a/d >= 1/2 or more than one diffraction order propagates.
    TruncationNotConverged
        If the m_trunc -> m_trunc + 1 change exceeds ``tol``.
    """
    derived = derived or model.derive(params, wave)
    _check_preconditions(params, wave, derived)
    h = _h_lookup(h_override, wave.psi_i)
    forcing = None if forcing_orders is None else frozenset(abs(int(p)) for p in forcing_orders)
    omega, res = _solve(params, wave, derived, m_trunc, h, forcing)
    if check_truncation:
        finer, _ = _solve(params, wave, derived, m_trunc + 1, h, forcing)
        scale = max(float(np.max(np.abs(v))) for v in finer.values())
        change = max(float(np.max(np.abs(omega[p] - finer[p]))) for p in omega)
        if scale > 0 and change > tol * scale:
            raise TruncationNotConverged(
                f"omega changes by {change / scale:.2e} when m_trunc -> {m_trunc + 1}"
            )
    return AsymptoticSet(m_trunc=m_trunc, omega=omega, a_over_d=params.a_over_d, residual=res)


def reconstruct(aset, derived, params):
    """Coefficients A_p = omega_p (k_r a)^{exponent(p)} as a CoefficientSet."""
    x = derived.k_r * params.radius_a
    A = {}
    AH = {}
    for p, w in aset.omega.items():
        f = x ** scale_exponent(p)
        A[int(p)] = complex(w[0] * f)
        AH[int(p)] = complex(w[1] * f)
    return exact.CoefficientSet(
        n_trunc=aset.p_max, A=A, A_H=AH, residual=aset.residual, method="asymptotic"
    )
