"""Physical configuration of the grating and per-order rod coefficients.

Geometry: rod ``s`` is centred at ``(x, y) = (0, s*d)``, so the grating runs
along the y axis and the incident transverse wavevector is
``k_r (cos psi_i, sin psi_i)``.  With this placement the Floquet phase
``exp(i k_r s d sin psi_i)`` and the lattice-sum phases are consistent with
Graf's addition theorem.
"""

from dataclasses import dataclass
import math

from scipy import constants

from . import special as sf
from .errors import EvanescentInterior, InvalidParameters, SingularDenominator

MU0 = constants.mu_0
EPS0 = constants.epsilon_0
XI0 = math.sqrt(MU0 / EPS0)  # free-space impedance
ETA0 = math.sqrt(EPS0 / MU0)  # free-space admittance


@dataclass(frozen=True)
class GratingParams:
    radius_a: float
    spacing_d: float
    eps_r: float
    mu_r: float = 1.0

    def __post_init__(self):
        for name in ("radius_a", "spacing_d", "eps_r", "mu_r"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameters(f"{name} must be finite and > 0, got {v!r}")
        if 2 * self.radius_a > self.spacing_d:
            raise InvalidParameters("rods overlap: need 2*radius_a <= spacing_d")

    @property
    def a_over_d(self):
        return self.radius_a / self.spacing_d


@dataclass(frozen=True)
class IncidentWave:
    """Obliquely incident E-polarised plane wave.

    ``theta_i`` is the polar angle from the rod axis, ``psi_i = pi + phi_i``
    the azimuth of the propagation direction in the transverse plane.
    """

    k0: float
    theta_i: float
    psi_i: float = math.pi
    amplitude_E0v: complex = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k0) and self.k0 > 0):
            raise InvalidParameters("k0 must be finite and > 0")
        if not (0.0 < self.theta_i <= math.pi / 2 + 1e-15):
            raise InvalidParameters("theta_i must lie in (0, pi/2]")
        amp = complex(self.amplitude_E0v)
        if amp == 0 or not (math.isfinite(amp.real) and math.isfinite(amp.imag)):
            raise InvalidParameters("amplitude must be finite and nonzero")

    @property
    def sin_psi(self):
        return math.sin(self.psi_i)


@dataclass(frozen=True)
class DerivedQuantities:
    k_r: float
    k_z: float
    k_1: float
    Delta: float
    F: float
    D: float
    q: float  # (k_r / k_1)^2
    eps_r: float = 1.0
    mu_r: float = 1.0
    xi0: float = XI0
    eta0: float = ETA0

    @property
    def kr_over_k1(self):
        return math.sqrt(self.q)


def derive(params, wave):
    """Wavenumbers and the order-independent constants F and D."""
    ct = math.cos(wave.theta_i)
    if abs(ct) < 1e-15:
        ct = 0.0
    st = math.sin(wave.theta_i)
    em = params.eps_r * params.mu_r
    if em - ct * ct <= 0:
        raise EvanescentInterior(
            f"eps_r*mu_r = {em} <= cos^2(theta_i) = {ct * ct}: interior wave is evanescent"
        )
    k_r = wave.k0 * st
    k_z = wave.k0 * ct
    k_1 = wave.k0 * math.sqrt(em - ct * ct)
    F = (em - 1.0) * ct / (em - ct * ct)
    q = st * st / (em - ct * ct)
    D = (1 + params.eps_r * q) * (1 + params.mu_r * q) - F * F
    return DerivedQuantities(
        k_r=k_r,
        k_z=k_z,
        k_1=k_1,
        Delta=k_r * params.spacing_d / (2 * math.pi),
        F=F,
        D=D,
        q=q,
        eps_r=params.eps_r,
        mu_r=params.mu_r,
    )


def c_n(n, derived, params):
    """J_n(k_r a) / H_n(k_r a)."""
    x = derived.k_r * params.radius_a
    return sf.bessel_j(n, x) / sf.hankel1(n, x)


def _denominator(n, zeta_r, derived, params):
    x = derived.k_r * params.radius_a
    x1 = derived.k_1 * params.radius_a
    r = derived.kr_over_k1
    j1 = sf.bessel_j(n, x1)
    h = sf.hankel1(n, x)
    t1 = j1 * sf.hankel1_prime(n, x)
    t2 = zeta_r * r * h * sf.bessel_j_prime(n, x1)
    den = t1 - t2
    scale = abs(t1) + abs(t2)
    if not math.isfinite(abs(den)) or abs(den) <= 1e-14 * scale:
        raise SingularDenominator(
            f"isolated-rod denominator vanishes for n={n}, zeta_r={zeta_r}"
        )
    return den, j1, h


def _zeta(zeta, params):
    if zeta in ("eps", "epsilon", "e"):
        return params.eps_r, XI0
    if zeta in ("mu", "m"):
        return params.mu_r, ETA0
    raise ValueError(f"zeta must be 'eps' or 'mu', got {zeta!r}")


def a_zeta_n(n, zeta, derived, params):
    """Isolated-rod reflection coefficient for the field selected by ``zeta``."""
    zr, _ = _zeta(zeta, params)
    x = derived.k_r * params.radius_a
    x1 = derived.k_1 * params.radius_a
    den, j1, _ = _denominator(n, zr, derived, params)
    num = j1 * sf.bessel_j_prime(n, x) - zr * derived.kr_over_k1 * sf.bessel_j(n, x) * sf.bessel_j_prime(n, x1)
    return num / den


def b_zeta_n(n, zeta, derived, params):
    """Cross-polarisation coupling coefficient; proportional to i*n*F/(k_r a).

    The prefactor sqrt(eps0*mu0/zeta0^2) is the free-space impedance for
    ``zeta='eps'`` and the admittance for ``zeta='mu'``.
    """
    if n == 0 or derived.F == 0.0:
        return 0j
    zr, pref = _zeta(zeta, params)
    x = derived.k_r * params.radius_a
    den, j1, h = _denominator(n, zr, derived, params)
    return pref * (j1 * h / den) * (1j * n * derived.F / x)


def incident_coeff(n, wave):
    """E_n^i = sin(theta_i) E_0v exp(-i n psi_i)."""
    return math.sin(wave.theta_i) * complex(wave.amplitude_E0v) * complex(
        math.cos(n * wave.psi_i), -math.sin(n * wave.psi_i)
    )


@dataclass(frozen=True)
class SConstants:
    s_eps_mu: float
    s_mu_eps: float
    s_plus_xi: complex
    s_minus_xi: complex
    s_plus_eta: complex
    s_minus_eta: complex


def s_constants(derived):
    """Order-independent constants of the small-spacing scattering matrices.

    Returned with the printed labelling, s_{+-xi} = +-2i xi0 F and
    s_{+-eta} = -+2i eta0 F.  Which label multiplies which order is decided in
    :func:`cylgrating.asymptotic.scattering_matrix`.
    """
    q, F = derived.q, derived.F
    e, m = derived.eps_r, derived.mu_r
    xi = 2j * derived.xi0 * F
    eta = 2j * derived.eta0 * F
    return SConstants(
        s_eps_mu=(1 - e * q) * (1 + m * q) + F * F,
        s_mu_eps=(1 - m * q) * (1 + e * q) + F * F,
        s_plus_xi=xi,
        s_minus_xi=-xi,
        s_plus_eta=-eta,
        s_minus_eta=eta,
    )


def s_over_D_closed_form(params, wave):
    """(s_eps_mu/D, s_mu_eps/D) written directly in the incidence angle."""
    e, m = params.eps_r, params.mu_r
    ct = math.cos(wave.theta_i)
    st = math.sin(wave.theta_i)
    den = m * e - ct * ct
    r = st * st / den
    f = (m * e - 1) * ct / den
    D = (1 + e * r) * (1 + m * r) - f * f
    return ((1 - e * r) * (1 + m * r) + f * f) / D, ((1 - m * r) * (1 + e * r) + f * f) / D
