"""Incident and exterior longitudinal fields of the grating.

Rod ``s`` is centred at (x, y) = (0, s d).  In its local polar frame
(R_s, phi_s) the exterior field is

    E_z = e^{i k_r s d sin psi} sum_n [ (E_n + sum_m A_m I_{n-m}) J_n(k_r R_s)
                                       + A_n H_n(k_r R_s) ] e^{i n (phi_s + pi/2)} e^{-i k_z z}

and H_z likewise with A^H and no incident term.  The regular part is the
field of all other rods re-expanded about rod s, so the expansion converges
for a <= R_s < d; its terms decay like (R_s/d)^n and the number of retained
orders is chosen from that ratio rather than from the solver truncation.
"""

from dataclasses import dataclass
import math
import warnings

import numpy as np

from . import lattice
from . import model
from . import special as sf
from .errors import InteriorPoint, InvalidParameters


@dataclass(frozen=True)
class FieldPoint:
    s: int
    R: float
    phi: float
    z: float = 0.0


@dataclass(frozen=True)
class FieldSample:
    position: FieldPoint
    E_z: complex
    H_z: complex


def frame_point(x, y, s, d, z=0.0):
    """Polar coordinates of (x, y) about the centre of rod ``s``."""
    dy = y - s * d
    return FieldPoint(int(s), math.hypot(x, dy), math.atan2(dy, x), z)


def nearest_frame(x, y, d, z=0.0):
    return frame_point(x, y, int(round(y / d)), d, z)


def cartesian(point, d):
    return point.R * math.cos(point.phi), point.s * d + point.R * math.sin(point.phi)


def plane_wave(x, y, z, wave):
    """Closed-form incident E_z = sin(theta) E0 exp(i k_r (x cos psi + y sin psi) - i k_z z)."""
    k_r = wave.k0 * math.sin(wave.theta_i)
    k_z = wave.k0 * math.cos(wave.theta_i)
    phase = k_r * (x * math.cos(wave.psi_i) + y * math.sin(wave.psi_i)) - k_z * z
    return math.sin(wave.theta_i) * complex(wave.amplitude_E0v) * complex(math.cos(phase), math.sin(phase))


def _frame_phase(point, wave, d):
    k_r = wave.k0 * math.sin(wave.theta_i)
    k_z = wave.k0 * math.cos(wave.theta_i)
    ph = k_r * point.s * d * math.sin(wave.psi_i) - k_z * point.z
    return complex(math.cos(ph), math.sin(ph))


def incident_field(point, wave, n_terms=None, d=0.0):
    """Incident E_z from its cylindrical-wave expansion about rod ``point.s``.

    ``n_terms`` defaults to k_r R + 40 orders on each side; ``d`` is the
    spacing that places the frame.
    """
    k_r = wave.k0 * math.sin(wave.theta_i)
    kr = k_r * point.R
    L = int(kr + 40) if n_terms is None else int(n_terms)
    n = np.arange(-L, L + 1)
    E = np.array([model.incident_coeff(k, wave) for k in n])
    J = np.array([sf.bessel_j(k, kr) for k in n])
    ang = np.exp(1j * n * (point.phi + math.pi / 2))
    return complex(np.sum(E * J * ang)) * _frame_phase(point, wave, d)


def regular_order_count(R, d, kr, tol=1e-13):
    """Orders needed for the re-expanded neighbour field at radius R < d."""
    q = R / d
    if q >= 1:
        raise InvalidParameters("re-expansion about a rod needs R_s < d")
    L = math.ceil(math.log(tol) / math.log(max(q, 1e-3))) + 8
    return max(L, int(kr) + 20)


def exterior_field(point, coeffs, wave, params, sums=None, L=None, derived=None):
    """Exterior E_z and H_z at ``point`` from a coefficient set.

    Parameters
    ----------
    sums : SchlomilchTable or mapping, optional
        Lattice sums for |n| <= L + N; computed from the elementary
        representation when omitted.
    L : int, optional
        Highest retained order of the regular (J_n) part; chosen from R_s/d
        when omitted and never below the coefficient truncation N.

    Raises
    ------
    InteriorPoint
        If R_s < a.
    """
    a = params.radius_a
    d = params.spacing_d
    if point.R < a * (1 - 1e-12):
        raise InteriorPoint(f"R_s = {point.R} lies inside the rod (a = {a})")
    derived = derived or model.derive(params, wave)
    k_r = derived.k_r
    kr = k_r * point.R
    N = coeffs.n_trunc
    if L is None:
        L = regular_order_count(point.R, d, kr)
    L = max(int(L), N)  # the outgoing part needs every |n| <= N
    if sums is None:
        sums = lattice.schlomilch_table(derived.Delta, wave.psi_i, L + N)
    table = sums.values if hasattr(sums, "values") and isinstance(sums.values, dict) else sums
    if (L + N) not in table or -(L + N) not in table:
        raise InvalidParameters(f"lattice-sum table must cover |n| <= {L + N}")

    m = np.arange(-N, N + 1)
    A = np.array([coeffs.A[int(k)] for k in m])
    AH = np.array([coeffs.A_H[int(k)] for k in m])
    n = np.arange(-L, L + 1)
    Imat = np.array([[table[int(i - j)] for j in m] for i in n], dtype=complex)
    X = np.array([model.incident_coeff(int(k), wave) for k in n]) + Imat @ A
    Y = Imat @ AH
    J = np.array([sf.bessel_j(int(k), kr) for k in n])
    Hn = np.zeros(n.size, dtype=complex)
    inside = np.abs(n) <= N
    Hn[inside] = [sf.hankel1(int(k), kr) for k in n[inside]]
    Apad = np.zeros(n.size, dtype=complex)
    AHpad = np.zeros(n.size, dtype=complex)
    Apad[inside] = A
    AHpad[inside] = AH
    ang = np.exp(1j * n * (point.phi + math.pi / 2))
    termsE = (X * J + Apad * Hn) * ang
    termsH = (Y * J + AHpad * Hn) * ang
    sumE = complex(np.sum(termsE))
    edge = max(abs(termsE[0]), abs(termsE[-1]))
    if edge > 1e-9 * max(abs(sumE), 1e-300):
        warnings.warn(
            f"field series not converged at R/d = {point.R / d:.3f}: last term {edge:.1e}",
            RuntimeWarning,
            stacklevel=2,
        )
    phase = _frame_phase(point, wave, d)
    return FieldSample(point, sumE * phase, complex(np.sum(termsH)) * phase)


def field_at(x, y, coeffs, wave, params, z=0.0, sums=None, derived=None):
    """Exterior fields at a Cartesian point, evaluated about the nearest rod."""
    pt = nearest_frame(x, y, params.spacing_d, z)
    return exterior_field(pt, coeffs, wave, params, sums=sums, derived=derived)
