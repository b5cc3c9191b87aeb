"""Truncated exact coupled system for the grating coefficients {A_n, A_n^H}.

For every order n the boundary conditions on a rod give two equations,

    b^mu_n (A_n + c_n X_n) = -(A^H_n + a^mu_n Y_n)
    b^eps_n (A^H_n + c_n Y_n) = A_n + a^eps_n X_n

with X_n = E_n + sum_m A_m I_{n-m} and Y_n = sum_m A^H_m I_{n-m}.  The
truncation keeps |n|, |m| <= N; unknowns are interleaved as
(A_{-N}, A^H_{-N}, ..., A_N, A^H_N).

Internally the system is solved in scaled unknowns A_m / tau_m and
xi0 A^H_m / tau_m with tau_m = (k_r a / 2)^|m| / |m|!, and row n is divided by
tau_n.  With these factors every lattice-sum coupling is bounded by
(2 a/d)^{|n|+|m|} and the scaled matrix is close to block diagonal.
"""

from dataclasses import dataclass, field, replace
import math

import numpy as np
from scipy import linalg

from . import lattice
from . import model
from .errors import IllConditioned, InvalidParameters, NoConvergence, TruncationNotConverged

COND_LIMIT = 1e12


@dataclass(frozen=True)
class CoefficientSet:
    """Multiple-scattering coefficients over the signed orders -N..N.

    ``residual`` is the largest equation residual |LHS - RHS| / (1 + |RHS|)
    of the exact system, re-evaluated from the coefficients themselves.
    """

    n_trunc: int
    A: dict
    A_H: dict
    residual: float
    method: str
    history: list = field(default_factory=list, repr=False)

    @property
    def orders(self):
        return np.arange(-self.n_trunc, self.n_trunc + 1)

    def arrays(self):
        """(orders, A, A_H) as numpy arrays."""
        n = self.orders
        return n, np.array([self.A[k] for k in n]), np.array([self.A_H[k] for k in n])


@dataclass(frozen=True)
class LinearSystem:
    """Assembled truncated system plus everything needed to re-check it."""

    n_trunc: int
    matrix: np.ndarray  # scaled, interleaved
    rhs: np.ndarray  # scaled
    tau: np.ndarray  # per-order scale factors
    a_eps: np.ndarray
    a_mu: np.ndarray
    b_eps: np.ndarray
    b_mu: np.ndarray
    c: np.ndarray
    E: np.ndarray
    I: np.ndarray  # I[i, j] = I_{n_i - n_j}
    xi0: float

    @property
    def orders(self):
        return np.arange(-self.n_trunc, self.n_trunc + 1)

    @property
    def size(self):
        return self.matrix.shape[0]


def _sum_lookup(sums):
    if hasattr(sums, "values") and isinstance(sums.values, dict):
        return sums.values
    return sums


def _scale_factors(x, orders):
    m = np.abs(orders)
    logt = m * math.log(x / 2.0) - np.array([math.lgamma(k + 1) for k in m])
    return np.exp(logt)


def assemble(params, wave, derived=None, sums=None, N=12, sums_method="elementary"):
    """Build the truncated system with 2(2N+1) unknowns.

    Parameters
    ----------
    sums : SchlomilchTable or mapping, optional
        Lattice sums covering every |n| <= 2N.  Computed with ``sums_method``
        when omitted.  Passing a mapping of zeros gives the isolated rod.
    """
    if N < 0:
        raise InvalidParameters("truncation order N must be >= 0")
    derived = derived or model.derive(params, wave)
    if sums is None:
        sums = lattice.schlomilch_table(derived.Delta, wave.psi_i, 2 * N, method=sums_method)
    table = _sum_lookup(sums)
    orders = np.arange(-N, N + 1)
    missing = [k for k in range(-2 * N, 2 * N + 1) if k not in table]
    if missing:
        raise InvalidParameters(f"lattice-sum table lacks orders {missing[:4]}...")

    a_eps = np.array([model.a_zeta_n(n, "eps", derived, params) for n in orders])
    a_mu = np.array([model.a_zeta_n(n, "mu", derived, params) for n in orders])
    b_eps = np.array([model.b_zeta_n(n, "eps", derived, params) for n in orders])
    b_mu = np.array([model.b_zeta_n(n, "mu", derived, params) for n in orders])
    c = np.array([model.c_n(n, derived, params) for n in orders])
    E = np.array([model.incident_coeff(n, wave) for n in orders])
    I = np.array([[table[int(i - j)] for j in orders] for i in orders], dtype=complex)

    x = derived.k_r * params.radius_a
    tau = _scale_factors(x, orders)
    xi0 = derived.xi0
    K = orders.size
    M = np.zeros((2 * K, 2 * K), dtype=complex)
    rhs = np.zeros(2 * K, dtype=complex)
    # coupling scaled by tau_m / tau_n
    Is = I * tau[None, :] / tau[:, None]
    iA = 2 * np.arange(K)
    iH = iA + 1
    # first equation, multiplied by xi0 to carry electric-field units
    M[np.ix_(iA, iA)] = xi0 * (b_mu * c)[:, None] * Is
    M[np.ix_(iA, iH)] = (a_mu[:, None]) * Is
    M[iA, iA] += xi0 * b_mu
    M[iA, iH] += 1.0
    rhs[iA] = -xi0 * b_mu * c * E / tau
    # second equation
    M[np.ix_(iH, iA)] = -(a_eps[:, None]) * Is
    M[np.ix_(iH, iH)] = (b_eps * c / xi0)[:, None] * Is
    M[iH, iA] += -1.0
    M[iH, iH] += b_eps / xi0
    rhs[iH] = a_eps * E / tau
    return LinearSystem(N, M, rhs, tau, a_eps, a_mu, b_eps, b_mu, c, E, I, xi0)


def _unpack(system, u):
    A = u[0::2] * system.tau
    AH = u[1::2] * system.tau / system.xi0
    return A, AH


def equation_residual(system, A, A_H):
    """Largest |LHS - RHS| / (1 + |RHS|) over both families of equations.

    Evaluated on the unscaled equations; the magnetic-field equation is
    multiplied by xi0 so that both families are in electric-field units.
    """
    A = np.asarray(A, dtype=complex)
    A_H = np.asarray(A_H, dtype=complex)
    X = system.E + system.I @ A
    Y = system.I @ A_H
    xi0 = system.xi0
    lhs1 = xi0 * system.b_mu * (A + system.c * X)
    rhs1 = -xi0 * (A_H + system.a_mu * Y)
    lhs2 = system.b_eps * (A_H + system.c * Y) * xi0
    rhs2 = (A + system.a_eps * X) * xi0
    r1 = np.abs(lhs1 - rhs1) / (1.0 + np.abs(rhs1))
    r2 = np.abs(lhs2 - rhs2) / (1.0 + np.abs(rhs2)) / xi0
    return float(max(r1.max(initial=0.0), r2.max(initial=0.0)))


def _package(system, u, method, history=None):
    A, AH = _unpack(system, u)
    orders = system.orders
    return CoefficientSet(
        n_trunc=system.n_trunc,
        A={int(n): complex(v) for n, v in zip(orders, A)},
        A_H={int(n): complex(v) for n, v in zip(orders, AH)},
        residual=equation_residual(system, A, AH),
        method=method,
        history=list(history or []),
    )


def condition_number(system):
    """One-norm condition number of the scaled matrix."""
    return float(np.abs(np.linalg.cond(system.matrix, 1)))


def solve_direct(system, cond_limit=COND_LIMIT):
    """Dense LU solve of the scaled system.

    Raises
    ------
    IllConditioned
        If the one-norm condition number exceeds ``cond_limit``.
    """
    cond = condition_number(system)
    if not np.isfinite(cond) or cond > cond_limit:
        raise IllConditioned(f"condition number {cond:.3e} exceeds {cond_limit:.1e}", cond)
    lu = linalg.lu_factor(system.matrix)
    u = linalg.lu_solve(lu, system.rhs)
    return _package(system, u, "direct_solve", [("condition", cond)])


def isolated_blocks(system):
    """Per-order 2x2 blocks of the system with every lattice sum removed."""
    xi0 = system.xi0
    K = system.orders.size
    blocks = np.zeros((K, 2, 2), dtype=complex)
    blocks[:, 0, 0] = xi0 * system.b_mu
    blocks[:, 0, 1] = 1.0
    blocks[:, 1, 0] = -1.0
    blocks[:, 1, 1] = system.b_eps / xi0
    return blocks


def solve_neumann(system, max_iter=500, tol=1e-12):
    """Fixed-point iteration seeded with the isolated-rod solution.

    Each sweep solves the per-order isolated 2x2 blocks with the lattice
    coupling of the previous iterate moved to the right-hand side.  The
    iteration stops when the max-norm change of the (unscaled) coefficients
    falls below ``tol`` times max(1, |A|).

    Raises
    ------
    NoConvergence
        After ``max_iter`` sweeps; the contraction-ratio history is attached.
    """
    K = system.orders.size
    blocks = isolated_blocks(system)
    inv = np.linalg.inv(blocks)
    coupling = system.matrix.copy()
    for k in range(K):
        coupling[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] -= blocks[k]

    def sweep(v):
        r = (system.rhs - coupling @ v).reshape(K, 2)
        return np.einsum("kij,kj->ki", inv, r).reshape(-1)

    def unscaled(v):
        A, AH = _unpack(system, v)
        return np.concatenate([A, AH * system.xi0])

    u = np.einsum("kij,kj->ki", inv, system.rhs.reshape(K, 2)).reshape(-1)
    history = []
    prev_step = None
    for it in range(1, max_iter + 1):
        nxt = sweep(u)
        step = float(np.max(np.abs(unscaled(nxt) - unscaled(u)), initial=0.0))
        ratio = step / prev_step if prev_step else float("nan")
        history.append((it, step, ratio))
        u = nxt
        scale = max(1.0, float(np.max(np.abs(unscaled(u)), initial=0.0)))
        if step <= tol * scale:
            return _package(system, u, "neumann_iteration", history)
        prev_step = step
    raise NoConvergence(f"Neumann iteration did not converge in {max_iter} sweeps", history)


def contraction_ratio(coeffs):
    """Geometric-mean contraction ratio over the recorded Neumann sweeps."""
    ratios = [r for _, s, r in coeffs.history if np.isfinite(r) and r > 0 and s > 0]
    if not ratios:
        return 0.0
    tail = ratios[-min(len(ratios), 8):]
    return float(np.exp(np.mean(np.log(tail))))


def max_relative_change(c1, c2):
    """Max over common orders of |A(c1) - A(c2)| (both fields, electric units)
    relative to the largest coefficient of c2."""
    n = min(c1.n_trunc, c2.n_trunc)
    xi0 = model.XI0
    diff = 0.0
    scale = 0.0
    for k in range(-n, n + 1):
        diff = max(diff, abs(c1.A[k] - c2.A[k]), xi0 * abs(c1.A_H[k] - c2.A_H[k]))
    for k in c2.A:
        scale = max(scale, abs(c2.A[k]), xi0 * abs(c2.A_H[k]))
    return diff / scale if scale else diff


@dataclass(frozen=True)
class TruncationReport:
    n_list: tuple
    sets: tuple
    differences: tuple  # change from the previous N, relative

    def converged(self, tol):
        return bool(self.differences) and self.differences[-1] < tol


def truncation_study(params, wave, N_list, sums_method="elementary"):
    """Solve at each truncation in ``N_list`` and record successive changes."""
    N_list = tuple(int(n) for n in N_list)
    if any(b <= a for a, b in zip(N_list, N_list[1:])):
        raise InvalidParameters("N_list must be strictly increasing")
    derived = model.derive(params, wave)
    sums = lattice.schlomilch_table(derived.Delta, wave.psi_i, 2 * N_list[-1], method=sums_method)
    sets = []
    diffs = []
    for N in N_list:
        cs = solve_direct(assemble(params, wave, derived, sums, N))
        if sets:
            diffs.append(max_relative_change(sets[-1], cs))
        sets.append(cs)
    return TruncationReport(N_list, tuple(sets), tuple(diffs))


def solve_exact(params, wave, N=12, tol=1e-8, N_cap=48, method="direct"):
    """Solve with automatic truncation doubling until self-convergence.

    Raises
    ------
    TruncationNotConverged
        If doubling up to ``N_cap`` never changes the solution by less than tol.
    """
    derived = model.derive(params, wave)
    prev = None
    while True:
        sums = lattice.schlomilch_table(derived.Delta, wave.psi_i, 2 * N)
        system = assemble(params, wave, derived, sums, N)
        cs = solve_direct(system) if method == "direct" else solve_neumann(system)
        if prev is not None and max_relative_change(prev, cs) < tol:
            return cs
        if N >= N_cap:
            if prev is None:
                return cs
            raise TruncationNotConverged(
                f"coefficients still change by {max_relative_change(prev, cs):.2e} at N={N}"
            )
        prev = cs
        N = min(2 * N, N_cap)


def with_rhs(system, rhs):
    """Copy of ``system`` with a replaced (scaled) right-hand side."""
    return replace(system, rhs=np.asarray(rhs, dtype=complex))
