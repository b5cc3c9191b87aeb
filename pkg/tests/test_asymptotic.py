import math

from hypothesis import given, settings, strategies as st
import numpy as np
import pytest

from cylgrating import asymptotic as asy
from cylgrating import exact, lattice, model
from cylgrating.errors import PreconditionViolated, TruncationNotConverged


def make(a_over_d=0.1, kra=0.05, eps=2.0, mu=1.0, theta=math.pi / 4, psi=math.pi, a=1.0):
    params = model.GratingParams(a, a / a_over_d, eps, mu)
    wave = model.IncidentWave(kra / (a * math.sin(theta)), theta, psi)
    return params, wave, model.derive(params, wave)


def isolated(n, params, wave, derived):
    E = model.incident_coeff(n, wave)
    c = model.c_n(n, derived, params)
    ae = model.a_zeta_n(n, "eps", derived, params)
    be = model.b_zeta_n(n, "eps", derived, params)
    bm = model.b_zeta_n(n, "mu", derived, params)
    A = -(ae + be * bm * c) * E / (1 + be * bm)
    return A, -bm * (A + c * E)


def no_odd_h(psi):
    return lambda n: 0.0 if n % 2 else lattice.h_constant(n, psi)


class TestScatteringMatrix:
    def test_prefactor(self):
        assert asy.order_prefactor(1) == pytest.approx(1j * math.pi / 4)
        assert asy.order_prefactor(-2) == pytest.approx(2j * math.pi / 64)

    def test_off_diagonal_vanish_normal_incidence(self):
        _, _, d = make(theta=math.pi / 2, mu=1.8)
        for n in (1, 2, 3):
            S = asy.scattering_matrix(n, 1, d).entries
            assert S[0, 1] == 0 and S[1, 0] == 0

    @given(theta=st.floats(0.05, math.pi / 2), eps=st.floats(1.0, 8.0), mu=st.floats(1.0, 8.0),
           n=st.integers(1, 6))
    def test_diagonal_two_ways(self, theta, eps, mu, n):
        p, w, d = make(eps=eps, mu=mu, theta=theta)
        S = asy.scattering_matrix(n, -1, d).entries / asy.order_prefactor(n)
        r1, r2 = model.s_over_D_closed_form(p, w)
        assert abs(S[0, 0] - r1) < 1e-13 * max(1.0, abs(r1))
        assert abs(S[1, 1] - r2) < 1e-13 * max(1.0, abs(r2))

    def test_sign_flips_only_off_diagonal(self):
        _, _, d = make(theta=0.7, mu=1.5)
        plus = asy.scattering_matrix(2, 1, d).entries
        minus = asy.scattering_matrix(2, -1, d).entries
        assert np.all(plus.diagonal() == minus.diagonal())
        assert plus[0, 1] == -minus[0, 1] and plus[1, 0] == -minus[1, 0]
        assert plus[0, 1] != 0

    @pytest.mark.parametrize("n", [1, -1, 2, -2, 3])
    def test_small_argument_limit_of_isolated_rod(self, n):
        errs = []
        for kra in (1e-2, 1e-3):
            p, w, d = make(kra=kra, theta=0.7, mu=1.5, psi=math.pi + 0.3)
            S = asy.scattering_matrix(abs(n), 1 if n > 0 else -1, d).entries
            pred = S[:, 0] * model.incident_coeff(n, w) * kra ** (2 * abs(n))
            A, AH = isolated(n, p, w, d)
            errs.append(max(abs(A / pred[0] - 1), abs(AH / pred[1] - 1)))
        assert errs[1] < 1e-4
        assert errs[1] < errs[0]

    def test_monopole_limit(self):
        p, w, d = make(kra=1e-3, eps=3.0, mu=2.0, theta=0.7)
        S0 = asy.monopole_matrix(p)
        A, AH = isolated(0, p, w, d)
        assert A / 1e-6 == pytest.approx(S0[0, 0] * model.incident_coeff(0, w), rel=1e-4)
        assert AH == 0
        assert S0[1, 1] == pytest.approx(1j * math.pi / 4)

    def test_order_zero_rejected(self):
        with pytest.raises(ValueError):
            asy.scattering_matrix(0, 1, make()[2])


class TestInteractionSums:
    def test_monopole_combination(self):
        h = {-1: 2.0, 0: 3.0, 1: 5.0}
        om = {-1: np.array([1.0, 2.0]), 0: np.array([7.0, 0.0]), 1: np.array([1j, -1.0])}
        g = asy.interaction_sums(om, h, 0.1, 0, "even")
        np.testing.assert_allclose(g, 2 * om[1] + 3 * om[0] + 5 * om[-1])

    def test_zero_omega(self):
        om = {p: np.zeros(2) for p in range(-5, 6)}
        for n in (1, 2, 3):
            for parity in ("odd", "even"):
                assert np.all(asy.interaction_sums(om, None, 0.2, n, parity) == 0)

    def test_odd_weights(self):
        h = lambda k: 1.0
        om = {-1: np.array([1.0, 0.0]), -3: np.array([1.0, 0.0])}
        g = asy.interaction_sums(om, h, 0.1, 1, "odd", m_trunc=2)
        assert g[0] == pytest.approx(0.01 + 0.0001)

    def test_vanish_with_spacing(self):
        rng = np.random.default_rng(3)
        om = {p: rng.normal(size=2) + 0j for p in range(-9, 10)}
        vals = [np.max(np.abs(asy.interaction_sums(om, None, ad, 2, "even"))) for ad in (0.1, 0.01, 0.001)]
        assert vals[0] > vals[1] > vals[2]
        assert vals[2] < 1e-10

    def test_truncation_tolerance(self):
        om = {p: np.ones(2) for p in range(-9, 10)}
        with pytest.raises(TruncationNotConverged):
            asy.interaction_sums(om, lambda k: 1.0, 0.4, 1, "odd", m_trunc=3, tol=1e-12)

    def test_bad_parity(self):
        with pytest.raises(ValueError):
            asy.interaction_sums({}, None, 0.1, 1, "both")


class TestSolve:
    def test_isolated_limit(self):
        p, w, d = make(a_over_d=1e-5, kra=1e-6, theta=0.7, mu=1.5, psi=math.pi + 0.3)
        aset = asy.solve_asymptotic(p, w, d)
        for p_ in (1, -1, 2, -2):
            S = asy.scattering_matrix(abs(p_), 1 if p_ > 0 else -1, d).entries
            np.testing.assert_allclose(aset.omega[p_], S[:, 0] * model.incident_coeff(p_, w), rtol=1e-8)
        np.testing.assert_allclose(aset.omega[0], asy.monopole_matrix(p) @ [model.incident_coeff(0, w), 0],
                                   rtol=1e-8)
        ref = abs(aset.omega[1][0])
        for p_ in aset.omega:
            if abs(p_) > 2:
                assert np.max(np.abs(aset.omega[p_])) < 1e-8 * ref

    def test_normal_incidence_no_magnetic_part(self):
        p, w, d = make(theta=math.pi / 2, mu=1.5, psi=math.pi + 0.3)
        aset = asy.solve_asymptotic(p, w, d)
        assert all(v[1] == 0 for v in aset.omega.values())

    def test_odd_orders_ignore_even_forcing(self):
        p, w, d = make(psi=math.pi + 0.3, theta=0.7)
        full = asy.solve_asymptotic(p, w, d)
        odd_only = asy.solve_asymptotic(p, w, d, forcing_orders={1})
        scale = np.max(np.abs(full.omega[1]))
        for p_ in full.omega:
            if p_ % 2:
                assert np.max(np.abs(full.omega[p_] - odd_only.omega[p_])) < 1e-14 * scale

    def test_even_orders_vanish_without_odd_cross_terms(self):
        p, w, d = make(psi=math.pi + 0.3, theta=0.7)
        aset = asy.solve_asymptotic(p, w, d, forcing_orders={1}, h_override=no_odd_h(w.psi_i))
        for p_ in aset.omega:
            if p_ % 2 == 0:
                assert np.all(aset.omega[p_] == 0)
        assert np.any(aset.omega[1] != 0)

    def test_normal_azimuth_even_orders_from_even_forcing_only(self):
        # the odd constants vanish at psi = pi, so odd-order feedback into the even system drops out
        p, w, d = make(theta=0.7)
        aset = asy.solve_asymptotic(p, w, d, forcing_orders={1})
        scale = np.max(np.abs(aset.omega[1]))
        for p_ in aset.omega:
            if p_ % 2 == 0:
                assert np.max(np.abs(aset.omega[p_])) < 1e-12 * scale

    def test_agrees_with_exact(self, desk):
        p, w = desk
        d = model.derive(p, w)
        ex = exact.solve_direct(exact.assemble(p, w, d, None, 12))
        rc = asy.reconstruct(asy.solve_asymptotic(p, w, d), d, p)
        for n in (1, -1):
            assert abs(rc.A[n] - ex.A[n]) < 0.1 * abs(ex.A[n])
            assert abs(rc.A_H[n] - ex.A_H[n]) < 0.1 * abs(ex.A_H[n])

    def test_monopole_agrees_with_exact(self, desk):
        p, w = desk
        d = model.derive(p, w)
        ex = exact.solve_direct(exact.assemble(p, w, d, None, 12))
        rc = asy.reconstruct(asy.solve_asymptotic(p, w, d), d, p)
        assert abs(rc.A[0] - ex.A[0]) < 0.1 * abs(ex.A[0])

    def test_spacing_precondition(self):
        p, w, d = make(a_over_d=0.5)
        with pytest.raises(PreconditionViolated):
            asy.solve_asymptotic(p, w, d)

    def test_single_mode_precondition(self):
        p, w, d = make(a_over_d=0.1, kra=0.8)
        with pytest.raises(PreconditionViolated):
            asy.solve_asymptotic(p, w, d)

    def test_truncation_check(self):
        p, w, d = make(a_over_d=0.3, theta=0.7, psi=math.pi + 0.2)
        with pytest.raises(TruncationNotConverged):
            asy.solve_asymptotic(p, w, d, m_trunc=1, tol=1e-14)
        aset = asy.solve_asymptotic(p, w, d, m_trunc=6, tol=1e-8)
        assert aset.p_max == 13
        assert aset.residual < 1e-12


class TestReconstruct:
    def test_exponents(self):
        assert [asy.scale_exponent(p) for p in (1, 2, 3, 0, -1, -2, -4, 5)] == [2, 4, 4, 2, 2, 4, 6, 6]

    def test_zero_set(self, desk):
        p, w = desk
        d = model.derive(p, w)
        zero = asy.AsymptoticSet(2, {q: np.zeros(2, dtype=complex) for q in range(-5, 6)}, 0.1)
        cs = asy.reconstruct(zero, d, p)
        assert cs.method == "asymptotic"
        assert all(v == 0 for v in cs.A.values()) and all(v == 0 for v in cs.A_H.values())

    def test_power_law(self):
        p1, w1, d1 = make(kra=0.08)
        p2, w2, d2 = make(kra=0.04)
        aset = asy.solve_asymptotic(p1, w1, d1)
        big = asy.reconstruct(aset, d1, p1)
        small = asy.reconstruct(aset, d2, p2)
        for n in (1, -1):
            assert small.A[n] == pytest.approx(big.A[n] / 4, rel=1e-14)
        assert small.A[2] == pytest.approx(big.A[2] / 16, rel=1e-14)
