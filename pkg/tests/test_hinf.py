import numpy as np
import pytest

from port_synth.errors import BetaTooSmall, Infeasible, NotPositive, NotSymmetric
from port_synth.hinf import (
    build_R,
    build_Yvec,
    inner_outer,
    model_match,
    nehari_scalar,
    nehari_solution,
    spectral_factor,
)
from port_synth.poly_rational import RationalFunction, RationalVector, linf_norm
from port_synth.realization import hankel_norm

from conftest import match_roots, zpk

HANKEL_ROWS = [(0.9355, 1.3004), (1.2518, 0.9593), (1.0937, 1.1035), (1.1728, 1.0263), (1.2123, 0.9916)]


class TestSpectralFactor:
    def test_constant(self):
        g = spectral_factor(RationalFunction.constant(1.2123**2))
        assert g(0.0) == pytest.approx(1.2123)

    def test_root_pairing(self, grid):
        G = RationalFunction.from_coeffs([1.0, 0.0, -1.0], [4.0, 0.0, -1.0])
        g = spectral_factor(G, grid)
        np.testing.assert_allclose(g.zeros.real, [-1.0])
        np.testing.assert_allclose(g.poles.real, [-2.0])
        assert g.gain > 0

    def test_not_symmetric(self, grid):
        with pytest.raises(NotSymmetric):
            spectral_factor(zpk([], [-1.0], 1.0), grid)

    def test_not_positive(self, grid):
        with pytest.raises(NotPositive):
            spectral_factor(RationalFunction.from_coeffs([-1.0, 0.0, 1.0], [4.0, 0.0, -1.0]), grid)


class TestInnerOuter:
    def test_already_inner(self, grid):
        io = inner_outer(RationalVector([RationalFunction.constant(1.0), RationalFunction.constant(0.0)]), grid)
        assert io.Uo(1j) == pytest.approx(1.0)
        assert io.Ui[0](1j) == pytest.approx(1.0) and io.Ui[1].is_zero()

    def test_reference_T2(self, T1T2, grid):
        _, T2 = T1T2
        io = inner_outer(T2, grid)
        assert abs(io.Ui[0].gain) == pytest.approx(0.70711, rel=1e-4)
        assert match_roots([-1.141, -0.4334], io.Ui[0].poles, 0) < 1e-3
        assert io.Uo.gain == pytest.approx(0.084853, rel=1e-3)
        assert match_roots([-0.4334, -1.141, -6.0], io.Uo.zeros, 0) < 1e-3
        w = grid.points
        assert np.max(np.abs(io.Ui.magnitude(w) ** 2 - 1.0)) < 1e-9
        for k in range(2):
            np.testing.assert_allclose((io.Ui[k] * io.Uo).freqresp(w), T2[k].freqresp(w), rtol=1e-8, atol=1e-14)


class TestYvecAndR:
    def test_reference_norms(self, match):
        assert match.yvec_norm == pytest.approx(0.3028, abs=0.01)
        assert match.t1_norm == pytest.approx(1.5682, abs=0.02)

    def test_orthogonal_to_Ui(self, match, grid):
        v = match.Ui.para_inner(match.Yvec)
        assert np.max(np.abs(v.freqresp(grid.points))) < 1e-8

    def test_inner_projection_vanishes(self, match, grid):
        y = build_Yvec(match.Ui, match.Ui)
        assert linf_norm(y, grid)[0] < 1e-9

    def test_beta_too_small(self, match, T1T2, grid):
        T1, _ = T1T2
        with pytest.raises(BetaTooSmall):
            build_R(0.2, T1, match.Ui, match.Yvec, grid)

    @pytest.mark.parametrize("beta,expected", HANKEL_ROWS)
    def test_table_row(self, beta, expected, match, T1T2, grid):
        T1, _ = T1T2
        _, R = build_R(beta, T1, match.Ui, match.Yvec, grid)
        assert hankel_norm(R) == pytest.approx(expected, abs=0.02)

    def test_monotone_in_beta(self, match, T1T2, grid):
        T1, _ = T1T2
        betas = sorted(b for b, _ in HANKEL_ROWS)
        hs = [hankel_norm(build_R(b, T1, match.Ui, match.Yvec, grid)[1]) for b in betas]
        assert all(a >= b for a, b in zip(hs, hs[1:]))

    def test_large_beta_limit(self, match, T1T2, grid):
        T1, _ = T1T2
        _, R = build_R(1e4, T1, match.Ui, match.Yvec, grid)
        assert hankel_norm(R) < 1e-3

    def test_reference_R(self, match):
        R = match.Rfun
        assert R.gain == pytest.approx(-0.03501, rel=2e-2)
        assert match_roots([0.4334, 1.141, -1.0, -2.0, -3.397, -0.4208, -1.14], R.poles, 0) < 0.02

    def test_reference_Yo(self, match):
        Yo = match.Yo
        assert Yo.gain == pytest.approx(1.2116, rel=1e-2)
        assert match_roots([-3.397, -1.14, -0.4208], Yo.zeros, 0) < 0.01
        assert match_roots([-0.4334, -1.141, -3.4], Yo.poles, 0) < 0.01


class TestNehari:
    def test_stable_input(self):
        r = zpk([], [-1.0], 1.0)
        X, gamma = nehari_scalar(r)
        assert gamma == 0.0 and X is r

    def test_reference_instance(self, match, grid):
        sol = match.nehari
        assert sol.gamma == pytest.approx(0.9916, abs=3e-3)
        assert match_roots([-1.112, -1.0, -2.0, -3.397], sol.X.poles, 0) < 0.02
        assert sol.X.in_S()
        err = np.abs(match.Rfun.freqresp(grid.points) - sol.X.freqresp(grid.points))
        assert np.max(np.abs(err / sol.gamma - 1.0)) < 1e-6

    def test_f_and_g(self, match):
        sol = match.nehari
        f = RationalFunction.from_coeffs([-1.292, 1.162], [0.4945, -1.574, 1.0])
        g = RationalFunction.from_coeffs([-1.292, -1.162], [0.4945, 1.574, 1.0])
        for s in (0.5j, 2j, 1.0 + 1j):
            assert sol.f(s) == pytest.approx(f(s), rel=1e-2)
            assert sol.g(s) == pytest.approx(g(s), rel=1e-2)

    def test_allpass_random(self):
        R = zpk([-2.0, 0.7], [0.5, 2.0, -1.0, -3.0], 1.5)
        sol = nehari_solution(R)
        w = np.logspace(-2, 2, 200)
        e = np.abs(R.freqresp(w) - sol.X.freqresp(w))
        np.testing.assert_allclose(e, sol.gamma, rtol=1e-8)


class TestModelMatch:
    def test_reference_bisection(self, match):
        path = [b for b, _ in match.history]
        np.testing.assert_allclose(path, [0.9355, 1.2518, 1.0937, 1.1728, 1.2123], atol=2e-3)
        assert match.beta == pytest.approx(1.2123, abs=2e-3)
        assert match.hankel_norm == pytest.approx(0.9916, abs=0.01)

    def test_invariants(self, match):
        assert match.gamma <= match.beta
        assert match.achieved_norm <= match.beta + 1e-6
        assert match.Q.in_S()

    def test_achieved_norm_formula(self, match):
        # |T1 - T2 Q|^2 = gamma^2 beta^2 + (1 - gamma^2) |Y|^2 pointwise, so its peak
        # sits where |Y| peaks
        g, b, y = match.gamma, match.beta, match.yvec_norm
        assert match.achieved_norm == pytest.approx(np.sqrt(g * g * b * b + (1 - g * g) * y * y), rel=1e-4)

    def test_lemma2(self, match, T1T2, grid):
        T1, _ = T1T2
        F = match.Ui.para_inner(T1) - match.Uo * match.Q
        assert linf_norm(F / match.Yo, grid)[0] < 1.0

    def test_perfect_matching(self, T1T2, grid):
        _, T2 = T1T2
        m = model_match(T2, T2, 0.05, grid)
        assert m.Q(0.7j) == pytest.approx(1.0, rel=1e-8)
        assert m.achieved_norm < 1e-8

    def test_zero_T1(self, T1T2, grid):
        _, T2 = T1T2
        z = RationalFunction.constant(0.0)
        m = model_match(RationalVector([z, z]), T2, 0.05, grid)
        assert m.Q.is_zero() and m.achieved_norm == 0.0

    def test_bad_tol(self, T1T2):
        T1, T2 = T1T2
        with pytest.raises(ValueError):
            model_match(T1, T2, 0.0)

    def test_infeasible(self, grid):
        # T2 vanishes at s=1, so every Q leaves an error of at least |T1(1)| ~ 0.99;
        # a bracket topping out at 0.5 cannot contain the optimum
        T1 = RationalVector([zpk([], [-0.01], 1.0), RationalFunction.constant(0.0)])
        T2 = RationalVector([zpk([1.0], [-1.0], 1.0), RationalFunction.constant(0.0)])
        with pytest.raises(Infeasible):
            model_match(T1, T2, 0.05, grid, bracket=(0.0, 0.5))


def test_lemma1_norm_preservation(match, grid):
    G = RationalVector([zpk([-0.5], [-1.0, -3.0], 2.0), zpk([], [-2.0], -1.0)])
    top = match.Ui.para_inner(G)
    bottom = G - match.Ui * top
    w = grid.points
    lhs = np.sqrt(np.abs(top.freqresp(w)) ** 2 + bottom.magnitude(w) ** 2)
    np.testing.assert_allclose(lhs, G.magnitude(w), rtol=1e-8)
