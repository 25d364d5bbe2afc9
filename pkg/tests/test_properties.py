"""Randomized property suites (at least 100 examples each)."""

import numpy as np
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st

from port_synth.hinf import inner_outer, spectral_factor
from port_synth.poly_rational import (
    Polynomial,
    RationalFunction,
    RationalVector,
    cancel_near_pairs,
    default_grid,
    paraconjugate,
    polynomial_from_roots,
    roots,
)
from port_synth.realization import (
    hankel_data,
    hankel_norm,
    realize_strictly_proper,
    solve_lyapunov,
    stable_antistable_split,
)

GRID = default_grid()
W = GRID.points
PROPS = settings(max_examples=120, deadline=None, suppress_health_check=[HealthCheck.filter_too_much])

mag = st.floats(0.2, 5.0)
gain = st.floats(0.2, 5.0).flatmap(lambda x: st.sampled_from([x, -x]))


def separated(xs, gap=0.15):
    xs = sorted(xs)
    return all(b - a >= gap for a, b in zip(xs, xs[1:]))


@st.composite
def stable_poles(draw, lo=1, hi=3):
    ps = draw(st.lists(mag, min_size=lo, max_size=hi))
    assume(separated(ps))
    return [-p for p in ps]


@st.composite
def zeros_any(draw, n):
    zs = draw(st.lists(st.floats(0.1, 5.0).flatmap(lambda x: st.sampled_from([x, -x])), min_size=0, max_size=n))
    return zs


class TestAlgebraProperties:
    @PROPS
    @given(st.lists(st.floats(-5, 5), min_size=2, max_size=6), st.floats(0.5, 3.0))
    def test_roots_round_trip(self, coeffs, lead):
        p = Polynomial(coeffs + [lead])
        q = polynomial_from_roots(roots(p), lead)
        scale = np.max(np.abs(p.coeffs))
        assert np.max(np.abs(q.coeffs - p.coeffs)) <= 1e-8 * scale

    @PROPS
    @given(stable_poles(), zeros_any(3), gain)
    def test_paraconjugate_is_conjugate(self, poles, zeros, k):
        r = RationalFunction.from_zpk(zeros[: len(poles)], poles, k)
        a, b = paraconjugate(r).freqresp(W), np.conj(r.freqresp(W))
        assert np.max(np.abs(a - b) / np.abs(b)) < 1e-12

    @PROPS
    @given(stable_poles(), gain, st.floats(1e-4, 0.04))
    def test_cancel_near_pairs_probe_value(self, poles, k, d):
        r = RationalFunction.from_zpk([poles[0] + d], poles, k)
        out = cancel_near_pairs(r, 0.05, match_at=1j)
        assert abs(abs(out(1j)) / abs(r(1j)) - 1.0) < 1e-3


class TestInnerOuterProperties:
    @PROPS
    @given(stable_poles(1, 3), zeros_any(3), zeros_any(3), gain, gain)
    def test_inner_magnitude(self, poles, z1, z2, k1, k2):
        n = len(poles)
        t1 = RationalFunction.from_zpk(z1[:n], poles, k1)
        t2 = RationalFunction.from_zpk(z2[:n], poles, k2)
        io = inner_outer(RationalVector([t1, t2]), GRID)
        assert np.max(np.abs(io.Ui.magnitude(W) ** 2 - 1.0)) < 1e-9
        assert io.Uo.in_S() and np.all(io.Uo.zeros.real < 0)

    @PROPS
    @given(stable_poles(1, 3), stable_poles(0, 3), st.floats(0.2, 5.0))
    def test_spectral_reconstruction(self, poles, zeros, k):
        assume(len(zeros) <= len(poles))
        H = RationalFunction.from_zpk(zeros, poles, k)
        G = paraconjugate(H) * H
        Gm = spectral_factor(G, GRID)
        g = G.freqresp(W)
        back = paraconjugate(Gm).freqresp(W) * Gm.freqresp(W)
        assert np.max(np.abs(back - g) / np.abs(g)) < 1e-8


@st.composite
def mixed_function(draw):
    stab = draw(stable_poles(0, 3))
    anti = draw(st.lists(mag, min_size=1, max_size=3))
    assume(separated(anti))
    poles = stab + anti
    zs = draw(zeros_any(len(poles)))
    assume(all(abs(z - q) > 0.05 for z in zs for q in poles))
    return RationalFunction.from_zpk(zs, poles, draw(gain))


class TestRealizationProperties:
    @PROPS
    @given(mixed_function())
    def test_split_reconstruction(self, r):
        r1, r2 = stable_antistable_split(r)
        v = r.freqresp(W)
        a, b = r1.freqresp(W), r2.freqresp(W)
        # summands can cancel by orders of magnitude at high frequency
        scale = np.maximum(np.abs(a) + np.abs(b), 1e-300)
        assert np.max(np.abs(a + b - v) / scale) < 1e-8
        assert np.all(r1.poles.real > 0) and r2.is_stable()

    @PROPS
    @given(mixed_function())
    def test_lyapunov_residuals(self, r):
        r1, _ = stable_antistable_split(r)
        ss = realize_strictly_proper(r1)
        BB, CC = ss.B @ ss.B.T, ss.C.T @ ss.C
        Lc = solve_lyapunov(ss.A, BB)
        Lo = solve_lyapunov(ss.A.T, CC)
        assert np.linalg.norm(ss.A @ Lc + Lc @ ss.A.T - BB) < 1e-10 * np.linalg.norm(BB)
        assert np.linalg.norm(ss.A.T @ Lo + Lo @ ss.A - CC) < 1e-10 * np.linalg.norm(CC)

    @PROPS
    @given(stable_poles(1, 4), zeros_any(4), gain)
    def test_hankel_of_stable_is_zero(self, poles, zeros, k):
        assert hankel_norm(RationalFunction.from_zpk(zeros[: len(poles)], poles, k)) == 0.0

    @PROPS
    @given(mixed_function())
    def test_hankel_below_linf(self, r):
        r1, _ = stable_antistable_split(r)
        hd = hankel_data(r1)
        dense = GRID.refined(4).points
        assert hd.hankel_norm <= np.max(np.abs(r1.freqresp(dense))) * (1 + 1e-9)
