"""H-infinity model matching: minimize ``||T1 - T2 Q||`` over stable ``Q``.

The column problem is reduced to a scalar Nehari problem via an
inner-outer factorization of ``T2`` and a spectral factorization of
``beta**2 - Y* Y``; the scalar problem is solved from the gramians of the
antistable part.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AxisZero,
    BetaTooSmall,
    Infeasible,
    NotPositive,
    NotSymmetric,
)
from .poly_rational import (
    FrequencyGrid,
    Polynomial,
    RationalFunction,
    RationalVector,
    cancel_near_pairs,
    default_grid,
    linf_norm,
)
from .realization import (
    HankelData,
    hankel_data,
    remove_poles,
    ss_to_rational,
    stable_antistable_split,
)

log = logging.getLogger(__name__)

__all__ = [
    "InnerOuterPair",
    "ModelMatchResult",
    "NehariSolution",
    "inner_outer",
    "spectral_factor",
    "build_Yvec",
    "build_R",
    "nehari_scalar",
    "nehari_solution",
    "model_match",
]

# near pole/zero pairs closer than this (relative) are artefacts of rounding
_TIDY_RTOL = 1e-6


def _tidy(r: RationalFunction, rtol: float = _TIDY_RTOL) -> RationalFunction:
    if r.is_zero() or r.num.degree == 0 or r.den.degree == 0:
        return r
    scale = max(1.0, float(np.max(np.abs(np.concatenate([r.poles, r.zeros])))))
    return cancel_near_pairs(r, rtol * scale)


@dataclass(frozen=True)
class InnerOuterPair:
    Ui: RationalVector
    Uo: RationalFunction


@dataclass(frozen=True)
class NehariSolution:
    R1: RationalFunction
    R2: RationalFunction
    hankel: HankelData | None
    f: RationalFunction | None
    g: RationalFunction | None
    X: RationalFunction
    gamma: float


@dataclass(frozen=True)
class ModelMatchResult:
    beta: float
    gamma: float
    hankel_norm: float
    Yvec: RationalVector
    Yo: RationalFunction
    Rfun: RationalFunction
    Xfun: RationalFunction
    Q: RationalFunction
    achieved_norm: float
    Ui: RationalVector | None = None
    Uo: RationalFunction | None = None
    yvec_norm: float = 0.0
    t1_norm: float = 0.0
    history: tuple = field(default_factory=tuple)
    nehari: NehariSolution | None = None


def _even_roots_lhp(p: Polynomial, what: str) -> np.ndarray:
    """Left-half-plane roots of an even polynomial ``p(s) = e(s**2)``."""
    if p.degree == 0:
        return np.zeros(0, dtype=complex)
    c = p.coeffs
    odd = np.abs(c[1::2])
    if odd.size and np.max(odd) > 1e-8 * np.max(np.abs(c)):
        raise NotSymmetric(f"{what} is not even in s")
    if p.degree % 2:
        raise NotSymmetric(f"{what} has odd degree")
    e = Polynomial(c[::2])
    out = []
    if e.degree > 0:
        for u in e.roots():
            root = np.sqrt(complex(u))
            if abs(root.real) < 1e-7 * max(1.0, abs(root)):
                raise AxisZero(f"{what} has a root on the imaginary axis near {root}")
            out.append(-root if root.real > 0 else root)
    return np.array(out, dtype=complex)


def spectral_factor(G: RationalFunction, grid: FrequencyGrid | None = None) -> RationalFunction:
    """Stable, stably invertible ``Gm`` with ``Gm(-s) Gm(s) = G(s)``.

    Roots of numerator and denominator are paired across the imaginary
    axis (computed in the variable ``s**2``) and the left half kept; the gain
    is the positive square root fixed by the leading coefficients.

    Raises
    ------
    NotSymmetric
        ``G(-s) != G(s)``.
    NotPositive
        ``G(jw) <= 0`` somewhere on the grid.
    """
    grid = grid if grid is not None else default_grid()
    if G.is_zero():
        raise NotPositive("zero function has no spectral factor")
    probes = 1j * np.array([0.37, 1.3, 4.1])
    Gp = G.paraconjugate()
    a, b = G(probes), Gp(probes)
    if np.max(np.abs(a - b)) > 1e-8 * np.max(np.abs(a)):
        raise NotSymmetric("G(-s) differs from G(s)")
    vals = G.freqresp(grid.points)
    if np.any(vals.real <= 0) or np.any(np.abs(vals.imag) > 1e-8 * np.abs(vals)):
        raise NotPositive("G(jw) must be real and positive on the grid")
    z = _even_roots_lhp(G.num, "numerator")
    p_all = G.poles
    p = p_all[p_all.real < 0]
    if 2 * len(p) != len(p_all):
        raise NotSymmetric("poles are not mirrored across the imaginary axis")
    h, l = len(z), len(p)
    # Gm(-s)Gm(s) ~ c^2 (-1)^(h-l) s^(2(h-l)) at infinity
    c2 = G.gain * (-1.0) ** (h - l)
    if c2 <= 0:
        raise NotPositive("leading coefficient has the wrong sign")
    return RationalFunction.from_zpk(z, p, np.sqrt(c2))


def inner_outer(T2: RationalVector, grid: FrequencyGrid | None = None) -> InnerOuterPair:
    """Factor a stable column ``T2 = Ui * Uo`` with ``Ui`` inner and ``Uo`` outer.

    ``Uo`` is the spectral factor of ``T2* T2``; then ``Ui = T2 / Uo``.
    """
    m = T2.para_inner(T2)
    if m.is_zero():
        raise AxisZero("T2 vanishes identically")
    Uo = _tidy(spectral_factor(m, grid))
    Ui = RationalVector(_tidy(t / Uo) for t in T2)
    return InnerOuterPair(Ui, Uo)


def build_Yvec(T1: RationalVector, Ui: RationalVector) -> RationalVector:
    """Projection of ``T1`` onto the complement of ``Ui``: ``(I - Ui Ui*) T1``."""
    proj = Ui.para_inner(T1)
    return RationalVector(_tidy(t - u * proj) for t, u in zip(T1, Ui, strict=True))


def build_R(beta: float, T1: RationalVector, Ui: RationalVector, Yvec: RationalVector, grid: FrequencyGrid | None = None):
    """``Yo`` = spectral factor of ``beta**2 - Y* Y`` and ``R = Ui* T1 / Yo``."""
    grid = grid if grid is not None else default_grid()
    ynorm, _ = linf_norm(Yvec, grid)
    if beta <= ynorm:
        raise BetaTooSmall(f"beta={beta} must exceed ||Y||={ynorm}")
    G = RationalFunction.constant(beta * beta) - Yvec.para_inner(Yvec)
    Yo = _tidy(spectral_factor(_tidy(G), grid))
    R = _tidy(Ui.para_inner(T1) / Yo)
    return Yo, R


def nehari_solution(Rfun: RationalFunction) -> NehariSolution:
    """Optimal stable approximation ``X = R - gamma f/g`` of a scalar ``R``."""
    R1, R2 = stable_antistable_split(Rfun)
    if R1.is_zero():
        return NehariSolution(R1, R2, None, None, None, Rfun, 0.0)
    hd = hankel_data(R1)
    ss = hd.realization
    anti = R1.poles
    f = ss_to_rational(ss.A, hd.w, ss.C, poles=anti)
    g = ss_to_rational(-ss.A.T, hd.v, ss.B, poles=-anti)
    gamma = hd.hankel_norm
    err = _tidy(R1 - gamma * (f / g))
    # the antistable poles cancel exactly in theory
    err = remove_poles(err, anti, rtol=1e-5)
    X = _tidy(R2 + err)
    return NehariSolution(R1, R2, hd, f, g, X, gamma)


def nehari_scalar(Rfun: RationalFunction) -> tuple[RationalFunction, float]:
    sol = nehari_solution(Rfun)
    return sol.X, sol.gamma


def _hankel_at(beta, T1, Ui, Yvec, grid):
    Yo, R = build_R(beta, T1, Ui, Yvec, grid)
    R1, _ = stable_antistable_split(R)
    hn = 0.0 if R1.is_zero() else hankel_data(R1).hankel_norm
    return hn, Yo, R


def model_match(
    T1: RationalVector,
    T2: RationalVector,
    tol: float = 0.05,
    grid: FrequencyGrid | None = None,
    bracket: tuple[float, float] | None = None,
) -> ModelMatchResult:
    """Nearly optimal stable ``Q`` for ``||T1 - T2 Q||``.

    Bisects ``beta`` on ``(||Y||, ||T1||]`` with the predicate
    ``||Gamma_R(beta)|| < 1`` (true exactly when the infimal error lies below
    ``beta``) until the bracket is narrower than ``tol``, then solves the
    Nehari problem at the upper end and recovers ``Q = X Yo / Uo``.

    ``bracket`` overrides the computed end points (used to replay a
    known bisection path).

    Raises
    ------
    Infeasible
        If the Hankel norm is still >= 1 at the top of the bracket.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    grid = grid if grid is not None else default_grid()
    t1_norm, _ = linf_norm(T1, grid)
    zero = RationalFunction.constant(0.0)
    if T1.is_zero():
        return ModelMatchResult(
            0.0, 0.0, 0.0, T1, RationalFunction.constant(1.0), zero, zero, zero, 0.0,
            t1_norm=0.0,
        )
    io = inner_outer(T2, grid)
    Yvec = build_Yvec(T1, io.Ui)
    y_norm, _ = linf_norm(Yvec, grid)
    lo, hi = bracket if bracket is not None else (y_norm, t1_norm)
    lo = max(lo, y_norm * (1 + 1e-9) + 1e-12)
    history = []

    hn_hi, Yo, R = _hankel_at(hi, T1, io.Ui, Yvec, grid)
    if hn_hi >= 1.0:
        raise Infeasible(f"Hankel norm {hn_hi:.6g} >= 1 at beta=||T1||={hi:.6g}")
    best = (hi, hn_hi, Yo, R)
    while hi - lo >= tol:
        mid = 0.5 * (lo + hi)
        hn, Yo_m, R_m = _hankel_at(mid, T1, io.Ui, Yvec, grid)
        history.append((mid, hn))
        log.debug("beta=%.6g hankel=%.6g", mid, hn)
        if hn < 1.0:
            hi = mid
            best = (mid, hn, Yo_m, R_m)
        else:
            lo = mid
    beta, hn, Yo, R = best
    sol = nehari_solution(R)
    Q = _tidy(sol.X * Yo / io.Uo)
    err = T1 - T2 * Q
    achieved, _ = linf_norm(err, grid)
    return ModelMatchResult(
        beta=beta,
        gamma=sol.gamma,
        hankel_norm=hn,
        Yvec=Yvec,
        Yo=Yo,
        Rfun=R,
        Xfun=sol.X,
        Q=Q,
        achieved_norm=achieved,
        Ui=io.Ui,
        Uo=io.Uo,
        yvec_norm=y_norm,
        t1_norm=t1_norm,
        history=tuple(history),
        nehari=sol,
    )
