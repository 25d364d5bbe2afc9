"""Robust port-compensator synthesis for the one-port example circuit.

Pipeline: nominal impedance -> corner sweep of the toleranced parameters ->
uncertainty bound on the coprime-fraction deltas -> model matching ->
compensator ``Zc = (Y + N Q)/(X - D Q)`` -> stability check of every
perturbed interconnection.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import optimize

from .coprime import (
    CoprimeFraction,
    PerturbationDelta,
    coprime_factorization,
    perturbation_delta,
)
from .errors import DegenerateSum, FitFailed, NumericalError, SingularParametrization
from .hinf import ModelMatchResult, model_match
from .poly_rational import (
    FrequencyGrid,
    RationalFunction,
    RationalVector,
    cancel_near_pairs,
    default_grid,
)

__all__ = [
    "CircuitParams",
    "CornerRecord",
    "SweepResult",
    "Verdict",
    "SynthesisResult",
    "REFERENCE_BOUND",
    "circuit_impedance",
    "minimal_impedance",
    "corner_levels",
    "sweep_perturbations",
    "envelope",
    "dominance_margin",
    "fit_bound",
    "validate_bound",
    "build_T1_T2",
    "compensator",
    "interconnect",
    "verify_robust",
    "synthesize",
]

PARAM_NAMES = ("R1", "R2", "L1", "L2", "C1")
STABILITY_MARGIN = 1e-9
DEFAULT_CANCEL_TOL = 0.02


@dataclass(frozen=True)
class CircuitParams:
    R1: float = 1.0
    R2: float = 3.0
    L1: float = 2.0
    L2: float = 1.0
    C1: float = 1.0

    def __post_init__(self):
        for name in PARAM_NAMES:
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be strictly positive, got {v}")

    def scaled(self, levels: Sequence[int], tol_pct: float) -> "CircuitParams":
        f = [1.0 + lv * tol_pct / 100.0 for lv in levels]
        return CircuitParams(*(getattr(self, n) * k for n, k in zip(PARAM_NAMES, f)))

    def as_dict(self) -> dict:
        return {n: getattr(self, n) for n in PARAM_NAMES}


# the bound exhibited for the +/-5 % example
REFERENCE_BOUND = RationalFunction.from_zpk([-6.0], [-3.4], 0.06)


def circuit_impedance(p: CircuitParams) -> RationalFunction:
    """Driving-point impedance of the example one-port (node equations solved)."""
    R1, R2, L1, L2, C1 = p.R1, p.R2, p.L1, p.L2, p.C1
    num = [-R1 * R2, R1 * (L1 - L2), R1 * R2 * L1 * C1, R1 * L1 * L2 * C1]
    den = [R1 - R2, L1 - L2 + C1 * R1 * R2, L1 * C1 * R2 + L2 * C1 * R1, L1 * L2 * C1]
    return RationalFunction.from_coeffs(num, den)


def minimal_impedance(
    p: CircuitParams,
    cancel_tol: float = DEFAULT_CANCEL_TOL,
    degree: int | None = None,
    ceiling: float = 0.1,
) -> RationalFunction:
    """Impedance with near pole-zero pairs removed.

    Without ``degree`` every pair closer than ``cancel_tol`` goes.  With
    ``degree`` the closest pairs are removed one at a time until that order
    is reached, accepting pairs up to ``max(cancel_tol, ceiling)`` apart; the
    result never drops below ``degree``.
    """
    Z = circuit_impedance(p)
    if degree is None:
        return cancel_near_pairs(Z, cancel_tol)
    limit = max(cancel_tol, ceiling)
    while Z.den.degree > degree and Z.num.degree > 0:
        gap = float(np.min(np.abs(Z.zeros[:, None] - Z.poles[None, :])))
        if gap >= limit:
            raise NumericalError(
                f"closest pole-zero pair is {gap:.3g} apart; cannot reduce to degree {degree}"
            )
        Z = cancel_near_pairs(Z, gap * (1 + 1e-9) + 1e-15)
    return Z


def corner_levels() -> list[tuple[int, ...]]:
    """All 3**5 level tuples in lexicographic order over (-1, 0, +1)."""
    return list(itertools.product((-1, 0, 1), repeat=len(PARAM_NAMES)))


def _workers(workers: int | None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("PORT_SYNTH_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(8, os.cpu_count() or 1)


def _map_ordered(fn: Callable, items: Sequence, workers: int | None):
    n = _workers(workers)
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def _with_corner(levels, exc: Exception) -> Exception:
    try:
        out = type(exc)(f"corner {tuple(levels)}: {exc}")
    except TypeError:
        out = exc
    out.levels = tuple(levels)
    return out


@dataclass(frozen=True)
class CornerRecord:
    index: int
    levels: tuple
    Zpert: RationalFunction
    fraction: CoprimeFraction
    delta: PerturbationDelta
    norm_curve: np.ndarray  # shape (len(grid), 2): omega, |[dN; dD]|


@dataclass(frozen=True)
class SweepResult:
    nominal: CoprimeFraction
    grid: FrequencyGrid
    tol_pct: float
    corners: tuple[CornerRecord, ...]

    @property
    def nominal_index(self) -> int:
        return next(c.index for c in self.corners if not any(c.levels))


def sweep_perturbations(
    nominal: CircuitParams,
    tol_pct: float = 5.0,
    grid: FrequencyGrid | None = None,
    cancel_tol: float = DEFAULT_CANCEL_TOL,
    workers: int | None = None,
) -> SweepResult:
    """Coprime-fraction deltas for all 243 parameter corners."""
    if not (0 <= tol_pct < 100):
        raise ValueError("tol_pct must lie in [0, 100)")
    grid = grid if grid is not None else default_grid()
    nom_Z = minimal_impedance(nominal, cancel_tol)
    nom_frac = coprime_factorization(nom_Z)
    levels = corner_levels()

    def one(item):
        idx, lv = item
        try:
            Z = minimal_impedance(nominal.scaled(lv, tol_pct), cancel_tol, degree=nom_Z.den.degree)
            frac = coprime_factorization(Z, q=nom_frac.q)
            delta = perturbation_delta(nom_frac, frac)
        except Exception as exc:
            raise _with_corner(lv, exc) from exc
        mag = RationalVector([delta.dN, delta.dD]).magnitude(grid.points)
        return CornerRecord(idx, lv, Z, frac, delta, np.column_stack([grid.points, mag]))

    corners = _map_ordered(one, list(enumerate(levels)), workers)
    return SweepResult(nom_frac, grid, tol_pct, tuple(corners))


def envelope(sweep: SweepResult) -> np.ndarray:
    """Pointwise maximum of the corner norm curves."""
    return np.max(np.stack([c.norm_curve[:, 1] for c in sweep.corners]), axis=0)


def dominance_margin(bound: RationalFunction, env: np.ndarray, grid: FrequencyGrid) -> float:
    """``min(|bound(jw)| - env(w))`` over the grid; nonnegative means the bound dominates."""
    return float(np.min(np.abs(bound.freqresp(grid.points)) - env))


def validate_bound(bound: RationalFunction, sweep: SweepResult) -> float:
    """Check a user-supplied bound; returns the dominance margin or raises FitFailed."""
    if not bound.in_S():
        raise FitFailed("bound must be proper and stable")
    m = dominance_margin(bound, envelope(sweep), sweep.grid)
    if m < 0:
        raise FitFailed(f"bound falls below the envelope by {-m:.3g}")
    return m


def fit_bound(
    sweep: SweepResult,
    grid: FrequencyGrid | None = None,
    margin: float = 0.05,
    box: tuple[float, float] = (1e-2, 1e3),
    k_min: float = 1e-6,
) -> RationalFunction:
    """Tightest first-order ``k(s+z)/(s+p)`` lying above ``(1+margin)`` times the envelope.

    For fixed ``z, p`` the smallest admissible ``k`` is explicit, so only the
    corner frequencies are searched: a log-spaced scan of ``box`` followed by
    a Nelder-Mead polish.  The score is the largest log-ratio of bound to
    envelope.
    """
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    grid = grid if grid is not None else sweep.grid
    env = envelope(sweep)
    w = grid.points
    live = env > 0
    lo, hi = np.log(box[0]), np.log(box[1])
    if not np.any(live):
        return RationalFunction.from_zpk([-box[0]], [-box[0]], k_min)
    s = 1j * w[live]
    e = env[live]

    def shape(lz, lp):
        return np.abs((s + np.exp(lz)) / (s + np.exp(lp)))

    def score(x):
        lz, lp = np.clip(x, lo, hi)
        h = shape(lz, lp)
        k = (1.0 + margin) * np.max(e / h)
        return float(np.max(np.log(k * h / e)))

    axis = np.linspace(lo, hi, 41)
    best = min(((score((a, b)), a, b) for a in axis for b in axis), key=lambda t: t[0])
    res = optimize.minimize(
        score, x0=[best[1], best[2]], method="Nelder-Mead",
        options={"xatol": 1e-8, "fatol": 1e-12, "maxiter": 4000},
    )
    x = res.x if res.fun <= best[0] else np.array(best[1:])
    lz, lp = np.clip(x, lo, hi)
    h = shape(lz, lp)
    k = (1.0 + margin) * float(np.max(e / h))
    if not np.isfinite(k) or k <= 0:
        raise FitFailed("no first-order bound dominates the envelope")
    k = max(k, k_min)
    bound = RationalFunction.from_zpk([-np.exp(lz)], [-np.exp(lp)], k)
    if dominance_margin(bound, env, grid) < 0:
        raise FitFailed("fitted bound does not dominate the envelope")
    return bound


def build_T1_T2(bound: RationalFunction, frac: CoprimeFraction):
    """``T1 = bound*[X; Ycof]`` and ``T2 = bound*[D; -N]``."""
    T1 = RationalVector([bound * frac.X, bound * frac.Ycof])
    T2 = RationalVector([bound * frac.D, -(bound * frac.N)])
    return T1, T2


def compensator(frac: CoprimeFraction, Q: RationalFunction, near_tol: float = 1e-4) -> RationalFunction:
    """``Zc = (Ycof + N Q) / (X - D Q)``."""
    num = frac.Ycof + frac.N * Q
    den = frac.X - frac.D * Q
    if den.is_zero():
        raise SingularParametrization("X - D Q vanishes identically")
    Zc = num / den
    scale = max(1.0, float(np.max(np.abs(np.concatenate([Zc.poles, Zc.zeros]))))) if Zc.den.degree else 1.0
    Zc = cancel_near_pairs(Zc, near_tol * scale) if Zc.den.degree and Zc.num.degree else Zc
    if not Zc.is_proper():
        raise SingularParametrization("compensator is improper (X - D Q vanishes at infinity)")
    return Zc


def interconnect(Za: RationalFunction, Zb: RationalFunction) -> RationalFunction:
    """Source-series interconnection ``(Za^-1 + Zb^-1)^-1 = Za Zb / (Za + Zb)``."""
    if Za.is_zero() or Zb.is_zero():
        raise DegenerateSum("interconnected impedances must be nonzero")
    total = Za + Zb
    scale = max(np.max(np.abs(Za.num.coeffs)), np.max(np.abs(Zb.num.coeffs)))
    if total.is_zero() or np.max(np.abs(total.num.coeffs)) <= 1e-10 * scale:
        raise DegenerateSum("Za + Zb vanishes identically")
    return (Za * Zb) / total


@dataclass(frozen=True)
class Verdict:
    levels: tuple
    stable: bool
    poles: np.ndarray


def verify_robust(
    Zc: RationalFunction,
    nominal: CircuitParams,
    tol_pct: float = 5.0,
    cancel_tol: float = DEFAULT_CANCEL_TOL,
    workers: int | None = None,
) -> list[Verdict]:
    """Pole check of ``interconnect(Z~, Zc)`` at every parameter corner."""

    def one(lv):
        try:
            Zt = interconnect(minimal_impedance(nominal.scaled(lv, tol_pct), cancel_tol), Zc)
        except Exception as exc:
            raise _with_corner(lv, exc) from exc
        poles = Zt.poles
        return Verdict(tuple(lv), bool(np.all(poles.real < -STABILITY_MARGIN)), poles)

    return _map_ordered(one, corner_levels(), workers)


@dataclass(frozen=True)
class SynthesisResult:
    bound: RationalFunction
    match: ModelMatchResult
    Zc: RationalFunction
    verdicts: tuple = field(default_factory=tuple)
    sweep: SweepResult | None = None

    @property
    def all_stable(self) -> bool:
        return all(v.stable for v in self.verdicts)

    @property
    def certified(self) -> bool:
        """Small-gain certificate ``||T1 - T2 Q|| < 1``."""
        return self.match.achieved_norm < 1.0


def synthesize(
    nominal: CircuitParams,
    tol_pct: float = 5.0,
    grid: FrequencyGrid | None = None,
    bound: RationalFunction | None = None,
    beta_tol: float = 0.05,
    cancel_tol: float = DEFAULT_CANCEL_TOL,
    margin: float = 0.05,
    workers: int | None = None,
) -> SynthesisResult:
    """Run the whole design: sweep, bound (fitted unless given), match, compensator, verify."""
    grid = grid if grid is not None else default_grid()
    sweep = sweep_perturbations(nominal, tol_pct, grid, cancel_tol, workers)
    if bound is None:
        bound = fit_bound(sweep, grid, margin)
    else:
        validate_bound(bound, sweep)
    T1, T2 = build_T1_T2(bound, sweep.nominal)
    match = model_match(T1, T2, beta_tol, grid)
    Zc = compensator(sweep.nominal, match.Q)
    verdicts = verify_robust(Zc, nominal, tol_pct, cancel_tol, workers)
    return SynthesisResult(bound, match, Zc, tuple(verdicts), sweep)
