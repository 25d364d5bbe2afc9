"""Coprime fractions over the ring of stable proper rational functions.

In the one-port case left and right fractions coincide, so a single
quadruple ``(N, D, X, Ycof)`` with ``X*N + Ycof*D = 1`` plays the role of
both halves of the doubly coprime identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import MismatchedQ, NotCoprime, NotProper, QCollision
from .poly_rational import Polynomial, RationalFunction

__all__ = [
    "CoprimeFraction",
    "PerturbationDelta",
    "stable_denominator",
    "coprime_fractions",
    "bezout_solve",
    "coprime_factorization",
    "perturbation_delta",
]


@dataclass(frozen=True)
class CoprimeFraction:
    N: RationalFunction
    D: RationalFunction
    X: RationalFunction
    Ycof: RationalFunction
    q: Polynomial

    def plant(self) -> RationalFunction:
        return self.N / self.D

    def bezout_residual(self, omega) -> float:
        vals = self.X.freqresp(omega) * self.N.freqresp(omega) + self.Ycof.freqresp(
            omega
        ) * self.D.freqresp(omega)
        return float(np.max(np.abs(vals - 1.0)))


@dataclass(frozen=True)
class PerturbationDelta:
    dN: RationalFunction
    dD: RationalFunction


def stable_denominator(m: int, shift: float = 0.0) -> Polynomial:
    """``prod_{k=1..m} (s + k + shift)``; the constant 1 when ``m == 0``."""
    return Polynomial.from_roots([-(k + shift) for k in range(1, m + 1)])


def coprime_fractions(plant: RationalFunction, q: Polynomial | None = None, shift: float = 0.0):
    """Split ``plant = N / D`` with ``N = num/q`` and ``D = den/q``.

    Returns ``(N, D, q)``.  ``q`` defaults to :func:`stable_denominator` of the
    plant's degree; a caller-supplied ``q`` must have that same degree.

    Raises
    ------
    NotProper
        Numerator degree above denominator degree.
    QCollision
        A plant pole within 1e-6 of a root of ``q``.
    MismatchedQ
        A supplied ``q`` whose degree differs from the plant's.
    """
    if not plant.is_proper():
        raise NotProper("plant must be proper")
    m = plant.den.degree
    if q is None:
        q = stable_denominator(m, shift)
    if q.degree != m:
        raise MismatchedQ(f"stable denominator has degree {q.degree}, plant needs {m}")
    q_roots = q.roots() if q.degree else np.zeros(0, dtype=complex)
    if np.any(q_roots.real >= 0):
        raise ValueError("stable denominator must have all roots in Re s < 0")
    for p in plant.poles:
        if np.any(np.abs(q_roots - p) < 1e-6):
            raise QCollision(f"plant pole {p} coincides with a root of q")
    N = RationalFunction(plant.num, q, poles=q_roots)
    D = RationalFunction(plant.den, q, poles=q_roots)
    return N, D, q


def _numerator_over(f: RationalFunction, q: Polynomial) -> Polynomial:
    """Polynomial ``f * q`` (``f`` must have all its poles among the roots of q)."""
    prod = f * RationalFunction(q, Polynomial([1.0]), poles=[])
    if prod.den.degree != 0:
        raise ValueError("function does not live over the stable denominator q")
    return prod.num


def bezout_solve(N: RationalFunction, D: RationalFunction, q: Polynomial):
    """Bezout cofactors ``(X, Ycof)`` with ``X*N + Ycof*D = 1``.

    With ``n = N*q`` and ``d = D*q`` (``d`` of degree ``m = deg q``), the
    Sylvester system ``x*n + y*d = q**2`` with ``deg x <= m - 1`` and
    ``deg y <= m`` has a unique solution when ``n`` and ``d`` are coprime;
    then ``X = x/q`` (strictly proper) and ``Ycof = y/q``.
    """
    m = q.degree
    n = _numerator_over(N, q)
    d = _numerator_over(D, q)
    if m == 0:
        if n.is_zero():
            raise NotCoprime("N is zero")
        return RationalFunction.constant(1.0 / n.coeffs[0]), RationalFunction.constant(0.0)
    if d.degree != m:
        raise NotCoprime("D must be biproper over q (deg d = deg q)")
    size = 2 * m + 1
    S = np.zeros((size, size))
    nc = np.zeros(m + 1)
    nc[: len(n.coeffs)] = n.coeffs
    for i in range(m):
        S[i : i + m + 1, i] = nc
    for i in range(m + 1):
        S[i : i + m + 1, m + i] = d.coeffs
    rhs = (q * q).coeffs
    sv = np.linalg.svd(S, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise NotCoprime("Sylvester matrix is singular: N and D share a zero")
    sol = np.linalg.solve(S, rhs)
    q_roots = q.roots()
    X = RationalFunction(Polynomial(sol[:m]), q, poles=q_roots)
    Y = RationalFunction(Polynomial(sol[m:]), q, poles=q_roots)
    return X, Y


def coprime_factorization(plant: RationalFunction, q: Polynomial | None = None, shift: float = 0.0) -> CoprimeFraction:
    N, D, q = coprime_fractions(plant, q=q, shift=shift)
    X, Y = bezout_solve(N, D, q)
    return CoprimeFraction(N, D, X, Y, q)


def perturbation_delta(nom: CoprimeFraction, pert: CoprimeFraction) -> PerturbationDelta:
    """Differences ``pert.N - nom.N`` and ``pert.D - nom.D``."""
    if nom.q.degree != pert.q.degree or not np.allclose(
        nom.q.coeffs, pert.q.coeffs, rtol=1e-12, atol=0.0
    ):
        raise MismatchedQ("fractions were built over different stable denominators")
    return PerturbationDelta(pert.N - nom.N, pert.D - nom.D)
