"""State-space realizations, Lyapunov gramians and Hankel-operator data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AxisPole,
    NotAntistable,
    NumericalError,
    NotStrictlyProper,
    RepeatedPole,
    SingularSylvester,
)
from .poly_rational import Polynomial, RationalFunction, _split_roots

__all__ = [
    "StateSpaceRealization",
    "HankelData",
    "realize_strictly_proper",
    "ss_to_rational",
    "solve_lyapunov",
    "hankel_data",
    "hankel_norm",
    "stable_antistable_split",
]


@dataclass(frozen=True)
class StateSpaceRealization:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: float = 0.0

    @property
    def order(self) -> int:
        return self.A.shape[0]

    def transfer(self, s: complex) -> complex:
        n = self.order
        x = np.linalg.solve(s * np.eye(n) - self.A, self.B[:, 0].astype(complex))
        return complex(self.C[0] @ x) + self.D

    def is_minimal(self, tol: float = 1e-8) -> bool:
        n = self.order
        ctrb = np.hstack([np.linalg.matrix_power(self.A, k) @ self.B for k in range(n)])
        obsv = np.vstack([self.C @ np.linalg.matrix_power(self.A, k) for k in range(n)])
        return _rank(ctrb, tol) == n and _rank(obsv, tol) == n


def _rank(M, tol):
    sv = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(sv > tol * max(1.0, sv[0])))


def realize_strictly_proper(r: RationalFunction, form: str = "cascade") -> StateSpaceRealization:
    """Minimal realization ``C (sI - A)^{-1} B`` of a strictly proper function.

    ``form="cascade"`` chains first-order sections, one per pole: poles are
    taken in ascending order, the first ``m`` are paired with the ``m`` zeros
    (also ascending) as balanced all-real sections ``(s - z)/(s - p)`` placed
    on the output side, the remaining poles as plain lags ``1/(s - p)`` on the
    input side.  The gain sits in ``C``.  Functions with complex poles or
    zeros fall back to the controllable canonical form (``form="controllable"``).
    """
    if r.is_zero():
        raise NotStrictlyProper("zero function has no state-space realization")
    if not r.is_strictly_proper():
        raise NotStrictlyProper("numerator degree must be below denominator degree")
    poles = r.poles
    zeros = r.zeros
    real_only = not (np.any(poles.imag != 0) or np.any(zeros.imag != 0))
    if form == "cascade" and real_only:
        return _cascade(np.sort(poles.real), np.sort(zeros.real), r.gain)
    return _controllable(r)


def _cascade(p, z, k) -> StateSpaceRealization:
    n, m = len(p), len(z)
    a = p.copy()
    b = np.ones(n)
    c = np.ones(n)
    d = np.zeros(n)
    for i in range(m):
        gap = p[i] - z[i]
        b[i] = np.sqrt(abs(gap))
        c[i] = np.copysign(b[i], gap)
        d[i] = 1.0
    A = np.diag(a)
    B = np.zeros((n, 1))
    C = np.zeros((1, n))
    # section i is fed by y_{i+1} = sum_{j>i} (prod_{i<l<j} d_l) c_j x_j + (prod_{l>i} d_l) u
    for i in range(n):
        through = 1.0
        for j in range(i + 1, n):
            A[i, j] = b[i] * through * c[j]
            through *= d[j]
        B[i, 0] = b[i] * through
    through = 1.0
    for j in range(n):
        C[0, j] = k * through * c[j]
        through *= d[j]
    return StateSpaceRealization(A, B, C, 0.0)


def _controllable(r: RationalFunction) -> StateSpaceRealization:
    den = r.den.coeffs
    n = len(den) - 1
    num = np.zeros(n)
    num[: len(r.num.coeffs)] = r.num.coeffs
    A = np.zeros((n, n))
    A[:-1, 1:] = np.eye(n - 1)
    A[-1, :] = -den[:-1]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = num.reshape(1, n)
    return StateSpaceRealization(A, B, C, 0.0)


def ss_to_rational(A, b, c, poles=None) -> RationalFunction:
    """Transfer function ``c (sI - A)^{-1} b`` of a single-input single-output triple.

    The numerator is recovered by sampling on a circle and inverting the DFT,
    which is exact for the ``n - 1`` degree numerator.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float).reshape(-1)
    c = np.asarray(c, dtype=float).reshape(-1)
    n = A.shape[0]
    if poles is None:
        poles = np.linalg.eigvals(A)
    poles = np.asarray(poles, dtype=complex)
    den = Polynomial.from_roots(poles)
    rho = max(1.0, float(np.max(np.abs(poles)))) * 2.0
    nodes = rho * np.exp(2j * np.pi * np.arange(n) / n)
    vals = np.empty(n, dtype=complex)
    for k, s in enumerate(nodes):
        vals[k] = (c @ np.linalg.solve(s * np.eye(n) - A, b.astype(complex))) * den(s)
    coef = np.fft.fft(vals) / n
    coef = (coef * rho ** (-np.arange(n))).real
    return RationalFunction(Polynomial(coef), den, poles=poles)


def solve_lyapunov(A, Q) -> np.ndarray:
    """Solve ``A P + P A^T = Q`` through the Kronecker form on ``n^2`` unknowns.

    Raises
    ------
    SingularSylvester
        If ``A`` and ``-A`` share an eigenvalue.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    n = A.shape[0]
    eig = np.linalg.eigvals(A)
    sums = np.abs(eig[:, None] + eig[None, :])
    if np.min(sums) < 1e-10 * max(1.0, float(np.max(np.abs(eig)))):
        raise SingularSylvester("A and -A share an eigenvalue (imaginary-axis mode)")
    eye = np.eye(n)
    # row-major vec: vec(A P) = (A kron I) vec(P), vec(P A^T) = (I kron A) vec(P)
    K = np.kron(A, eye) + np.kron(eye, A)
    P = np.linalg.solve(K, Q.reshape(-1)).reshape(n, n)
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class HankelData:
    Lc: np.ndarray
    Lo: np.ndarray
    lambda_sq: float
    w: np.ndarray
    v: np.ndarray
    realization: StateSpaceRealization

    @property
    def hankel_norm(self) -> float:
        return float(np.sqrt(self.lambda_sq))


def hankel_data(r1: RationalFunction, form: str = "cascade") -> HankelData:
    """Gramians and the top Schmidt pair of the Hankel operator of an antistable ``r1``."""
    if r1.is_zero() or not np.all(r1.poles.real > 0):
        raise NotAntistable("function must be nonzero with all poles in Re s > 0")
    ss = realize_strictly_proper(r1, form=form)
    A, B, C = ss.A, ss.B, ss.C
    Lc = solve_lyapunov(A, B @ B.T)
    Lo = solve_lyapunov(A.T, C.T @ C)
    vals, vecs = np.linalg.eig(Lc @ Lo)
    k = int(np.argmax(vals.real))
    lam_sq = float(max(vals[k].real, 0.0))
    w = vecs[:, k].real
    w = w / np.linalg.norm(w)
    first = np.flatnonzero(np.abs(w) > 1e-12)
    if first.size and w[first[0]] < 0:
        w = -w
    lam = np.sqrt(lam_sq)
    v = Lo @ w / lam if lam > 0 else np.zeros_like(w)
    return HankelData(Lc, Lo, lam_sq, w, v, ss)


def stable_antistable_split(r: RationalFunction) -> tuple[RationalFunction, RationalFunction]:
    """Additive split ``r = r1 + r2``.

    ``r1`` is strictly proper with every pole in Re s > 0 and ``r2`` keeps the
    stable poles and the direct term.

    Raises
    ------
    AxisPole
        A pole with ``|Re p| < 1e-6``.
    RepeatedPole
        Two poles closer than 1e-6.
    """
    p = r.poles
    if np.any(np.abs(p.real) < 1e-6):
        raise AxisPole("pole on (or too close to) the imaginary axis")
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if abs(p[i] - p[j]) < 1e-6:
                raise RepeatedPole(f"repeated pole near {p[i]}")
    anti = p[p.real > 0]
    if anti.size == 0:
        return RationalFunction.constant(0.0), r
    stab = p[p.real < 0]
    # residues at each antistable pole, combined into real first/second order terms
    r1 = RationalFunction.constant(0.0)
    real, upper = _split_roots(anti)
    for a in real:
        others = p[np.abs(p - a) > 0]
        res = r.num(a) / np.prod(a - others)
        r1 = r1 + RationalFunction(Polynomial([float(np.real(res))]), Polynomial([-a, 1.0]), poles=[a])
    for z in upper:
        others = p[np.abs(p - z) > 0]
        res = complex(r.num(z) / np.prod(z - others))
        # res/(s-z) + conj(res)/(s-conj z)
        num = Polynomial([-2.0 * (res * z.conjugate()).real, 2.0 * res.real])
        r1 = r1 + RationalFunction(num, Polynomial([abs(z) ** 2, -2.0 * z.real, 1.0]), poles=[z, z.conjugate()])
    # r2 = (num - n1 * den_stab) / (den_anti * den_stab); the bracket is divisible by den_anti
    den_anti = Polynomial.from_roots(anti)
    den_stab = Polynomial.from_roots(stab)
    n1 = Polynomial(r1.num.coeffs) if r1.den.degree == den_anti.degree else None
    if n1 is None:
        # r1 lost a pole to an exact zero residue; rebuild over the full antistable denominator
        n1 = (r1 * RationalFunction(den_anti, 1.0, poles=[])).num
    top = r.num - n1 * den_stab
    quot, rem = top.divmod(den_anti)
    ref = max(float(np.max(np.abs(r.num.coeffs))), float(np.max(np.abs(top.coeffs))))
    if np.max(np.abs(rem.coeffs)) > 1e-6 * ref:
        raise NumericalError("antistable part does not separate cleanly")
    scale = float(np.max(np.abs(r.num.coeffs)))
    qc = np.where(np.abs(quot.coeffs) <= 1e-13 * scale, 0.0, quot.coeffs)
    r2 = RationalFunction(Polynomial(qc), den_stab, poles=stab)
    return r1, r2


def remove_poles(r: RationalFunction, targets, rtol: float = 1e-6) -> RationalFunction:
    """Strip poles that cancel in exact arithmetic but survive rounding.

    Each target must appear among the poles of ``r`` with a numerator residual
    below ``rtol`` relative; the matching factor is then divided out.
    """
    targets = np.atleast_1d(np.asarray(targets, dtype=complex))
    poles = list(r.poles)
    num = r.num
    real, upper = _split_roots(targets)
    for a in real:
        idx = _closest(poles, a)
        if idx is None:
            continue
        if abs(num(a)) > rtol * num.scale_at(a):
            raise NumericalError(f"pole {a} does not cancel (residual too large)")
        num, _ = num.divmod(Polynomial([-a, 1.0]))
        poles.pop(idx)
    for z in upper:
        i1 = _closest(poles, z)
        if i1 is None:
            continue
        if abs(num(z)) > rtol * num.scale_at(z):
            raise NumericalError(f"pole {z} does not cancel (residual too large)")
        num, _ = num.divmod(Polynomial([abs(z) ** 2, -2.0 * z.real, 1.0]))
        poles.pop(i1)
        i2 = _closest(poles, z.conjugate())
        poles.pop(i2)
    return RationalFunction(num, Polynomial.from_roots(poles), poles=poles)


def _closest(poles, target, rtol=1e-9):
    best, arg = None, None
    for i, p in enumerate(poles):
        d = abs(p - target)
        if d <= rtol * max(1.0, abs(target)) and (best is None or d < best):
            best, arg = d, i
    return arg


def hankel_norm(r: RationalFunction) -> float:
    """Hankel-operator norm of ``r``: zero when ``r`` has no antistable part."""
    r1, _ = stable_antistable_split(r)
    if r1.is_zero():
        return 0.0
    return hankel_data(r1).hankel_norm
