"""Real-coefficient polynomials and rational functions in the Laplace variable.

Coefficients are stored in ascending degree.  A :class:`RationalFunction`
keeps a monic denominator together with its pole list; the pole list is
carried through products and sums so that common factors produced by the
algebra can be cancelled by evaluating the numerator at known poles instead
of re-rooting high-degree polynomials.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    ConstantPolynomial,
    PoleHit,
    PoleOnAxis,
    ZeroPolynomial,
)

# relative size below which a leading coefficient produced by a sum is noise
_LEAD_RTOL = 1e-12
# relative numerator residual at a pole below which the pole is cancelled
_CANCEL_RTOL = 1e-9
# imaginary parts below this (relative) are treated as real roots
_REAL_RTOL = 1e-10

__all__ = [
    "Polynomial",
    "RationalFunction",
    "RationalVector",
    "FrequencyGrid",
    "default_grid",
    "roots",
    "evaluate",
    "cancel_near_pairs",
    "linf_norm",
    "paraconjugate",
    "polynomial_from_roots",
]


def _as_real(values, what="coefficients"):
    arr = np.atleast_1d(np.asarray(values))
    if np.iscomplexobj(arr):
        scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
        if np.max(np.abs(arr.imag), initial=0.0) > 1e-8 * scale:
            raise ValueError(f"{what} must be real")
        arr = arr.real
    return arr.astype(float)


class Polynomial:
    """Polynomial ``sum(c[k] * s**k)`` with real coefficients.

    The zero polynomial is the single coefficient ``0``; otherwise the
    leading coefficient is nonzero.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: Iterable[float] | float):
        c = _as_real(coeffs)
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1].copy() if nz.size else np.zeros(1)
        c.setflags(write=False)
        self.coeffs = c

    @classmethod
    def from_roots(cls, rts: Sequence[complex], gain: float = 1.0) -> "Polynomial":
        return cls(_poly_from_roots(rts) * gain)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def lead(self) -> float:
        return float(self.coeffs[-1])

    def is_zero(self) -> bool:
        return self.degree == 0 and self.coeffs[0] == 0.0

    def __call__(self, s):
        s = np.asarray(s)
        acc = np.zeros_like(s, dtype=complex if np.iscomplexobj(s) else float)
        for c in self.coeffs[::-1]:
            acc = acc * s + c
        return acc if acc.ndim else acc.item()

    def scale_at(self, s) -> float:
        """Sum of ``|c_k| |s|^k``: the natural size of ``p(s)`` for residual tests."""
        r = abs(s)
        return float(sum(abs(c) * r**k for k, c in enumerate(self.coeffs)))

    def __add__(self, other):
        other = _to_poly(other)
        n = max(len(self.coeffs), len(other.coeffs))
        a = np.zeros(n)
        a[: len(self.coeffs)] += self.coeffs
        a[: len(other.coeffs)] += other.coeffs
        ref = max(np.max(np.abs(self.coeffs)), np.max(np.abs(other.coeffs)))
        return Polynomial(_trim_relative(a, ref))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        return self + (-_to_poly(other))

    def __rsub__(self, other):
        return _to_poly(other) - self

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            return Polynomial(np.convolve(self.coeffs, other.coeffs))
        return Polynomial(self.coeffs * float(other))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return np.array_equal(self.coeffs, other.coeffs)

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"

    def paraconjugate(self) -> "Polynomial":
        """Return ``p(-s)``."""
        return Polynomial(self.coeffs * (-1.0) ** np.arange(len(self.coeffs)))

    def monic(self) -> "Polynomial":
        if self.is_zero():
            raise ZeroPolynomial("zero polynomial has no monic form")
        return Polynomial(self.coeffs / self.lead)

    def divmod(self, other: "Polynomial"):
        q, r = np.polynomial.polynomial.polydiv(self.coeffs, other.coeffs)
        return Polynomial(q), Polynomial(r)

    def roots(self) -> np.ndarray:
        return roots(self)


def _to_poly(x) -> Polynomial:
    return x if isinstance(x, Polynomial) else Polynomial([float(x)])


def _trim_relative(a: np.ndarray, ref: float) -> np.ndarray:
    tol = _LEAD_RTOL * ref
    n = len(a)
    while n > 1 and abs(a[n - 1]) <= tol:
        n -= 1
    return a[:n]


def _split_roots(rts) -> tuple[list[float], list[complex]]:
    """Real roots and one representative (Im > 0) of each conjugate pair."""
    real, upper = [], []
    for z in np.atleast_1d(np.asarray(rts, dtype=complex)):
        if abs(z.imag) <= _REAL_RTOL * max(1.0, abs(z)):
            real.append(float(z.real))
        elif z.imag > 0:
            upper.append(complex(z))
    return real, upper


def _poly_from_roots(rts) -> np.ndarray:
    rts = np.atleast_1d(np.asarray(rts, dtype=complex))
    real, upper = _split_roots(rts)
    if len(real) + 2 * len(upper) != len(rts):
        raise ValueError("complex roots must come in conjugate pairs")
    c = np.ones(1)
    for r in real:
        c = np.convolve(c, [-r, 1.0])
    for z in upper:
        c = np.convolve(c, [abs(z) ** 2, -2.0 * z.real, 1.0])
    return c


def polynomial_from_roots(rts: Sequence[complex], gain: float = 1.0) -> Polynomial:
    return Polynomial.from_roots(rts, gain)


def roots(p: Polynomial) -> np.ndarray:
    """Roots of ``p`` as eigenvalues of its companion matrix.

    Raises
    ------
    ZeroPolynomial
        If ``p`` is identically zero.
    ConstantPolynomial
        If ``p`` is a nonzero constant.
    """
    if p.is_zero():
        raise ZeroPolynomial("roots of the zero polynomial are undefined")
    n = p.degree
    if n == 0:
        raise ConstantPolynomial("a constant polynomial has no roots")
    c = p.coeffs / p.lead
    if n == 1:
        return np.array([complex(-c[0])])
    comp = np.zeros((n, n))
    comp[1:, :-1] = np.eye(n - 1)
    comp[:, -1] = -c[:-1]
    r = np.linalg.eigvals(comp).astype(complex)
    # snap numerically real roots and enforce exact conjugate symmetry
    out = []
    for z in r:
        if abs(z.imag) <= _REAL_RTOL * max(1.0, abs(z)):
            z = complex(z.real, 0.0)
        out.append(z)
    return _sort_roots(np.array(out))


def _sort_roots(r) -> np.ndarray:
    r = np.asarray(r, dtype=complex)
    if r.size == 0:
        return r
    order = np.lexsort((r.imag, r.real))
    return r[order]


def _pair_match(a: Sequence[complex], b: Sequence[complex], rtol: float):
    """Match entries of ``b`` to unused entries of ``a`` within ``rtol``.

    Returns indices of ``b`` that found no partner, and of ``a`` likewise.
    """
    used = [False] * len(a)
    unmatched_b = []
    for j, pb in enumerate(b):
        hit = -1
        for i, pa in enumerate(a):
            if not used[i] and abs(pa - pb) <= rtol * max(1.0, abs(pb)):
                hit = i
                break
        if hit < 0:
            unmatched_b.append(j)
        else:
            used[hit] = True
    unmatched_a = [i for i, u in enumerate(used) if not u]
    return unmatched_b, unmatched_a


class RationalFunction:
    """Ratio ``num(s) / den(s)`` with a monic denominator.

    Parameters
    ----------
    num, den : Polynomial or coefficient sequence (ascending degree)
    poles : optional sequence of complex
        Known roots of ``den``.  When supplied they are trusted and carried
        through the algebra; otherwise they are computed once.
    cancel : bool
        Remove poles at which the numerator vanishes (up to rounding).
    """

    __slots__ = ("num", "den", "_poles", "_zeros")

    def __init__(self, num, den=1.0, *, poles=None, cancel: bool = True):
        num = num if isinstance(num, Polynomial) else Polynomial(num)
        den = den if isinstance(den, Polynomial) else Polynomial(den)
        if den.is_zero():
            raise ZeroDivisionError("denominator is identically zero")
        lead = den.lead
        num = Polynomial(num.coeffs / lead)
        den = Polynomial(den.coeffs / lead)
        if poles is None:
            poles = roots(den) if den.degree > 0 else np.zeros(0, dtype=complex)
        poles = np.asarray(poles, dtype=complex).reshape(-1)
        if len(poles) != den.degree:
            raise ValueError("pole list does not match denominator degree")
        if num.is_zero():
            den = Polynomial([1.0])
            poles = np.zeros(0, dtype=complex)
        elif cancel and len(poles):
            num, den, poles = _cancel_exact(num, den, poles)
        self.num = num
        self.den = den
        self._poles = _sort_roots(poles)
        self._zeros = None

    # construction helpers
    @classmethod
    def constant(cls, c: float) -> "RationalFunction":
        return cls(Polynomial([float(c)]), Polynomial([1.0]), poles=[])

    @classmethod
    def from_zpk(cls, zeros, poles, gain: float) -> "RationalFunction":
        num = Polynomial.from_roots(zeros, gain)
        den = Polynomial.from_roots(poles)
        return cls(num, den, poles=poles)

    @classmethod
    def from_coeffs(cls, num, den) -> "RationalFunction":
        return cls(Polynomial(num), Polynomial(den))

    @classmethod
    def _raw(cls, num: Polynomial, den: Polynomial, poles) -> "RationalFunction":
        obj = cls.__new__(cls)
        obj.num = num
        obj.den = den
        obj._poles = _sort_roots(poles)
        obj._zeros = None
        return obj

    # structure
    @property
    def poles(self) -> np.ndarray:
        return self._poles.copy()

    @property
    def zeros(self) -> np.ndarray:
        if self._zeros is None:
            self._zeros = (
                roots(self.num) if self.num.degree > 0 else np.zeros(0, dtype=complex)
            )
        return self._zeros.copy()

    @property
    def gain(self) -> float:
        """Leading numerator coefficient (the zpk gain)."""
        return self.num.lead

    @property
    def relative_degree(self) -> int:
        return self.den.degree - self.num.degree

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def is_proper(self) -> bool:
        return self.is_zero() or self.relative_degree >= 0

    def is_strictly_proper(self) -> bool:
        return self.is_zero() or self.relative_degree > 0

    def is_stable(self, margin: float = 1e-9) -> bool:
        return bool(np.all(self._poles.real < -margin))

    def in_S(self, margin: float = 1e-9) -> bool:
        """Member of the ring of proper rational functions with open-LHP poles."""
        return self.is_proper() and self.is_stable(margin)

    def value_at_infinity(self) -> float:
        if not self.is_proper():
            raise ValueError("improper function is unbounded at infinity")
        if self.is_zero() or self.relative_degree > 0:
            return 0.0
        return self.num.lead

    # evaluation
    def __call__(self, s):
        return evaluate(self, s)

    def freqresp(self, omega) -> np.ndarray:
        s = 1j * np.asarray(omega, dtype=float)
        return self.num(s) / self.den(s)

    # algebra
    def __neg__(self):
        return RationalFunction._raw(-self.num, self.den, self._poles)

    def __add__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(float(other))
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        extra_b, extra_a = _pair_match(self._poles, other._poles, 1e-12)
        pb = other._poles[extra_b]
        pa = self._poles[extra_a]
        fb = Polynomial.from_roots(pb)
        fa = Polynomial.from_roots(pa)
        num = self.num * fb + other.num * fa
        den = self.den * fb
        return RationalFunction(num, den, poles=np.concatenate([self._poles, pb]))

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, RationalFunction):
            other = RationalFunction.constant(float(other))
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, RationalFunction):
            c = float(other)
            if c == 0.0:
                return RationalFunction.constant(0.0)
            return RationalFunction._raw(self.num * c, self.den, self._poles)
        if self.is_zero() or other.is_zero():
            return RationalFunction.constant(0.0)
        return RationalFunction(
            self.num * other.num,
            self.den * other.den,
            poles=np.concatenate([self._poles, other._poles]),
        )

    __rmul__ = __mul__

    def inv(self) -> "RationalFunction":
        if self.is_zero():
            raise ZeroDivisionError("cannot invert the zero function")
        z = self.zeros
        return RationalFunction(self.den, self.num, poles=z)

    def __truediv__(self, other):
        if not isinstance(other, RationalFunction):
            return self * (1.0 / float(other))
        return self * other.inv()

    def __rtruediv__(self, other):
        return self.inv() * float(other)

    def paraconjugate(self) -> "RationalFunction":
        """Return ``r(-s)``; on the imaginary axis this is the complex conjugate."""
        return paraconjugate(self)

    def __repr__(self):
        return f"RationalFunction({format_zpk(self)})"


def format_zpk(r: RationalFunction, digits: int = 5) -> str:
    """Human readable factored form, e.g. ``-1.07(s+3.455)(s+1)/((s+1.231)(s+3.387))``."""

    def factors(rts):
        real, upper = _split_roots(rts)
        out = []
        for x in real:
            out.append("s" if x == 0 else f"(s{-x:+.{digits}g})")
        for z in upper:
            out.append(f"(s^2{-2 * z.real:+.{digits}g}s{abs(z) ** 2:+.{digits}g})")
        return "".join(out)

    if r.is_zero():
        return "0"
    num = factors(r.zeros) or ""
    den = factors(r.poles)
    head = f"{r.gain:.{digits}g}{num}"
    return head if not den else f"{head}/({den})"


def _cancel_exact(num: Polynomial, den: Polynomial, poles: np.ndarray):
    """Remove poles at which ``num`` vanishes to rounding accuracy."""
    real, upper = _split_roots(poles)
    kept_real, kept_upper = [], []
    removed = False
    for p in real:
        if num.degree >= 1 and abs(num(p)) <= _CANCEL_RTOL * num.scale_at(p):
            num, _ = num.divmod(Polynomial([-p, 1.0]))
            removed = True
        else:
            kept_real.append(p)
    for z in upper:
        if num.degree >= 2 and abs(num(z)) <= _CANCEL_RTOL * num.scale_at(z):
            num, _ = num.divmod(Polynomial([abs(z) ** 2, -2.0 * z.real, 1.0]))
            removed = True
        else:
            kept_upper.append(z)
    if not removed:
        return num, den, poles
    kept = np.array(
        kept_real + [c for z in kept_upper for c in (z, z.conjugate())], dtype=complex
    )
    return num, Polynomial.from_roots(kept), kept


def evaluate(r: RationalFunction, s):
    """Evaluate ``r`` at complex ``s`` by Horner recurrence.

    Raises
    ------
    PoleHit
        If the denominator magnitude at ``s`` is below 1e-300.
    """
    d = r.den(s)
    if np.any(np.abs(d) < 1e-300):
        raise PoleHit(f"evaluation at a pole (s={s})")
    return r.num(s) / d


def paraconjugate(r: RationalFunction) -> RationalFunction:
    return RationalFunction(
        r.num.paraconjugate(), r.den.paraconjugate(), poles=-r.poles, cancel=False
    )


def cancel_near_pairs(r: RationalFunction, tol: float, match_at: complex | None = None) -> RationalFunction:
    """Remove zero/pole pairs closer than ``tol`` (closest pair first).

    By default the zpk gain is kept, so the result equals ``r`` with the
    near-unity factors ``(s - z)/(s - p)`` dropped.  With ``match_at`` the
    gain is rescaled so that ``|result(match_at)| == |r(match_at)|``.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if r.is_zero() or r.num.degree == 0 or r.den.degree == 0:
        return r
    zs = list(r.zeros)
    ps = list(r.poles)
    pairs = sorted(
        (abs(z - p), i, j) for i, z in enumerate(zs) for j, p in enumerate(ps)
    )
    dz, dp = set(), set()
    for dist, i, j in pairs:
        if dist >= tol:
            break
        if i in dz or j in dp:
            continue
        dz.add(i)
        dp.add(j)
    if not dz:
        return r
    keep_z = [z for i, z in enumerate(zs) if i not in dz]
    keep_p = [p for j, p in enumerate(ps) if j not in dp]
    out = RationalFunction.from_zpk(keep_z, keep_p, r.gain)
    if match_at is not None:
        out = out * (abs(evaluate(r, match_at)) / abs(evaluate(out, match_at)))
    return out


@dataclass(frozen=True)
class FrequencyGrid:
    """Strictly increasing angular frequencies (rad/s), all nonnegative."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float).reshape(-1)
        if pts.size == 0:
            raise ValueError("frequency grid is empty")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("frequency grid must be strictly increasing")
        if pts[0] < 0:
            raise ValueError("frequencies must be nonnegative")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    def __iter__(self):
        return iter(self.points)

    @classmethod
    def make(
        cls,
        min_omega: float = 1e-2,
        max_omega: float = 1e2,
        points: int = 400,
        spacing: str = "log",
        include_dc: bool = False,
    ) -> "FrequencyGrid":
        if spacing == "log":
            pts = np.logspace(np.log10(min_omega), np.log10(max_omega), points)
        elif spacing == "linear":
            pts = np.linspace(min_omega, max_omega, points)
        else:
            raise ValueError(f"unknown spacing {spacing!r}")
        if include_dc and pts[0] > 0:
            pts = np.concatenate([[0.0], pts])
        return cls(pts)

    def refined(self, factor: int = 2) -> "FrequencyGrid":
        """Superset grid with ``factor - 1`` extra points inside each interval."""
        p = self.points
        extra = [
            p[:-1] + (p[1:] - p[:-1]) * k / factor for k in range(1, factor)
        ]
        return FrequencyGrid(np.unique(np.concatenate([p, *extra])))


def default_grid() -> FrequencyGrid:
    return FrequencyGrid.make()


class RationalVector:
    """Column of rational functions (2x1 stacks throughout the pipeline)."""

    __slots__ = ("entries",)

    def __init__(self, entries: Sequence[RationalFunction]):
        entries = tuple(entries)
        if not entries:
            raise ValueError("empty rational vector")
        self.entries = entries

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def __getitem__(self, k):
        return self.entries[k]

    def __add__(self, other: "RationalVector"):
        return RationalVector(a + b for a, b in zip(self, other, strict=True))

    def __sub__(self, other: "RationalVector"):
        return RationalVector(a - b for a, b in zip(self, other, strict=True))

    def __mul__(self, r):
        return RationalVector(e * r for e in self)

    __rmul__ = __mul__

    def paraconjugate(self) -> "RationalVector":
        return RationalVector(e.paraconjugate() for e in self)

    def para_inner(self, other: "RationalVector") -> RationalFunction:
        """``sum_k self_k(-s) * other_k(s)``: the row ``self*`` times ``other``."""
        acc = RationalFunction.constant(0.0)
        for a, b in zip(self, other, strict=True):
            acc = acc + a.paraconjugate() * b
        return acc

    def freqresp(self, omega) -> np.ndarray:
        return np.array([e.freqresp(omega) for e in self])

    def magnitude(self, omega) -> np.ndarray:
        """Euclidean norm of the column at each frequency."""
        return np.sqrt(np.sum(np.abs(self.freqresp(omega)) ** 2, axis=0))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self)

    def __repr__(self):
        return "RationalVector([" + ", ".join(format_zpk(e) for e in self) + "])"


def _check_axis_poles(fns: Sequence[RationalFunction], grid: FrequencyGrid):
    for f in fns:
        for p in f.poles:
            if abs(p.real) < 1e-9:
                if np.min(np.abs(grid.points - abs(p.imag))) < 1e-6:
                    raise PoleOnAxis(f"pole {p} lies on the imaginary axis at a grid point")


def linf_norm(v, grid: FrequencyGrid | None = None) -> tuple[float, float]:
    """Grid estimate of the H-infinity / L-infinity norm.

    ``v`` may be a single :class:`RationalFunction` or a
    :class:`RationalVector`; for a column the spatial norm is Euclidean.

    Returns
    -------
    (norm, omega_at_max)
    """
    grid = grid if grid is not None else default_grid()
    if isinstance(v, RationalFunction):
        v = RationalVector([v])
    _check_axis_poles(v.entries, grid)
    mag = v.magnitude(grid.points)
    k = int(np.argmax(mag))
    return float(mag[k]), float(grid.points[k])
