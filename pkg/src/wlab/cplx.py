"""Rational maps of the Riemann sphere with floating complex coefficients.

Values live in C ∪ {∞}; the point at infinity is the singleton :data:`INF`.
Polynomials keep coefficients lowest degree first.  Rational maps are always
stored reduced (no common root of numerator and denominator) with a monic
denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConstantMap, SingularMatrix

#: relative residual below which a polynomial is considered to vanish
ROOT_TOL = 1e-9
#: relative size below which leading coefficients are dropped after a subtraction
TRIM_TOL = 1e-12


class _Infinity:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "INF"

    def __reduce__(self):
        return (_Infinity, ())


INF = _Infinity()


def is_inf(v) -> bool:
    return v is INF


def as_value(v):
    """Coerce to ``complex`` or :data:`INF`; non-finite complex numbers map to INF."""
    if v is INF:
        return INF
    if isinstance(v, str):
        if v.strip().lower() in ("inf", "infinity", "∞"):
            return INF
        return complex(v.replace(" ", ""))
    c = complex(v)
    if not (math.isfinite(c.real) and math.isfinite(c.imag)):
        return INF
    return c


def chordal(a, b) -> float:
    """Half the chordal distance between two points of the sphere.

    ``|a-b| / (sqrt(1+|a|^2) sqrt(1+|b|^2))`` for finite arguments and
    ``1/sqrt(1+|a|^2)`` when exactly one of them is infinite.
    """
    a, b = as_value(a), as_value(b)
    if a is INF and b is INF:
        return 0.0
    if b is INF:
        a, b = b, a
    if a is INF:
        return 1.0 / math.sqrt(1.0 + abs(b) ** 2)
    return abs(a - b) / (math.sqrt(1.0 + abs(a) ** 2) * math.sqrt(1.0 + abs(b) ** 2))


def _trim(coeffs: np.ndarray, rel_tol: float = 0.0) -> np.ndarray:
    if coeffs.size == 0:
        return np.zeros(1, dtype=complex)
    mag = np.abs(coeffs)
    cutoff = rel_tol * mag.max() if rel_tol > 0 else 0.0
    nz = np.nonzero(mag > cutoff)[0]
    if nz.size == 0:
        return np.zeros(1, dtype=complex)
    return coeffs[: nz[-1] + 1].copy()


@dataclass(frozen=True, eq=False)
class Polynomial:
    """Complex polynomial, coefficients lowest degree first."""

    coeffs: tuple

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=complex).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValueError("polynomial coefficients must be finite")
        object.__setattr__(self, "coeffs", tuple(complex(c) for c in _trim(arr)))

    @classmethod
    def from_roots(cls, roots: Iterable[complex], lead: complex = 1.0) -> "Polynomial":
        p = np.array([complex(lead)])
        for r in roots:
            # multiply by (z - r)
            p = np.concatenate([[0], p]) - complex(r) * np.concatenate([p, [0]])
        return cls(tuple(p))

    @classmethod
    def constant(cls, c: complex) -> "Polynomial":
        return cls((complex(c),))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs, dtype=complex)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 1 and self.coeffs[0] == 0

    @property
    def lead(self) -> complex:
        return self.coeffs[-1]

    def __call__(self, z):
        # Horner, works for scalars and ndarrays alike
        acc = np.zeros_like(np.asarray(z, dtype=complex)) + self.coeffs[-1]
        for c in reversed(self.coeffs[:-1]):
            acc = acc * z + c
        if np.ndim(acc) == 0:
            return complex(acc)
        return acc

    def __eq__(self, other):
        return isinstance(other, Polynomial) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def __repr__(self):
        return f"Polynomial({list(self.coeffs)!r})"

    def __neg__(self):
        return Polynomial(tuple(-self.array))

    def __add__(self, other: "Polynomial") -> "Polynomial":
        a, b = self.array, other.array
        n = max(a.size, b.size)
        out = np.zeros(n, dtype=complex)
        out[: a.size] += a
        out[: b.size] += b
        return Polynomial(tuple(out))

    def __sub__(self, other: "Polynomial") -> "Polynomial":
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return Polynomial(tuple(np.convolve(self.array, other.array)))
        return Polynomial(tuple(self.array * complex(other)))

    __rmul__ = __mul__

    def trimmed(self, rel_tol: float = TRIM_TOL) -> "Polynomial":
        """Drop leading coefficients that are negligible relative to the largest one."""
        return Polynomial(tuple(_trim(self.array, rel_tol)))

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial((0j,))
        a = self.array
        return Polynomial(tuple(a[1:] * np.arange(1, a.size)))

    def _abs_scale(self, a: complex, j: int) -> float:
        """Magnitude bound for the j-th derivative at ``a``, used to judge residuals."""
        mags = np.abs(self.array)
        s = 0.0
        r = abs(a)
        for i in range(j, mags.size):
            s += mags[i] * math.perm(i, j) * r ** (i - j)
        return s

    def order_at(self, a: complex, tol: float = ROOT_TOL) -> int:
        """Vanishing order at ``a`` judged by relative residuals of successive derivatives."""
        if self.is_zero:
            raise ValueError("order of the zero polynomial is undefined")
        p = self
        k = 0
        while k <= self.degree:
            scale = self._abs_scale(a, k)
            if abs(p(a)) > tol * scale:
                break
            k += 1
            p = p.derivative()
        return min(k, self.degree)

    def deflate(self, a: complex, times: int = 1) -> "Polynomial":
        """Divide by ``(z - a)**times``; the remainder is discarded."""
        p = self.array
        for _ in range(times):
            n = p.size - 1
            if n < 1:
                break
            q = np.zeros(n, dtype=complex)
            q[n - 1] = p[n]
            for k in range(n - 1, 0, -1):
                q[k - 1] = p[k] + a * q[k]
            p = q
        return Polynomial(tuple(p))

    def _eig_roots(self) -> np.ndarray:
        if self.is_zero:
            raise ValueError("the zero polynomial has no well-defined roots")
        if self.degree == 0:
            return np.zeros(0, dtype=complex)
        return np.roots(self.array[::-1]).astype(complex)

    def _polish(self, z: complex, steps: int = 3) -> complex:
        dp = self.derivative()
        for _ in range(steps):
            d = dp(z)
            if d == 0:
                break
            z_new = z - self(z) / d
            if not np.isfinite(z_new) or abs(self(z_new)) >= abs(self(z)):
                break
            z = z_new
        return z

    def roots(self) -> np.ndarray:
        """All finite roots with repetition (companion eigenvalues, simple roots Newton-polished)."""
        out = []
        for c, k in self.factor():
            out.extend([c] * k)
        return np.array(out, dtype=complex)

    def factor(self, tol: float = ROOT_TOL) -> list[tuple[complex, int]]:
        """Distinct roots with multiplicity.

        Eigenvalue roots of a k-fold zero scatter by about eps**(1/k); nearby
        roots are merged while the cluster mean still passes the residual
        test for the combined multiplicity.
        """
        pending = [complex(z) for z in self._eig_roots()]
        clusters: list[tuple[complex, int]] = []
        while pending:
            r0 = pending[0]
            near = sorted(pending, key=lambda z: abs(z - r0))
            near = [z for z in near if abs(z - r0) <= 1e-2 * (1.0 + abs(r0))]
            for k in range(len(near), 0, -1):
                group = near[:k]
                c = sum(group) / k
                spread = max(abs(z - c) for z in group)
                if k == 1 or spread <= tol * (1.0 + abs(c)) or self.order_at(c, tol) >= k:
                    break
            clusters.append((self._polish(c) if k == 1 else c, k))
            for z in group:
                pending.remove(z)
        clusters.sort(key=lambda t: (round(t[0].real, 12), round(t[0].imag, 12)))
        return [(c, k) for c, k in clusters]


def _as_poly(p) -> Polynomial:
    if isinstance(p, Polynomial):
        return p
    if np.isscalar(p):
        return Polynomial.constant(p)
    return Polynomial(tuple(complex(c) for c in p))


@dataclass(frozen=True, eq=False)
class RationalMap:
    """``num/den`` stored in reduced form with a monic denominator."""

    num: Polynomial
    den: Polynomial

    def __post_init__(self):
        num, den = _as_poly(self.num), _as_poly(self.den)
        if den.is_zero:
            raise ZeroDivisionError("denominator is the zero polynomial")
        if num.is_zero:
            num, den = Polynomial((0j,)), Polynomial((1 + 0j,))
        else:
            for r, k in den.factor():
                j = min(k, num.order_at(r))
                if j:
                    num = num.deflate(r, j)
                    den = den.deflate(r, j)
        lead = den.lead
        object.__setattr__(self, "num", num * (1 / lead))
        object.__setattr__(self, "den", den * (1 / lead))

    # -- constructors -------------------------------------------------
    @classmethod
    def from_coeffs(cls, num: Sequence, den: Sequence = (1,)) -> "RationalMap":
        return cls(_as_poly(num), _as_poly(den))

    @classmethod
    def constant(cls, c: complex) -> "RationalMap":
        return cls(Polynomial.constant(c), Polynomial.constant(1))

    @classmethod
    def identity(cls) -> "RationalMap":
        return cls(Polynomial((0, 1)), Polynomial((1,)))

    @classmethod
    def from_zeros_poles(cls, zeros=(), poles=(), scale: complex = 1.0) -> "RationalMap":
        return cls(Polynomial.from_roots(zeros, scale), Polynomial.from_roots(poles))

    # -- basic properties ----------------------------------------------
    @property
    def degree(self) -> int:
        return 0 if self.num.is_zero else max(self.num.degree, self.den.degree)

    @property
    def is_constant(self) -> bool:
        return self.degree == 0

    def __repr__(self):
        return f"RationalMap(num={list(self.num.coeffs)!r}, den={list(self.den.coeffs)!r})"

    def __eq__(self, other):
        return (
            isinstance(other, RationalMap)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        return hash((self.num, self.den))

    def allclose(self, other: "RationalMap", rtol: float = 1e-10, atol: float = 1e-12) -> bool:
        if self.num.degree != other.num.degree or self.den.degree != other.den.degree:
            return False
        return np.allclose(self.num.array, other.num.array, rtol=rtol, atol=atol) and np.allclose(
            self.den.array, other.den.array, rtol=rtol, atol=atol
        )

    # -- evaluation -----------------------------------------------------
    def __call__(self, z):
        """Vectorised evaluation at finite points; poles give complex infinity."""
        z = np.asarray(z, dtype=complex)
        n, d = self.num(z), self.den(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.asarray(n / d, dtype=complex)
        out = np.where(np.asarray(d) == 0, complex(np.inf, 0.0), out)
        return complex(out) if out.ndim == 0 else out

    def eval(self, z):
        """Value on the sphere: handles ``z = INF`` and poles exactly."""
        z = as_value(z)
        if z is INF:
            dn, dd = self.num.degree, self.den.degree
            if self.num.is_zero:
                return 0j
            if dn > dd:
                return INF
            if dn < dd:
                return 0j
            return self.num.lead / self.den.lead
        d = self.den(z)
        if d == 0:
            return INF
        return self.num(z) / d

    def order_at(self, a, tol: float = ROOT_TOL) -> int:
        """Order of vanishing at ``a`` (negative for poles); ``a`` may be INF."""
        if self.num.is_zero:
            raise ValueError("order of the zero map is undefined")
        if as_value(a) is INF:
            return self.den.degree - self.num.degree
        return self.num.order_at(a, tol) - self.den.order_at(a, tol)

    def zeros(self) -> list[tuple[complex, int]]:
        return [] if self.num.is_zero else self.num.factor()

    def poles(self) -> list[tuple[complex, int]]:
        return self.den.factor()

    # -- algebra --------------------------------------------------------
    def derivative(self) -> "RationalMap":
        n, d = self.num, self.den
        return RationalMap(n.derivative() * d - n * d.derivative(), d * d)

    def __mul__(self, other) -> "RationalMap":
        if not isinstance(other, RationalMap):
            other = RationalMap.constant(other)
        return RationalMap(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __add__(self, other) -> "RationalMap":
        if not isinstance(other, RationalMap):
            other = RationalMap.constant(other)
        return RationalMap(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalMap(-self.num, self.den)

    def __sub__(self, other) -> "RationalMap":
        if not isinstance(other, RationalMap):
            other = RationalMap.constant(other)
        return self + (-other)

    def __rsub__(self, other) -> "RationalMap":
        return (-self) + other

    def __truediv__(self, other) -> "RationalMap":
        if not isinstance(other, RationalMap):
            other = RationalMap.constant(other)
        if other.num.is_zero:
            raise ZeroDivisionError("division by the zero map")
        return RationalMap(self.num * other.den, self.den * other.num)

    def compose_affine(self, a: complex, b: complex) -> "RationalMap":
        """``z -> f(a z + b)``."""
        lin = Polynomial((b, a))

        def sub(p: Polynomial) -> Polynomial:
            out = Polynomial((0j,))
            power = Polynomial((1,))
            for c in p.coeffs:
                out = out + power * c
                power = power * lin
            return out

        return RationalMap(sub(self.num), sub(self.den))

    def preimages(self, v) -> list[tuple[object, int]]:
        """Solutions of ``f(z) = v`` on the sphere with multiplicity."""
        if self.is_constant:
            raise ConstantMap("preimages of a constant map are not finite")
        v = as_value(v)
        deg = self.degree
        if v is INF:
            p = self.den
        else:
            p = (self.num - self.den * v).trimmed()
        out: list[tuple[object, int]] = []
        if not p.is_zero:
            out.extend(p.factor())
            finite = p.degree
        else:
            finite = 0
        if deg > finite:
            out.append((INF, deg - finite))
        return out


def mobius(f: RationalMap, matrix) -> RationalMap:
    """``(a f + b) / (c f + d)`` for ``matrix = [[a, b], [c, d]]``."""
    m = np.asarray(matrix, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("Möbius matrix must be 2x2")
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det) <= 1e-14 * max(1.0, np.abs(m).max() ** 2):
        raise SingularMatrix(f"Möbius matrix has determinant {det}")
    (a, b), (c, d) = m
    num = f.num * a + f.den * b
    den = f.num * c + f.den * d
    return RationalMap(num, den)


def mobius_to_infinity(alpha) -> np.ndarray:
    """Matrix of ``w -> 1/(w - alpha)``, sending ``alpha`` to ∞ (identity if alpha is ∞)."""
    alpha = as_value(alpha)
    if alpha is INF:
        return np.eye(2, dtype=complex)
    return np.array([[0, 1], [1, -alpha]], dtype=complex)


def apply_mobius_value(matrix, v):
    """Image of a sphere point under the Möbius matrix."""
    (a, b), (c, d) = np.asarray(matrix, dtype=complex)
    v = as_value(v)
    if v is INF:
        return INF if c == 0 else a / c
    den = c * v + d
    if den == 0:
        return INF
    return (a * v + b) / den


# -- JSON helpers ------------------------------------------------------


def value_to_json(v):
    v = as_value(v)
    if v is INF:
        return "inf"
    return [v.real, v.imag]


def value_from_json(obj):
    if isinstance(obj, str):
        return as_value(obj)
    if isinstance(obj, (int, float)):
        return complex(obj)
    re, im = obj
    return complex(float(re), float(im))


def poly_to_json(p: Polynomial) -> list:
    return [[c.real, c.imag] for c in p.coeffs]


def poly_from_json(obj) -> Polynomial:
    coeffs = []
    for c in obj:
        v = value_from_json(c)
        if v is INF:
            raise ValueError("polynomial coefficients cannot be infinite")
        coeffs.append(v)
    return Polynomial(tuple(coeffs))


def map_to_json(f: RationalMap) -> dict:
    return {"num": poly_to_json(f.num), "den": poly_to_json(f.den)}


def map_from_json(obj) -> RationalMap:
    if isinstance(obj, dict):
        return RationalMap(poly_from_json(obj["num"]), poly_from_json(obj.get("den", [[1, 0]])))
    # bare coefficient list means a polynomial
    return RationalMap(poly_from_json(obj), Polynomial((1,)))
