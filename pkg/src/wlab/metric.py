"""Conformal metrics ``(1+|g|^2)^m |omega|^2`` built from rational data.

Closed-form Gaussian curvature, a finite-difference curvature oracle, and the
auxiliary flat metric used to bound distances when ``g`` omits at least
``m + 3`` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import TYPE_CHECKING, Callable, Sequence

import numpy as np

from .cplx import INF, Polynomial, RationalMap, as_value, mobius, mobius_to_infinity, apply_mobius_value
from .errors import (
    CriticalPoint,
    DegenerateMetric,
    EtaOutOfRange,
    OutsideDomain,
    PoleEncountered,
    StencilOutsideDomain,
    WindowEmpty,
)

if TYPE_CHECKING:
    from .domain import Domain

DEFAULT_H = 1e-3


@dataclass(frozen=True, eq=False)
class WeierstrassData:
    """Meromorphic ``g``, the coefficient ``omega_hat`` of ``omega = omega_hat dz``, exponent ``m``.

    ``domain`` defaults to the plane punctured at every zero or pole of the
    conformal factor.  ``m = 0`` is the flat case and is flagged by
    :attr:`flat_case`; non-integer ``m`` requires ``allow_real_m=True``.
    """

    g: RationalMap
    omega_hat: RationalMap
    m: float = 2
    domain: "Domain | None" = None
    allow_real_m: bool = False

    def __post_init__(self):
        m = self.m
        if m < 0:
            raise ValueError("m must be nonnegative")
        if float(m) != int(m):
            if not self.allow_real_m:
                raise ValueError(f"m={m} is not an integer; pass allow_real_m=True to explore real exponents")
        else:
            object.__setattr__(self, "m", int(m))
        if self.omega_hat.num.is_zero:
            raise DegenerateMetric("omega_hat vanishes identically")
        from .domain import natural_domain

        if self.domain is None:
            object.__setattr__(self, "domain", natural_domain(self.g, self.omega_hat, self.m))
        else:
            self._check_domain()

    def _check_domain(self):
        dom = self.domain
        punct = list(dom.punctures)
        for a, e in self.singular_points():
            if not dom.contains(a) or any(abs(a - p) <= 1e-9 * (1 + abs(p)) for p in punct):
                continue
            raise DegenerateMetric(f"conformal factor has a zero or pole (exponent {e}) at {a} inside the domain")

    @property
    def flat_case(self) -> bool:
        return self.m == 0

    @property
    def integer_m(self) -> bool:
        return float(self.m) == int(self.m)

    @cached_property
    def g_prime(self) -> RationalMap:
        return self.g.derivative()

    @cached_property
    def _wronskian(self) -> Polynomial:
        n, d = self.g.num, self.g.den
        return n.derivative() * d - n * d.derivative()

    @cached_property
    def _weighted_omega(self) -> RationalMap | None:
        # omega_hat / den_g^m: finite at poles of g compensated by zeros of omega_hat
        if not self.integer_m:
            return None
        dm = Polynomial((1,))
        for _ in range(int(self.m)):
            dm = dm * self.g.den
        return self.omega_hat / RationalMap(dm, Polynomial((1,)))

    def local_exponent(self, a) -> float:
        """Exponent e with ``sqrt(factor) ~ c |z - a|^e`` at a finite point, or ``|z|^e`` at ∞."""
        m = self.m
        if as_value(a) is INF:
            dw = self.omega_hat.num.degree - self.omega_hat.den.degree
            dg = self.g.num.degree - self.g.den.degree if not self.g.num.is_zero else 0
            return dw + m * max(0, dg)
        og = 0 if self.g.num.is_zero else self.g.order_at(a)
        return self.omega_hat.order_at(a) + m * min(0, og)

    def singular_points(self) -> list[tuple[complex, float]]:
        """Finite points where the conformal factor vanishes or blows up."""
        cands = [r for r, _ in self.omega_hat.zeros()] + [r for r, _ in self.omega_hat.poles()]
        if self.m:
            cands += [r for r, _ in self.g.poles()]
        out: list[tuple[complex, float]] = []
        for a in cands:
            if any(abs(a - b) <= 1e-9 * (1 + abs(b)) for b, _ in out):
                continue
            e = self.local_exponent(a)
            if e != 0:
                out.append((a, e))
        return out

    # -- vectorised kernels (no domain checks) ---------------------------
    def _parts(self, z: np.ndarray):
        z = np.asarray(z, dtype=complex)
        n, d = self.g.num(z), self.g.den(z)
        s = np.abs(n) ** 2 + np.abs(d) ** 2
        if self._weighted_omega is not None:
            w2 = np.abs(self._weighted_omega(z)) ** 2
        else:
            with np.errstate(divide="ignore", invalid="ignore"):
                w2 = np.abs(self.omega_hat(z)) ** 2 / np.abs(d) ** (2 * self.m)
        return s, w2

    def factor_array(self, z) -> np.ndarray:
        """``(1+|g|^2)^m |omega_hat|^2`` evaluated pointwise; inf/nan at singular points."""
        s, w2 = self._parts(z)
        with np.errstate(over="ignore", invalid="ignore"):
            return s**self.m * w2

    def log_factor_array(self, z) -> np.ndarray:
        s, w2 = self._parts(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.m * np.log(s) + np.log(w2)

    def curvature_array(self, z) -> np.ndarray:
        """Closed-form Gaussian curvature, pointwise."""
        z = np.asarray(z, dtype=complex)
        s, w2 = self._parts(z)
        wr = np.abs(self._wronskian(z)) ** 2
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            k = -2.0 * self.m * wr / (s ** (self.m + 2) * w2)
        return k + 0.0

    def with_domain(self, domain: "Domain") -> "WeierstrassData":
        return WeierstrassData(self.g, self.omega_hat, self.m, domain, self.allow_real_m)


def _check_point(data: WeierstrassData, z) -> complex:
    z = as_value(z)
    if z is INF or not data.domain.contains(z):
        raise OutsideDomain(f"{z} is not an interior point of the domain")
    return z


def conformal_factor(data: WeierstrassData, z) -> float:
    """λ²(z) = (1+|g(z)|²)^m |ω̂(z)|²."""
    z = _check_point(data, z)
    f = float(data.factor_array(z))
    if not math.isfinite(f) or f <= 0.0:
        raise PoleEncountered(f"conformal factor is singular at {z} (value {f})")
    return f


def gauss_curvature(data: WeierstrassData, z) -> float:
    """K = -2m|g'|² / ((1+|g|²)^{m+2} |ω̂|²); nonpositive, zero exactly at critical points of g."""
    conformal_factor(data, z)
    k = float(data.curvature_array(complex(z)))
    if not math.isfinite(k):
        raise PoleEncountered(f"curvature undefined at {z}")
    return k


def local_step(z: complex, h: float) -> float:
    """Stencil width: ``h`` times the local coordinate scale ``max(1, |z|)``."""
    return h * max(1.0, abs(z))


def laplacian_5pt(fn: Callable[[np.ndarray], np.ndarray], z, h) -> np.ndarray:
    """Five-point Laplacian of a real function of a complex variable (vectorised)."""
    z = np.asarray(z, dtype=complex)
    h = np.asarray(h, dtype=float)
    pts = np.stack([z, z + h, z - h, z + 1j * h, z - 1j * h])
    v = fn(pts)
    return (v[1] + v[2] + v[3] + v[4] - 4.0 * v[0]) / h**2


def numeric_curvature(
    log_factor: Callable[[np.ndarray], np.ndarray],
    z,
    h,
    richardson: bool = False,
) -> np.ndarray:
    """K = -Δ(log λ)/λ² with λ² = exp(log_factor), Laplacian by finite differences."""
    z = np.asarray(z, dtype=complex)
    lap = laplacian_5pt(log_factor, z, h)
    if richardson:
        lap = (4.0 * laplacian_5pt(log_factor, z, np.asarray(h) / 2) - lap) / 3.0
    return -0.5 * lap / np.exp(log_factor(z))


def stencil_points(z: complex, h: float) -> list[complex]:
    return [z, z + h, z - h, z + 1j * h, z - 1j * h]


def gauss_curvature_numeric(
    data: WeierstrassData, z, h: float = DEFAULT_H, *, richardson: bool = False
) -> float:
    """Finite-difference curvature oracle, independent of the closed form.

    The stencil width is ``h`` scaled by ``max(1, |z|)``.
    """
    z = as_value(z)
    step = local_step(z, h)
    for p in stencil_points(z, step):
        if not data.domain.contains(p):
            raise StencilOutsideDomain(f"stencil point {p} leaves the domain")
    vals = data.factor_array(np.array(stencil_points(z, step)))
    if not np.all(np.isfinite(vals)) or np.any(vals <= 0):
        raise StencilOutsideDomain(f"stencil around {z} touches a zero or pole of the metric")
    return float(numeric_curvature(data.log_factor_array, z, step, richardson))


@dataclass
class CurvatureComparison:
    """Closed-form vs finite-difference curvature at sample points.

    ``admissible`` marks points whose stencil stays inside the domain and
    away from zeros/poles of the metric; elsewhere K_fd and rel_error are nan.
    The relative error is measured against max(1, |K|).
    """

    z: np.ndarray
    K: np.ndarray
    K_fd: np.ndarray
    admissible: np.ndarray

    @property
    def rel_error(self) -> np.ndarray:
        return np.abs(self.K - self.K_fd) / np.maximum(1.0, np.abs(self.K))

    def pass_fraction(self, tol: float = 1e-4) -> float:
        n = int(self.admissible.sum())
        if n == 0:
            return 0.0
        return float(np.count_nonzero(self.rel_error[self.admissible] <= tol) / n)


def compare_curvature(data: WeierstrassData, z, h: float = DEFAULT_H, richardson: bool = True) -> CurvatureComparison:
    """Vectorised closed-form/oracle comparison over many points."""
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    step = h * np.maximum(1.0, np.abs(z))
    ok = np.ones(z.shape, dtype=bool)
    stencil = np.stack([z, z + step, z - step, z + 1j * step, z - 1j * step])
    for p in data.domain.punctures:
        ok &= np.all(stencil != p, axis=0)
    if data.domain.kind == "disk":
        ok &= np.all(np.abs(stencil) < data.domain.radius, axis=0)
    vals = data.factor_array(stencil)
    ok &= np.all(np.isfinite(vals) & (vals > 0), axis=0)
    K = data.curvature_array(z)
    K_fd = np.full(z.shape, np.nan)
    if ok.any():
        with np.errstate(over="ignore", invalid="ignore"):
            K_fd[ok] = numeric_curvature(data.log_factor_array, z[ok], step[ok], richardson)
    ok &= np.isfinite(K_fd) & np.isfinite(K)
    return CurvatureComparison(z, K, K_fd, ok)


# -- auxiliary flat metric -------------------------------------------------


@dataclass(frozen=True)
class AuxiliaryMetricParams:
    m: float
    q: int
    eta: float
    lam: float
    exceptional_values: tuple = field(default=())
    window: tuple[float, float] = (0.0, 0.0)


def eta_window(m: float, q: int) -> tuple[float, float]:
    """Open interval ``((q - 2(m+1))/q, (q - (m+2))/q)`` for η."""
    return ((q - 2 * (m + 1)) / q, (q - (m + 2)) / q)


def auxiliary_params(
    m: float,
    q: int,
    eta: float | None = None,
    exceptional_values: Sequence = (),
    *,
    enforce_hypothesis: bool = True,
) -> AuxiliaryMetricParams:
    """Choose or validate η and compute λ = m / (q - 2 - qη).

    With ``enforce_hypothesis`` (the default) ``q >= m + 3`` is required and η
    is additionally kept positive.  Without it the raw interval is used, which
    is nonempty for every q but carries no curvature bound below ``m + 3``.
    """
    if m <= 0:
        raise ValueError("m must be positive for the auxiliary metric")
    lo, hi = eta_window(m, q)
    if enforce_hypothesis:
        if q < m + 3:
            raise WindowEmpty(f"q={q} < m+3={m + 3}: no admissible eta")
        lo = max(lo, 0.0)
    if eta is None:
        eta = 0.5 * (lo + hi)
    elif not lo < eta < hi:
        raise EtaOutOfRange(f"eta={eta} outside ({lo}, {hi})")
    lam = m / (q - 2 - q * eta)
    if not 0.5 < lam < 1.0:
        raise EtaOutOfRange(f"lambda={lam} outside (1/2, 1)")
    vals = tuple(as_value(v) for v in exceptional_values)
    return AuxiliaryMetricParams(m=m, q=q, eta=eta, lam=lam, exceptional_values=vals, window=(lo, hi))


def normalize_infinity(g: RationalMap, values: Sequence) -> tuple[RationalMap, list[complex], np.ndarray]:
    """Move one exceptional value to ∞ with a Möbius map.

    Returns the transformed map, the images of the remaining values (all
    finite) and the matrix used.  If ∞ is already among the values the
    identity is used.
    """
    vals = [as_value(v) for v in values]
    if any(v is INF for v in vals):
        matrix = np.eye(2, dtype=complex)
        target = INF
    else:
        target = vals[-1]
        matrix = mobius_to_infinity(target)
    rest = []
    skipped = False
    for v in vals:
        if not skipped and (v is target or v == target):
            skipped = True
            continue
        rest.append(apply_mobius_value(matrix, v))
    return mobius(g, matrix), rest, matrix


def auxiliary_log_factor_array(data: WeierstrassData, params: AuxiliaryMetricParams, z) -> np.ndarray:
    """log of the conformal factor of the auxiliary metric dσ² (vectorised)."""
    z = np.asarray(z, dtype=complex)
    lam, eta = params.lam, params.eta
    gz = data.g(z)
    gp = data.g_prime(z)
    with np.errstate(divide="ignore", invalid="ignore"):
        acc = -np.log(np.abs(gp))
        for a in params.exceptional_values:
            acc = acc + (1.0 - eta) * (np.log(np.abs(gz - a)) - 0.5 * math.log1p(abs(a) ** 2))
        return (2.0 / (1.0 - lam)) * np.log(np.abs(data.omega_hat(z))) + (2.0 * lam / (1.0 - lam)) * acc


def auxiliary_metric_factor(data: WeierstrassData, params: AuxiliaryMetricParams, z) -> float:
    """Conformal factor of dσ² at ``z``.

    The finite exceptional values α₁..α_{q-1} come from ``params``; the
    remaining one must already sit at ∞ (see :func:`normalize_infinity`).
    """
    z = _check_point(data, z)
    if any(v is INF for v in params.exceptional_values):
        raise ValueError("exceptional values passed to the auxiliary metric must be finite")
    gp = data.g_prime.eval(z)
    if gp is INF or data.omega_hat.eval(z) is INF or data.g.eval(z) is INF:
        raise PoleEncountered(f"data has a pole at {z}")
    if gp == 0 or abs(gp) < 1e-300:
        raise CriticalPoint(f"g' vanishes at {z}")
    val = math.exp(float(auxiliary_log_factor_array(data, params, z)))
    if not math.isfinite(val) or val <= 0:
        raise PoleEncountered(f"auxiliary factor singular at {z}")
    return val


def _mp_poly(p: Polynomial, z):
    import mpmath

    acc = mpmath.mpc(0)
    for c in reversed(p.coeffs):
        acc = acc * z + mpmath.mpc(c.real, c.imag)
    return acc


def _mp_map(f: RationalMap, z):
    return _mp_poly(f.num, z) / _mp_poly(f.den, z)


def _mp_auxiliary_log_factor(data: WeierstrassData, params: AuxiliaryMetricParams, z):
    """Same formula as :func:`auxiliary_log_factor_array`, in mpmath arithmetic at one point."""
    import mpmath

    lam, eta = mpmath.mpf(params.lam), mpmath.mpf(params.eta)
    gz = _mp_map(data.g, z)
    acc = -mpmath.log(abs(_mp_map(data.g_prime, z)))
    for a in params.exceptional_values:
        am = mpmath.mpc(a.real, a.imag)
        acc += (1 - eta) * (mpmath.log(abs(gz - am)) - mpmath.log1p(abs(am) ** 2) / 2)
    return (2 / (1 - lam)) * mpmath.log(abs(_mp_map(data.omega_hat, z))) + (2 * lam / (1 - lam)) * acc


def auxiliary_curvature_numeric(
    data: WeierstrassData,
    params: AuxiliaryMetricParams,
    z,
    h: float = DEFAULT_H,
    *,
    richardson: bool = True,
    dps: int | None = None,
) -> np.ndarray:
    """Finite-difference curvature of dσ² (should vanish: the metric is flat).

    The factor of dσ² is tiny away from the punctures, and K = -Δlog f / (2f)
    divides the stencil's round-off by f.  With ``dps`` the stencil values are
    computed in mpmath with that many digits (use a small ``h``, e.g. 1e-8),
    so the oracle's noise floor no longer depends on the size of f.
    """
    z = np.asarray(z, dtype=complex)
    step = np.maximum(1.0, np.abs(z)) * h
    if dps is None:
        return numeric_curvature(lambda w: auxiliary_log_factor_array(data, params, w), z, step, richardson)
    import mpmath

    out = np.empty(z.shape, dtype=float)
    with mpmath.workdps(dps):
        for idx, (w, s) in enumerate(zip(z.ravel(), step.ravel())):
            c = mpmath.mpc(w.real, w.imag)
            hs = mpmath.mpf(s)
            vals = [_mp_auxiliary_log_factor(data, params, c + d) for d in (0, hs, -hs, 1j * hs, -1j * hs)]
            lap = (vals[1] + vals[2] + vals[3] + vals[4] - 4 * vals[0]) / hs**2
            out.flat[idx] = float(-lap / (2 * mpmath.exp(vals[0])))
    return out
