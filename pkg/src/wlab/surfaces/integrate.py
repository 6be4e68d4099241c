"""Path integration of holomorphic forms over parameter grids, and loop periods."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ..domain import _gauss_legendre
from ..errors import IntegrationThroughPole
from .mesh import ParamGrid

# f(z) for z of shape (N,) -> values of shape (N, k)
Integrand = Callable[[np.ndarray], np.ndarray]

ORDER = 16
LOOP_NODES = 256
PERIOD_RTOL = 1e-8
CHUNK = 1 << 15


def _pieces(a: np.ndarray, b: np.ndarray, poles: np.ndarray, max_pieces: int = 64) -> np.ndarray:
    # split a segment so every piece is shorter than its distance to the nearest pole
    ln = np.abs(b - a)
    if poles.size == 0:
        return np.ones(len(a), dtype=int)
    d = np.full(len(a), np.inf)
    ab = b - a
    for p in poles:
        t = np.clip(np.real((p - a) * np.conj(ab)) / np.maximum(np.abs(ab) ** 2, 1e-300), 0.0, 1.0)
        d = np.minimum(d, np.abs(a + t * ab - p))
    if np.any(d <= 1e-12 * (1.0 + np.abs(a))):
        i = int(np.argmin(d))
        raise IntegrationThroughPole(f"segment {a[i]} -> {b[i]} passes through a pole")
    return np.clip(np.ceil(2.0 * ln / d), 1, max_pieces).astype(int)


def segment_integrals(f: Integrand, a, b, poles: Sequence = (), order: int = ORDER) -> np.ndarray:
    """∫_a^b f(z) dz along straight segments, vectorised over segments; shape (N, k)."""
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    poles = np.asarray(poles, dtype=complex)
    x, w = _gauss_legendre(order)
    npc = _pieces(a, b, poles)
    out = None
    for n in np.unique(npc):
        sel = np.flatnonzero(npc == n)
        for s in range(0, len(sel), max(1, CHUNK // (n * order))):
            idx = sel[s : s + max(1, CHUNK // (n * order))]
            aa, dd = a[idx], (b[idx] - a[idx]) / n
            t = (np.arange(n)[:, None] + x[None, :]).ravel()  # (n*order,)
            z = aa[:, None] + dd[:, None] * t[None, :]
            vals = np.asarray(f(z.ravel()))
            vals = vals.reshape(len(idx), n * order, -1)
            ww = np.tile(w, n)
            res = dd[:, None] * np.einsum("j,ijk->ik", ww, vals)
            if out is None:
                out = np.zeros((len(a), res.shape[1]), dtype=complex)
            out[idx] = res
    return out


@dataclass
class TreeIntegral:
    """Values of ∫_{z0}^{z} f along spanning-tree paths, one row per grid node."""

    values: np.ndarray
    root: int
    order: np.ndarray
    pred: np.ndarray


def root_node(grid: ParamGrid, base_point: complex) -> int:
    pts = grid.points()
    return int(np.argmin(np.abs(pts - base_point)))


def accumulate(increments: np.ndarray, start: np.ndarray, order: np.ndarray, pred: np.ndarray, root: int) -> np.ndarray:
    """Sum per-edge increments from the root outward along the tree."""
    vals = np.empty((len(pred),) + increments.shape[1:], dtype=increments.dtype)
    vals[root] = start
    for i in order[1:]:
        vals[i] = vals[pred[i]] + increments[i]
    return vals


def tree_integral(
    f: Integrand,
    grid: ParamGrid,
    base_point: complex,
    poles: Sequence = (),
    method: str = "bfs",
    order: int = ORDER,
) -> TreeIntegral:
    """Integrate a holomorphic vector form from ``base_point`` to every grid node.

    Each tree edge is integrated by Gauss–Legendre quadrature; node values
    are accumulated along the spanning tree, so they are path independent
    only if the periods vanish (checked separately).
    """
    pts = grid.points()
    root = root_node(grid, base_point)
    tree_order, pred = grid.spanning_tree(root, method)
    child = tree_order[1:]
    inc = np.zeros((len(pts), 0), dtype=complex)
    if len(child):
        seg = segment_integrals(f, pts[pred[child]], pts[child], poles, order)
        inc = np.zeros((len(pts), seg.shape[1]), dtype=complex)
        inc[child] = seg
    start = segment_integrals(f, [base_point], [pts[root]], poles, order)[0]
    if inc.shape[1] == 0:
        inc = np.zeros((len(pts), len(start)), dtype=complex)
    vals = accumulate(inc, start, tree_order, pred, root)
    return TreeIntegral(vals, root, tree_order, pred)


# -- loops ------------------------------------------------------------------


def loop_radius(center: complex, others: Sequence, default: float = 0.5) -> float:
    """Half the distance to the nearest other singular point (capped)."""
    d = [abs(complex(o) - center) for o in others if abs(complex(o) - center) > 0]
    return 0.5 * min(d) if d else default


def circle(center: complex, radius: float, n: int = LOOP_NODES):
    th = 2 * np.pi * np.arange(n) / n
    z = center + radius * np.exp(1j * th)
    dz = 1j * radius * np.exp(1j * th) * (2 * np.pi / n)  # z'(θ) dθ
    return z, dz


def loop_integral(f: Integrand, center: complex, radius: float, n: int = LOOP_NODES) -> tuple[np.ndarray, float]:
    """∮ f dz over a circle (trapezoid rule, spectrally accurate) and its ds-length ∮|f||dz|."""
    z, dz = circle(center, radius, n)
    vals = np.asarray(f(z))
    total = np.sum(vals * dz[:, None], axis=0)
    length = float(np.sum(np.linalg.norm(vals, axis=1) * np.abs(dz)))
    return total, length


def periodic_antiderivative(df_dtheta: np.ndarray) -> np.ndarray:
    """Antiderivative of a zero-mean periodic sample (spectral), normalised to 0 at θ = 0."""
    n = len(df_dtheta)
    c = np.fft.fft(df_dtheta, axis=0)
    k = np.fft.fftfreq(n, d=1.0 / n)
    c[0] = 0
    nz = k != 0
    c[nz] /= (1j * k[nz])[(...,) + (None,) * (c.ndim - 1)]
    F = np.fft.ifft(c, axis=0)
    return F - F[0]


@dataclass
class LoopCheck:
    center: complex
    radius: float
    integral: list
    ds_length: float
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tol

    def to_json(self) -> dict:
        return {
            "center": [self.center.real, self.center.imag],
            "radius": self.radius,
            "integral": [[complex(v).real, complex(v).imag] for v in self.integral],
            "ds_length": self.ds_length,
            "residual": self.residual,
            "tol": self.tol,
            "ok": self.ok,
        }


def period_checks(f: Integrand, centers: Sequence, singular: Sequence, rtol: float = PERIOD_RTOL) -> list[LoopCheck]:
    """Real parts of loop integrals of ``f`` around each centre, with scale-aware tolerance."""
    out = []
    for c in centers:
        c = complex(c)
        r = loop_radius(c, singular)
        total, length = loop_integral(f, c, r)
        res = float(np.max(np.abs(total.real), initial=0.0))
        out.append(LoopCheck(c, r, list(total), length, res, rtol * length))
    return out
