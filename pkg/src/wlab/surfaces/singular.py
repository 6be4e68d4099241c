"""Singular curves |field| = 1 by marching squares, plus polyline distances."""

from __future__ import annotations

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import cKDTree
from skimage.measure import find_contours


def unit_level(field: np.ndarray, den: np.ndarray | None = None) -> np.ndarray:
    """(|f|²−|d|²)/(|f|²+|d|²) for f = field/den: same zero set as |f|²−1, bounded, finite at poles."""
    a = np.abs(np.asarray(field)) ** 2
    b = np.ones_like(a) if den is None else np.abs(np.asarray(den)) ** 2
    with np.errstate(invalid="ignore", over="ignore"):
        out = (a - b) / (a + b)
    out[np.isinf(a)] = 1.0
    return out


def extract_singular_set(
    field: np.ndarray,
    x: np.ndarray,
    y: np.ndarray,
    mask: np.ndarray | None = None,
    den: np.ndarray | None = None,
) -> list[np.ndarray]:
    """Polylines (complex arrays in the parameter plane) where |field| = 1.

    ``field`` is sampled on the lattice x[i] + i·y[j] (shape (len(x), len(y))).
    If ``den`` is given the field is the ratio field/den, evaluated without
    dividing.  Closed contours repeat their first point at the end.  Returns
    [] when the level is never crossed (including |field| ≡ 1).
    """
    level = unit_level(field, den)
    if mask is not None:
        level = np.where(mask, level, np.nan)
    finite = level[np.isfinite(level)]
    if finite.size == 0 or finite.min() > 0 or finite.max() < 0:
        return []
    if np.all(np.abs(finite) <= 1e-14):
        return []
    kw = {} if mask is None else {"mask": mask}
    lines = find_contours(np.nan_to_num(level, nan=1.0), 0.0, **kw)
    dx = x[1] - x[0]
    dy = y[1] - y[0]
    out = []
    for c in lines:
        z = (x[0] + c[:, 0] * dx) + 1j * (y[0] + c[:, 1] * dy)
        if len(z) >= 2:
            out.append(z)
    out.sort(key=lambda z: (-len(z), z[0].real, z[0].imag))
    return out


def is_closed(line: np.ndarray, tol: float = 1e-12) -> bool:
    return len(line) > 2 and abs(line[0] - line[-1]) <= tol


def map_polylines(lines: list[np.ndarray], grid_values: np.ndarray, x: np.ndarray, y: np.ndarray) -> list[np.ndarray]:
    """Carry parameter-plane polylines onto the mesh by bilinear interpolation of vertex data."""
    out = []
    comps = grid_values.shape[-1]
    interps = [RegularGridInterpolator((x, y), grid_values[..., k], bounds_error=False, fill_value=np.nan)
               for k in range(comps)]
    for z in lines:
        pts = np.stack([z.real, z.imag], axis=1)
        out.append(np.stack([f(pts) for f in interps], axis=1))
    return out


def densify(line: np.ndarray, max_step: float) -> np.ndarray:
    """Insert points so consecutive samples are at most ``max_step`` apart."""
    line = np.asarray(line)
    if len(line) < 2:
        return line
    seg = np.diff(line, axis=0)
    ln = np.abs(seg) if np.iscomplexobj(line) else np.linalg.norm(seg, axis=1)
    parts = [line[:1]]
    for i in range(len(seg)):
        n = max(1, int(np.ceil(ln[i] / max_step)))
        t = np.arange(1, n + 1) / n
        parts.append(line[i] + np.multiply.outer(t, seg[i]) if line.ndim > 1 else line[i] + t * seg[i])
    return np.concatenate(parts)


def _as_xy(p: np.ndarray) -> np.ndarray:
    p = np.asarray(p)
    return np.stack([p.real, p.imag], axis=1) if np.iscomplexobj(p) else p


def hausdorff(a: np.ndarray, b: np.ndarray, max_step: float | None = None) -> float:
    """Symmetric Hausdorff distance between two polylines (densified point sets)."""
    if max_step is not None:
        a, b = densify(a, max_step), densify(b, max_step)
    A, B = _as_xy(a), _as_xy(b)
    d1 = cKDTree(B).query(A)[0].max()
    d2 = cKDTree(A).query(B)[0].max()
    return float(max(d1, d2))


def hausdorff_to_circle(lines: list[np.ndarray], center: complex = 0j, radius: float = 1.0, samples: int = 20000) -> float:
    """Hausdorff distance between the union of polylines and a circle."""
    if not lines:
        return float("inf")
    step = 2 * np.pi * radius / samples
    pts = np.concatenate([densify(z, step) for z in lines])
    ring = center + radius * np.exp(2j * np.pi * np.arange(samples) / samples)
    return hausdorff(pts, ring)
