"""Planar domains, sampling graphs, lengths under ds, and completeness by end exponents."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import TYPE_CHECKING, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components, dijkstra
from scipy.spatial import Delaunay

from .cplx import INF, RationalMap, as_value
from .errors import DisconnectedGrid, DuplicatePunctures, PathExitsDomain, PoleOnPath

if TYPE_CHECKING:
    from .metric import WeierstrassData

#: stand-in for an infinite boundary distance
LARGE = 1e12

PLANE = "punctured_plane"
DISK = "disk"


def _canonical(points) -> tuple[complex, ...]:
    pts = [complex(as_value(p)) for p in points]
    return tuple(sorted(pts, key=lambda z: (z.real, z.imag)))


@dataclass(frozen=True)
class Domain:
    """Plane or open disk with finitely many finite punctures.

    Punctures are kept in canonical (sorted) order so that relabeling the
    input does not change anything downstream.
    """

    kind: str = PLANE
    punctures: tuple = ()
    radius: float | None = None
    outer_cutoff: float | None = None

    def __post_init__(self):
        if self.kind not in (PLANE, DISK):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        pts = _canonical(self.punctures)
        for i in range(len(pts) - 1):
            for j in range(i + 1, len(pts)):
                if abs(pts[i] - pts[j]) <= 1e-12 * (1 + abs(pts[i])):
                    raise DuplicatePunctures(f"puncture {pts[i]} listed twice")
        object.__setattr__(self, "punctures", pts)
        if self.kind == DISK:
            if self.radius is None or self.radius <= 0:
                raise ValueError("disk domain needs a positive radius")
            for p in pts:
                if abs(p) >= self.radius:
                    raise ValueError(f"puncture {p} is not inside the disk")
        else:
            scale = 2.0 * max((abs(p) for p in pts), default=0.0) + 1.0
            if self.outer_cutoff is None:
                object.__setattr__(self, "outer_cutoff", max(1e3, 100.0 * scale))
            elif self.outer_cutoff <= scale:
                raise ValueError(f"outer_cutoff must exceed 2 max|puncture| + 1 = {scale}")

    @property
    def center(self) -> complex:
        if self.kind == DISK or not self.punctures:
            return 0j
        return sum(self.punctures) / len(self.punctures)

    @property
    def min_separation(self) -> float:
        pts = self.punctures
        if len(pts) < 2:
            return 1.0
        return min(abs(a - b) for i, a in enumerate(pts) for b in pts[i + 1 :])

    def contains(self, z) -> bool:
        z = as_value(z)
        if z is INF:
            return False
        if self.kind == DISK and abs(z) >= self.radius:
            return False
        return all(z != p for p in self.punctures)

    def translated(self, t: complex) -> "Domain":
        if self.kind == DISK:
            raise ValueError("only plane domains can be translated")
        return Domain(PLANE, tuple(p + t for p in self.punctures), outer_cutoff=self.outer_cutoff)


def natural_domain(g: RationalMap, omega_hat: RationalMap, m: float = 2, outer_cutoff=None) -> Domain:
    """Plane punctured at every finite zero or pole of the conformal factor."""
    from .metric import WeierstrassData

    probe = WeierstrassData.__new__(WeierstrassData)
    object.__setattr__(probe, "g", g)
    object.__setattr__(probe, "omega_hat", omega_hat)
    object.__setattr__(probe, "m", m)
    pts = [a for a, _ in probe.singular_points()]
    return Domain(PLANE, tuple(pts), outer_cutoff=outer_cutoff)


# -- sampling graph --------------------------------------------------------


@dataclass
class SampleGrid:
    """Graph discretisation of a domain.

    ``sentinels`` maps an end label (puncture index, ``"infinity"`` or
    ``"rim"``) to the indices of the nodes through which a divergent curve
    leaves the grid.  Sentinel nodes of a puncture lie on the circle of
    radius ``exclusion_radius`` around it.
    """

    domain: Domain
    nodes: np.ndarray
    edges: np.ndarray
    lengths: np.ndarray
    exclusion_radius: float
    sentinels: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return int(self.nodes.size)

    def nearest(self, z: complex) -> int:
        return int(np.argmin(np.abs(self.nodes - z)))

    def sentinel_nodes(self) -> np.ndarray:
        if not self.sentinels:
            return np.zeros(0, dtype=int)
        return np.unique(np.concatenate([np.asarray(v, dtype=int) for v in self.sentinels.values()]))

    def write_csv(self, directory) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        npath, epath = directory / "grid_nodes.csv", directory / "grid_edges.csv"
        with open(npath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node_id", "re", "im"])
            for i, z in enumerate(self.nodes):
                w.writerow([i, repr(float(z.real)), repr(float(z.imag))])
        with open(epath, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "j", "length"])
            for (i, j), ln in zip(self.edges, self.lengths):
                w.writerow([int(i), int(j), repr(float(ln))])
        return npath, epath


def _ring_block(center: complex, radii: Sequence[float], n_ang: int, phase: float = 0.0):
    """Concentric rings with aligned angles; returns nodes and stencil edges (local indices)."""
    radii = list(radii)
    ang = np.exp(1j * (phase + 2 * np.pi * np.arange(n_ang) / n_ang))
    nodes = np.concatenate([center + r * ang for r in radii]) if radii else np.zeros(0, complex)
    edges = []
    nr = len(radii)
    for k in range(nr):
        base = k * n_ang
        for j in range(n_ang):
            edges.append((base + j, base + (j + 1) % n_ang))
            if n_ang > 8:
                edges.append((base + j, base + (j + 2) % n_ang))
            if k + 1 < nr:
                nb = (k + 1) * n_ang
                for dj in (-1, 0, 1):
                    edges.append((base + j, nb + (j + dj) % n_ang))
            if k + 2 < nr:
                edges.append((base + j, (k + 2) * n_ang + j))
    return nodes, edges


_LATTICE_OFFSETS = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 1), (1, 2), (2, -1), (1, -2)]


def build_grid(
    domain: Domain,
    step: float = 0.1,
    *,
    refine: int = 0,
    n_angular: int = 24,
    n_outer: int = 64,
    ring_ratio: float = 0.5,
    exclusion_radius: float | None = None,
    core_radius: float | None = None,
) -> SampleGrid:
    """Multiscale sampling graph.

    A square lattice of spacing ``step`` covers a core disk; geometric rings
    (ratio ``ring_ratio``) shrink around each puncture down to
    ``exclusion_radius`` (default ``1e-6`` times the minimal puncture
    separation); log-polar rings grow out to ``outer_cutoff`` (plane) or a
    rim ring is placed on the disk boundary.  Each ``refine`` level halves the
    step and doubles the angular counts.  Edges: explicit lattice and ring
    stencils plus a Delaunay triangulation gluing the blocks together.
    """
    step = step / 2**refine
    n_angular *= 2**refine
    n_outer *= 2**refine
    c = domain.center
    pts = domain.punctures
    sep = domain.min_separation
    eps = exclusion_radius if exclusion_radius is not None else 1e-6 * sep
    spread = max((abs(p - c) for p in pts), default=0.0)
    if domain.kind == DISK:
        r_core = domain.radius
    else:
        r_core = core_radius if core_radius is not None else spread + max(1.0, spread)
    r_start = min(0.45 * sep, 2.0 * step) if pts else 0.0
    if pts and r_start <= eps:
        raise ValueError("exclusion radius too large for the puncture separation")

    blocks_nodes: list[np.ndarray] = []
    blocks_edges: list[np.ndarray] = []
    sentinels: dict = {}
    offset = 0

    def add_block(nodes, edges):
        nonlocal offset
        blocks_nodes.append(np.asarray(nodes, dtype=complex))
        if len(edges):
            blocks_edges.append(np.asarray(edges, dtype=int) + offset)
        offset += len(nodes)
        return offset - len(nodes)

    # core lattice
    n = int(math.floor(r_core / step))
    ii, jj = np.meshgrid(np.arange(-n, n + 1), np.arange(-n, n + 1), indexing="ij")
    lat = c + step * (ii + 1j * jj)
    inner = r_core - (0.5 * step if domain.kind == DISK else 0.0)
    keep = np.abs(lat - c) <= inner * (1 + 1e-12)
    for p in pts:
        keep &= np.abs(lat - p) > r_start + 0.5 * step
    idx = -np.ones(lat.shape, dtype=int)
    idx[keep] = np.arange(int(keep.sum()))
    lat_edges = []
    for di, dj in _LATTICE_OFFSETS:
        a = idx[max(0, -di) : idx.shape[0] - max(0, di), max(0, -dj) : idx.shape[1] - max(0, dj)]
        b = idx[max(0, di) :, max(0, dj) :][: a.shape[0], : a.shape[1]]
        ok = (a >= 0) & (b >= 0)
        lat_edges.append(np.stack([a[ok], b[ok]], axis=1))
    add_block(lat[keep], np.concatenate(lat_edges) if lat_edges else [])

    # puncture rings
    for k, p in enumerate(pts):
        radii = []
        r = r_start
        while r > eps * (1 + 1e-9):
            radii.append(r)
            r *= ring_ratio
        radii.append(eps)
        nodes, edges = _ring_block(p, radii, n_angular)
        start = add_block(nodes, edges)
        sentinels[k] = np.arange(start + (len(radii) - 1) * n_angular, start + len(radii) * n_angular)

    # outer rings or rim
    if domain.kind == DISK:
        n_rim = max(n_outer, int(math.ceil(2 * math.pi * domain.radius / step)))
        nodes, edges = _ring_block(0j, [domain.radius], n_rim)
        start = add_block(nodes, edges)
        sentinels["rim"] = np.arange(start, start + n_rim)
    else:
        growth = 1.0 + 2 * math.pi / n_outer
        radii = []
        r = r_core * growth
        while r < domain.outer_cutoff:
            radii.append(r)
            r *= growth
        radii.append(domain.outer_cutoff)
        nodes, edges = _ring_block(c, radii, n_outer)
        start = add_block(nodes, edges)
        sentinels["infinity"] = np.arange(start + (len(radii) - 1) * n_outer, start + len(radii) * n_outer)

    nodes = np.concatenate(blocks_nodes)
    edges = [e for e in blocks_edges if len(e)]
    tri = Delaunay(np.column_stack([(nodes - c).real, (nodes - c).imag]))
    s = tri.simplices
    edges.append(np.concatenate([s[:, [0, 1]], s[:, [1, 2]], s[:, [2, 0]]]))
    e = np.sort(np.concatenate(edges), axis=1)
    e = np.unique(e[e[:, 0] != e[:, 1]], axis=0)

    za, zb = nodes[e[:, 0]], nodes[e[:, 1]]
    ok = np.ones(len(e), dtype=bool)
    for p in pts:
        ok &= _segment_distance(za, zb, p) >= eps * (1 - 1e-9)
    if domain.kind == DISK:
        # chords between rim nodes stay inside; exclude edges leaving the closed disk
        ok &= (np.abs(za) <= domain.radius * (1 + 1e-12)) & (np.abs(zb) <= domain.radius * (1 + 1e-12))
    e = e[ok]
    lengths = np.abs(nodes[e[:, 1]] - nodes[e[:, 0]])

    ncomp, _ = connected_components(_adjacency(len(nodes), e, lengths), directed=False)
    if ncomp != 1:
        raise DisconnectedGrid(f"sampling graph has {ncomp} components")
    return SampleGrid(
        domain=domain,
        nodes=nodes,
        edges=e,
        lengths=lengths,
        exclusion_radius=eps,
        sentinels=sentinels,
        params=dict(step=step, refine=refine, n_angular=n_angular, n_outer=n_outer,
                    ring_ratio=ring_ratio, core_radius=r_core, ring_start=r_start),
    )


def _segment_distance(a: np.ndarray, b: np.ndarray, p: complex) -> np.ndarray:
    d = b - a
    dd = np.abs(d) ** 2
    with np.errstate(invalid="ignore", divide="ignore"):
        t = np.clip(((p - a) * np.conj(d)).real / dd, 0.0, 1.0)
    t = np.where(dd == 0, 0.0, t)
    return np.abs(a + t * d - p)


def _adjacency(n: int, edges: np.ndarray, weights: np.ndarray):
    return coo_matrix((weights, (edges[:, 0], edges[:, 1])), shape=(n, n)).tocsr()


# -- lengths ---------------------------------------------------------------


@lru_cache(maxsize=None)
def _gauss_legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _singular_set(data: "WeierstrassData") -> np.ndarray:
    pts = list(data.domain.punctures) + [a for a, _ in data.singular_points()]
    return np.array(pts, dtype=complex)


def segment_lengths(
    data: "WeierstrassData",
    a: np.ndarray,
    b: np.ndarray,
    order: int = 6,
    grading: float = 0.5,
    max_pieces: int = 256,
) -> np.ndarray:
    """ds-length of straight segments ``a[i] -> b[i]`` (vectorised).

    Each segment is cut into equal pieces no longer than ``grading`` times its
    distance to the nearest singular point, then Gauss-Legendre of the given
    order is applied on every piece.
    """
    a = np.atleast_1d(np.asarray(a, dtype=complex))
    b = np.atleast_1d(np.asarray(b, dtype=complex))
    sing = _singular_set(data)
    length = np.abs(b - a)
    if sing.size:
        dist = np.min([_segment_distance(a, b, s) for s in sing], axis=0)
    else:
        dist = np.full(a.shape, np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        pieces = np.ceil(length / (grading * dist))
    pieces = np.clip(np.nan_to_num(pieces, nan=1.0, posinf=max_pieces), 1, max_pieces).astype(int)
    x, w = _gauss_legendre(order)
    out = np.zeros(a.shape, dtype=float)
    for k in np.unique(pieces):
        sel = np.nonzero(pieces == k)[0]
        t = (np.arange(k)[:, None] + x[None, :]).ravel() / k
        ww = np.tile(w, k) / k
        z = a[sel, None] + (b[sel] - a[sel])[:, None] * t[None, :]
        f = data.factor_array(z)
        out[sel] = np.sum(np.sqrt(f) * ww[None, :], axis=1) * length[sel]
    return out


def _integrate_segment(data, a: complex, b: complex, order: int, sing: np.ndarray, grading: float) -> float:
    # recursive graded subdivision for the public polyline routine
    stack = [(a, b, 0)]
    total = 0.0
    x, w = _gauss_legendre(order)
    while stack:
        p, q, depth = stack.pop()
        ln = abs(q - p)
        if ln == 0:
            continue
        if sing.size:
            dist = float(np.min(_segment_distance(np.full(sing.shape, p), np.full(sing.shape, q), sing)))
        else:
            dist = math.inf
        if ln > grading * dist and depth < 60:
            mid = 0.5 * (p + q)
            stack.append((p, mid, depth + 1))
            stack.append((mid, q, depth + 1))
            continue
        f = data.factor_array(p + (q - p) * x)
        total += float(np.sum(np.sqrt(f) * w)) * ln
    return total


def path_length(
    data: "WeierstrassData",
    polyline: Sequence,
    order: int = 16,
    grading: float = 0.5,
) -> float:
    """Length of a polyline under ``ds = sqrt(conformal factor) |dz|``.

    Composite Gauss-Legendre with pieces graded toward the nearest singular
    point of the data, so it stays accurate on long rays and near punctures.
    """
    pts = [complex(as_value(z)) for z in polyline]
    dom = data.domain
    sing = _singular_set(data)
    exps = {complex(a): e for a, e in data.singular_points()}
    total = 0.0
    for p, q in zip(pts[:-1], pts[1:]):
        if dom.kind == DISK and (abs(p) >= dom.radius or abs(q) >= dom.radius):
            raise PathExitsDomain(f"segment {p}->{q} leaves the disk")
        for s in dom.punctures:
            if _segment_distance(np.array([p]), np.array([q]), s)[0] <= 1e-14 * (1 + abs(s)):
                e = exps.get(s, data.local_exponent(s))
                if e < 0:
                    raise PoleOnPath(f"segment {p}->{q} runs through the pole {s} of the metric")
                raise PathExitsDomain(f"segment {p}->{q} runs through the puncture {s}")
        for s, e in exps.items():
            if _segment_distance(np.array([p]), np.array([q]), s)[0] <= 1e-14 * (1 + abs(s)) and e < 0:
                raise PoleOnPath(f"segment {p}->{q} runs through the pole {s} of the metric")
        total += _integrate_segment(data, p, q, order, sing, grading)
    return total


# -- ends --------------------------------------------------------------------


@dataclass(frozen=True)
class EndExponent:
    """Growth exponent of ``sqrt(factor)`` at an end and whether curves into it have infinite length."""

    end: object  # puncture index, "infinity" or "rim"
    exponent: float
    verdict: str
    point: object = None

    @property
    def divergent(self) -> bool:
        return self.verdict == "divergent"


def end_exponents(data: "WeierstrassData") -> list[EndExponent]:
    """Exponent e with sqrt(factor) ~ c|z-α|^e at punctures and ~ c|z|^e at ∞.

    A puncture end is divergent iff e <= -1, the end at ∞ iff e >= -1.  A
    disk rim is always reachable with finite length.
    """
    out = []
    for k, a in enumerate(data.domain.punctures):
        e = data.local_exponent(a)
        out.append(EndExponent(k, float(e), "divergent" if e <= -1 else "convergent", a))
    if data.domain.kind == PLANE:
        e = data.local_exponent(INF)
        out.append(EndExponent("infinity", float(e), "divergent" if e >= -1 else "convergent", INF))
    else:
        out.append(EndExponent("rim", 0.0, "convergent", None))
    return out


@dataclass(frozen=True)
class Completeness:
    complete: bool
    witness: object = None
    ends: tuple = ()

    @property
    def verdict(self) -> str:
        return "complete" if self.complete else "incomplete"


def is_complete(data: "WeierstrassData") -> Completeness:
    """Complete iff every end is divergent; otherwise name a convergent end."""
    ends = end_exponents(data)
    bad = [e for e in ends if not e.divergent]
    return Completeness(not bad, bad[0].end if bad else None, tuple(ends))


def tail_length(data: "WeierstrassData", end: EndExponent, z: complex) -> float:
    """Asymptotic ds-length from ``z`` straight into a convergent end.

    Uses ``sqrt(factor) ~ c r^e`` with ``c`` fitted at ``z``.  Returns
    ``inf`` for divergent ends and 0 for a disk rim.
    """
    if end.end == "rim":
        return 0.0
    if end.divergent:
        return math.inf
    e = end.exponent
    root = math.sqrt(float(data.factor_array(complex(z))))
    if end.end == "infinity":
        r = abs(z - data.domain.center)
        return root * r / (-(e + 1.0))
    r = abs(z - end.point)
    return root * r / (e + 1.0)


@dataclass
class BoundaryDistances:
    values: np.ndarray
    capped: np.ndarray
    source_end: list

    def __getitem__(self, i):
        return self.values[i]


def edge_weights(data: "WeierstrassData", grid: SampleGrid) -> np.ndarray:
    return segment_lengths(data, grid.nodes[grid.edges[:, 0]], grid.nodes[grid.edges[:, 1]])


def boundary_distances(
    data: "WeierstrassData",
    grid: SampleGrid,
    cap: float = LARGE,
    weights: np.ndarray | None = None,
) -> BoundaryDistances:
    """Graph approximation of d(p) for every grid node in one Dijkstra sweep.

    A virtual source is joined to each sentinel node with the analytic tail
    length of its end; divergent ends contribute no link.  Nodes with no
    finite route get ``cap`` and ``capped=True``.
    """
    n = grid.n_nodes
    if weights is None:
        weights = edge_weights(data, grid)
    if not np.all(np.isfinite(weights)):
        raise PoleOnPath("an edge of the sampling graph crosses a singular point of the metric")
    ends = {e.end: e for e in end_exponents(data)}
    src_nodes, src_w, src_end = [], [], {}
    for label, idx in grid.sentinels.items():
        end = ends[label]
        if end.divergent:
            continue
        for i in idx:
            t = tail_length(data, end, grid.nodes[i])
            src_nodes.append(int(i))
            src_w.append(t)
            src_end[int(i)] = label
    if not src_nodes:
        return BoundaryDistances(np.full(n, cap), np.ones(n, dtype=bool), [None] * n)
    # shift so zero tails (rim) still register as stored edges; removed afterwards
    shift = 1.0
    e = np.concatenate([grid.edges, np.column_stack([np.full(len(src_nodes), n), src_nodes])])
    w = np.concatenate([weights, np.asarray(src_w) + shift])
    adj = _adjacency(n + 1, e, w)
    dist, pred = dijkstra(adj, directed=False, indices=n, return_predecessors=True)
    d = dist[:n] - shift
    capped = ~np.isfinite(d) | (d > cap)
    d = np.where(capped, cap, np.maximum(d, 0.0))
    # propagate the realising end along the shortest-path tree, nearest nodes first
    origin: list = [None] * n
    for i in np.argsort(dist[:n], kind="stable"):
        if not np.isfinite(dist[i]):
            break
        origin[i] = src_end.get(int(i)) if pred[i] == n else origin[pred[i]]
    return BoundaryDistances(d, capped, origin)


def boundary_distance(data: "WeierstrassData", grid: SampleGrid, p: int) -> float:
    """d(p) at grid node ``p``: infimum of ds-lengths of divergent curves from ``p``."""
    if not 0 <= p < grid.n_nodes:
        raise IndexError(f"node {p} not in grid")
    return float(boundary_distances(data, grid).values[p])


def cutoff_convergence(data: "WeierstrassData", z: complex, cutoffs: Sequence[float], **grid_kw) -> list[float]:
    """d at the node nearest ``z`` for a sequence of outer cutoffs (diagnostic)."""
    out = []
    for R in cutoffs:
        dom = Domain(PLANE, data.domain.punctures, outer_cutoff=R)
        d2 = data.with_domain(dom)
        grid = build_grid(dom, **grid_kw)
        out.append(boundary_distance(d2, grid, grid.nearest(z)))
    return out
