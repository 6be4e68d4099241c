"""Containers for surface builds: parameter grids, representation inputs, meshes."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components, depth_first_order

from ..cplx import RationalMap, as_value
from ..domain import PLANE, Domain
from ..errors import DegenerateMetric, OutsideDomain, PoleEncountered

KINDS = ("minimal", "maxface", "affine", "flat_front")
REQUIRED = {
    "minimal": ("g", "omega"),
    "maxface": ("g", "omega"),
    "affine": ("F_prime", "G_prime"),
    "flat_front": ("omega", "theta"),
}
AMBIENT = {"minimal": "R3", "maxface": "R3_1", "affine": "R3", "flat_front": "H3_minkowski"}


@dataclass(frozen=True)
class FrontData:
    """Representation inputs for one of the four surface classes.

    ``inputs`` holds rational maps keyed by role: ``g``/``omega`` for minimal
    surfaces and maxfaces, ``F_prime``/``G_prime`` (derivatives of the
    holomorphic pair) for improper affine fronts, ``omega``/``theta`` for
    flat fronts.  ``constants`` may give initial values ``F0``/``G0``.
    """

    kind: str
    inputs: dict
    base_point: complex = 0j
    domain: Domain | None = None
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown surface kind {self.kind!r}")
        missing = [k for k in REQUIRED[self.kind] if k not in self.inputs]
        if missing:
            raise ValueError(f"{self.kind} data needs inputs {missing}")
        for k, v in self.inputs.items():
            if not isinstance(v, RationalMap):
                raise TypeError(f"input {k} must be a RationalMap")
        object.__setattr__(self, "base_point", complex(as_value(self.base_point)))
        poles = self.poles()
        if self.domain is None:
            object.__setattr__(self, "domain", Domain(PLANE, tuple(poles)))
        if self.domain.kind != PLANE:
            raise ValueError("surface builders work on punctured planes")
        for p in poles:
            if not any(abs(p - a) <= 1e-9 * (1 + abs(a)) for a in self.domain.punctures):
                raise PoleEncountered(f"input pole {p} is not a puncture of the domain")
        if not self.domain.contains(self.base_point) or any(
            abs(self.base_point - a) <= 1e-12 for a in self.domain.punctures
        ):
            raise OutsideDomain(f"base point {self.base_point} is not in the domain")

    def poles(self) -> list[complex]:
        """Distinct finite poles of all inputs, in canonical order."""
        pts: list[complex] = []
        for f in self.inputs.values():
            for a, _ in f.poles():
                if all(abs(a - b) > 1e-9 * (1 + abs(b)) for b in pts):
                    pts.append(a)
        return sorted(pts, key=lambda z: (z.real, z.imag))

    def __getitem__(self, key) -> RationalMap:
        return self.inputs[key]


@dataclass
class ParamGrid:
    """Rectangular lattice in the parameter plane, with nodes near punctures masked out."""

    x: np.ndarray
    y: np.ndarray
    mask: np.ndarray  # True where the node is used

    @classmethod
    def rectangle(cls, x0, x1, y0, y1, nx, ny, punctures=(), exclusion=0.0) -> "ParamGrid":
        x = np.linspace(x0, x1, nx)
        y = np.linspace(y0, y1, ny)
        X, Y = np.meshgrid(x, y, indexing="ij")
        Z = X + 1j * Y
        mask = np.ones(Z.shape, dtype=bool)
        for p in punctures:
            mask &= np.abs(Z - complex(p)) > exclusion
        return cls(x, y, mask)

    @classmethod
    def square(cls, half_width: float, n: int, center: complex = 0j, **kw) -> "ParamGrid":
        c = complex(center)
        return cls.rectangle(c.real - half_width, c.real + half_width,
                             c.imag - half_width, c.imag + half_width, n, n, **kw)

    @property
    def shape(self) -> tuple[int, int]:
        return self.mask.shape

    @property
    def Z(self) -> np.ndarray:
        X, Y = np.meshgrid(self.x, self.y, indexing="ij")
        return X + 1j * Y

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dy(self) -> float:
        return float(self.y[1] - self.y[0])

    def index(self) -> np.ndarray:
        idx = -np.ones(self.shape, dtype=int)
        idx[self.mask] = np.arange(int(self.mask.sum()))
        return idx

    def points(self) -> np.ndarray:
        return self.Z[self.mask]

    def contains_point(self, z: complex) -> bool:
        return self.x[0] < z.real < self.x[-1] and self.y[0] < z.imag < self.y[-1]

    def edges(self) -> np.ndarray:
        idx = self.index()
        out = []
        for a, b in ((idx[:-1, :], idx[1:, :]), (idx[:, :-1], idx[:, 1:])):
            ok = (a >= 0) & (b >= 0)
            out.append(np.stack([a[ok], b[ok]], axis=1))
        return np.concatenate(out)

    def faces(self) -> np.ndarray:
        idx = self.index()
        a, b, c, d = idx[:-1, :-1], idx[1:, :-1], idx[1:, 1:], idx[:-1, 1:]
        ok = (a >= 0) & (b >= 0) & (c >= 0) & (d >= 0)
        t1 = np.stack([a[ok], b[ok], c[ok]], axis=1)
        t2 = np.stack([a[ok], c[ok], d[ok]], axis=1)
        return np.concatenate([t1, t2])

    def spanning_tree(self, root: int, method: str = "bfs") -> tuple[np.ndarray, np.ndarray]:
        """Traversal order and predecessor array of a spanning tree rooted at ``root``."""
        e = self.edges()
        n = int(self.mask.sum())
        adj = coo_matrix((np.ones(len(e)), (e[:, 0], e[:, 1])), shape=(n, n)).tocsr()
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise DegenerateMetric(f"parameter grid splits into {ncomp} pieces")
        fn = breadth_first_order if method == "bfs" else depth_first_order
        order, pred = fn(adj, root, directed=False, return_predecessors=True)
        return order, pred


@dataclass
class SurfaceMesh:
    """Sampled surface with per-vertex data and singular curves.

    ``vertices`` has 3 columns (R3, R3_1) or 4 (C2_as_R4, H3_minkowski with
    x0 first).  ``singular_polylines`` live in the parameter plane;
    ``singular_polylines_mesh`` are their images on the surface.
    """

    vertices: np.ndarray
    ambient: str
    faces: np.ndarray
    params: np.ndarray
    scalars: dict = field(default_factory=dict)
    singular_polylines: list = field(default_factory=list)
    singular_polylines_mesh: list = field(default_factory=list)
    report: dict = field(default_factory=dict)
    grid: ParamGrid | None = None
    companions: dict = field(default_factory=dict)  # e.g. the C² lift of an affine front
    lift: np.ndarray | None = None  # SL(2,C) frame of a flat front, one 2x2 matrix per vertex

    def __post_init__(self):
        n = len(self.vertices)
        if self.faces.size and (self.faces.min() < 0 or self.faces.max() >= n):
            raise ValueError("face index out of range")
        for k, v in self.scalars.items():
            if len(v) != n:
                raise ValueError(f"scalar {k!r} has {len(v)} entries for {n} vertices")
        if self.ambient == "H3_minkowski":
            x = self.vertices
            resid = -x[:, 0] ** 2 + np.sum(x[:, 1:] ** 2, axis=1) + 1.0
            self.report.setdefault("hyperboloid_residual", float(np.max(np.abs(resid), initial=0.0)))
            if np.any(x[:, 0] <= 0):
                raise ValueError("hyperboloid vertices must have x0 > 0")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def grid_array(self, values: np.ndarray) -> np.ndarray:
        """Scatter per-vertex values back onto the rectangular parameter lattice (nan where masked)."""
        g = self.grid
        out = np.full(g.shape + np.shape(values)[1:], np.nan, dtype=np.result_type(values, float))
        out[g.mask] = values
        return out
