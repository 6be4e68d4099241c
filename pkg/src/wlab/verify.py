"""Exceptional values, the m+2 omission bound, empirical curvature-distance scans, Voss data."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .cplx import INF, Polynomial, RationalMap, as_value, chordal, value_to_json
from .domain import DISK, LARGE, PLANE, Domain, SampleGrid, boundary_distances, is_complete
from .errors import ConstantMap, DuplicatePunctures
from .metric import WeierstrassData

VALUE_TOL = 1e-9
MATCH_TOL = 1e-6


@dataclass(frozen=True)
class ExceptionalSet:
    """Distinct omitted values; ``L`` is their minimal pairwise chordal distance (None if q < 2)."""

    values: tuple
    approximate: bool = False

    @property
    def q(self) -> int:
        return len(self.values)

    @property
    def L(self) -> float | None:
        vals = self.values
        if len(vals) < 2:
            return None
        return min(chordal(a, b) for i, a in enumerate(vals) for b in vals[i + 1 :])

    def to_json(self) -> dict:
        return {"values": [value_to_json(v) for v in self.values], "q": self.q, "L": self.L,
                "approximate": self.approximate}


def _dedupe(values) -> list:
    out: list = []
    for v in values:
        if all(chordal(v, w) > VALUE_TOL for w in out):
            out.append(v)
    return out


def _sort_key(v):
    return (1, 0.0, 0.0) if v is INF else (0, v.real, v.imag)


def _omitted_on_plane(g: RationalMap, v, punctures: Sequence[complex]) -> bool:
    # every preimage must be a puncture or ∞; counted with multiplicity, no root finding
    deg = g.degree
    if v is INF:
        p = g.den
    else:
        p = (g.num - g.den * v).trimmed()
    if p.is_zero:
        return False
    at_inf = deg - p.degree
    at_punct = sum(p.order_at(a) for a in punctures)
    return at_inf + at_punct == deg


def exceptional_values(g: RationalMap, domain: Domain, rim_samples: int = 256) -> ExceptionalSet:
    """Values of the sphere that ``g`` never takes on ``domain``.

    On a punctured plane the candidates are the images of the punctures and
    of ∞ (a nonconstant rational map is onto the sphere, so an omitted value
    must have all its preimages outside the domain); the answer is exact.
    On a disk the omitted set is generally open; a sample of it (images of
    rim points and punctures) is returned with ``approximate=True``.
    """
    if g.is_constant:
        raise ConstantMap("g is constant: it omits every value but one")
    if domain.kind == PLANE:
        cands = _dedupe([g.eval(a) for a in domain.punctures] + [g.eval(INF)])
        vals = [v for v in cands if _omitted_on_plane(g, v, domain.punctures)]
        return ExceptionalSet(tuple(sorted(vals, key=_sort_key)))

    R = domain.radius
    rim = R * np.exp(2j * np.pi * np.arange(rim_samples) / rim_samples)
    cands = _dedupe([g.eval(a) for a in domain.punctures] + [g.eval(z) for z in rim])
    vals = []
    for v in cands:
        ok = True
        for z, _ in g.preimages(v):
            if z is INF or abs(z) >= R * (1 - MATCH_TOL):
                continue
            if any(abs(z - a) <= MATCH_TOL * (1 + abs(a)) for a in domain.punctures):
                continue
            ok = False
            break
        if ok:
            vals.append(v)
    return ExceptionalSet(tuple(sorted(vals, key=_sort_key)), approximate=True)


@dataclass(frozen=True)
class PicardCheck:
    consistent: bool
    complete: bool
    nonconstant: bool
    q: int | None
    m: float
    witness: object = None
    detail: str = ""

    @property
    def verdict(self) -> str:
        return "consistent" if self.consistent else "inconsistent"


def check_picard(data: WeierstrassData) -> PicardCheck:
    """A complete metric with nonconstant g must have at most m+2 omitted values."""
    comp = is_complete(data)
    if data.g.is_constant:
        return PicardCheck(True, comp.complete, False, None, data.m, comp.witness,
                           "g is constant: the omission bound does not apply")
    exc = exceptional_values(data.g, data.domain)
    bound = data.m + 2
    bad = comp.complete and exc.q > bound
    if bad:
        detail = f"complete metric but g omits {exc.q} > {bound} values"
    elif comp.complete:
        detail = f"complete, q={exc.q} <= m+2={bound}"
    else:
        detail = f"incomplete (end {comp.witness!r} has finite length); bound not applicable"
    return PicardCheck(not bad, comp.complete, True, exc.q, data.m, comp.witness, detail)


@dataclass
class BoundScanReport:
    """Empirical supremum of |K|^{1/2} d(p) over a sampling graph.

    The theoretical constant is not computed; ``sup_product`` is a
    measured quantity for the given grid.
    """

    m: float
    q: int | None
    L: float | None
    exceptional_values: list
    sup_product: float
    argmax_node: int
    argmax_point: complex
    sample_count: int
    in_bound_regime: bool
    capped_nodes: int
    grid_params: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def to_json(self) -> dict:
        d = asdict(self)
        d["argmax_point"] = value_to_json(self.argmax_point)
        d["exceptional_values"] = [value_to_json(v) for v in self.exceptional_values]
        return d


def bound_scan(data: WeierstrassData, grid: SampleGrid) -> BoundScanReport:
    """sup over grid nodes of sqrt(|K|) d(p); ties go to the lowest node id."""
    if grid.domain != data.domain:
        raise ValueError("grid was built for a different domain")
    flags = []
    if data.g.is_constant:
        exc_vals, q, L = [], None, None
    else:
        exc = exceptional_values(data.g, data.domain)
        exc_vals, q, L = list(exc.values), exc.q, exc.L
    regime = q is not None and q >= data.m + 3
    if not regime:
        flags.append("outside_bound_regime")
    K = data.curvature_array(grid.nodes)
    if not np.all(np.isfinite(K)):
        raise ValueError("curvature undefined at some grid node")
    bd = boundary_distances(data, grid)
    prod = np.sqrt(np.abs(K)) * bd.values
    i = int(np.argmax(prod))
    n_capped = int(np.count_nonzero(bd.capped & (K != 0)))
    if n_capped:
        flags.append("capped")
    return BoundScanReport(
        m=data.m,
        q=q,
        L=L,
        exceptional_values=exc_vals,
        sup_product=float(prod[i]),
        argmax_node=i,
        argmax_point=complex(grid.nodes[i]),
        sample_count=grid.n_nodes,
        in_bound_regime=regime,
        capped_nodes=n_capped,
        grid_params=dict(grid.params),
        flags=flags,
    )


def make_voss(m: float, q: int, punctures: Sequence, *, outer_cutoff=None) -> WeierstrassData:
    """g = z, ω = dz / ∏(z - α_i) on the plane minus the q-1 points α_i."""
    pts = [complex(as_value(p)) for p in punctures]
    if q < 2:
        raise ValueError("Voss data needs q >= 2")
    if len(pts) != q - 1:
        raise ValueError(f"expected {q - 1} punctures, got {len(pts)}")
    for i, a in enumerate(pts):
        for b in pts[i + 1 :]:
            if abs(a - b) <= 1e-12 * (1 + abs(a)):
                raise DuplicatePunctures(f"puncture {a} repeated")
    omega = RationalMap(Polynomial((1,)), Polynomial.from_roots(sorted(pts, key=lambda z: (z.real, z.imag))))
    dom = Domain(PLANE, tuple(pts), outer_cutoff=outer_cutoff)
    return WeierstrassData(RationalMap.identity(), omega, m, dom)


def random_punctures(rng: np.random.Generator, k: int, radius: float = 2.0, min_sep: float = 0.2) -> list[complex]:
    pts: list[complex] = []
    while len(pts) < k:
        r = radius * math.sqrt(rng.uniform())
        z = complex(r * np.exp(2j * np.pi * rng.uniform()))
        z = complex(round(z.real, 6), round(z.imag, 6))
        if all(abs(z - w) >= min_sep for w in pts):
            pts.append(z)
    return pts


LATTICE_COLUMNS = ("m", "q", "complete", "exceptional_count", "picard_consistent")


def voss_lattice(m_max: int, q_max: int, seed: int, configs: int = 3, q_min: int = 2) -> list[dict]:
    """Completeness / omission truth table over random Voss configurations."""
    rng = np.random.default_rng(seed)
    rows = []
    for m in range(1, m_max + 1):
        for q in range(q_min, q_max + 1):
            for _ in range(configs):
                data = make_voss(m, q, random_punctures(rng, q - 1))
                comp = is_complete(data)
                exc = exceptional_values(data.g, data.domain)
                pic = check_picard(data)
                rows.append({"m": m, "q": q, "complete": comp.complete,
                             "exceptional_count": exc.q, "picard_consistent": pic.consistent})
    return rows


def truth_table_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(LATTICE_COLUMNS)
    for r in rows:
        w.writerow([r["m"], r["q"], str(r["complete"]).lower(), r["exceptional_count"],
                    str(r["picard_consistent"]).lower()])
    return buf.getvalue()
