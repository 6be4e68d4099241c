"""Reading and writing the JSON input document shared by all commands.

A document has a ``kind`` discriminator:

* ``weierstrass`` — ``m``, ``g``, ``omega`` and an optional ``domain``;
* ``voss`` — ``m`` and ``punctures`` (q = len(punctures) + 1);
* ``minimal`` / ``maxface`` — ``g``, ``omega``;
* ``affine`` — ``F_prime``, ``G_prime`` and optional ``constants`` {F0, G0};
* ``flat_front`` — ``omega``, ``theta``.

Rational maps are ``{"num": [[re, im], ...], "den": [...]}`` with
coefficients lowest degree first; a bare coefficient list is a polynomial.
Surface documents may carry ``base_point`` and a ``region`` {x: [x0, x1],
y: [y0, y1], n: [nx, ny]}.  Any document may carry ``grid`` {step,
refine, exclusion_radius, outer_cutoff}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .cplx import map_from_json, map_to_json, value_from_json, value_to_json
from .domain import DISK, PLANE, Domain
from .errors import ParseError, WlabError
from .metric import WeierstrassData
from .surfaces.mesh import KINDS as SURFACE_KINDS
from .surfaces.mesh import FrontData, ParamGrid

DOC_KINDS = ("weierstrass", "voss") + SURFACE_KINDS
MAP_FIELDS = {
    "weierstrass": ("g", "omega"),
    "minimal": ("g", "omega"),
    "maxface": ("g", "omega"),
    "affine": ("F_prime", "G_prime"),
    "flat_front": ("omega", "theta"),
}


@dataclass
class Document:
    kind: str
    payload: object  # WeierstrassData or FrontData
    region: dict | None = None
    grid: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def param_grid(self, step: float | None = None) -> ParamGrid | None:
        """Rectangle from the ``region`` entry (None means builder default)."""
        if self.region is None:
            return None
        fd: FrontData = self.payload
        (x0, x1), (y0, y1) = self.region["x"], self.region["y"]
        if step is not None:
            nx = int(round((x1 - x0) / step)) + 1
            ny = int(round((y1 - y0) / step)) + 1
        else:
            nx, ny = self.region.get("n", (201, 201))
        excl = self.region.get("exclusion", 1.5 * max((x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1)))
        return ParamGrid.rectangle(x0, x1, y0, y1, nx, ny, fd.domain.punctures, excl)


def _need(doc: dict, key: str):
    if key not in doc:
        raise ParseError(f"document is missing required field {key!r}")
    return doc[key]


def _map(doc: dict, key: str):
    try:
        return map_from_json(_need(doc, key))
    except ParseError:
        raise
    except (TypeError, ValueError, KeyError, ZeroDivisionError) as exc:
        raise ParseError(f"field {key!r} is not a rational map: {exc}") from exc


def _domain(obj) -> Domain | None:
    if obj is None:
        return None
    if not isinstance(obj, dict):
        raise ParseError("domain must be an object")
    kind = obj.get("kind", PLANE)
    if kind in ("plane", "punctured_plane"):
        kind = PLANE
    if kind not in (PLANE, DISK):
        raise ParseError(f"unknown domain kind {kind!r}")
    try:
        pts = tuple(value_from_json(p) for p in obj.get("punctures", []))
        return Domain(kind, pts, obj.get("radius"), obj.get("outer_cutoff"))
    except WlabError:
        raise
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bad domain: {exc}") from exc


def domain_to_json(d: Domain) -> dict:
    out = {"kind": d.kind, "punctures": [value_to_json(p) for p in d.punctures]}
    if d.radius is not None:
        out["radius"] = d.radius
    if d.outer_cutoff is not None:
        out["outer_cutoff"] = d.outer_cutoff
    return out


def parse_document(doc: dict) -> Document:
    if not isinstance(doc, dict):
        raise ParseError("document must be a JSON object")
    kind = doc.get("kind", "weierstrass")
    if kind not in DOC_KINDS:
        raise ParseError(f"unknown document kind {kind!r} (expected one of {DOC_KINDS})")
    grid = doc.get("grid", {}) or {}
    if not isinstance(grid, dict):
        raise ParseError("grid must be an object")
    try:
        if kind == "voss":
            from .verify import make_voss

            m = _need(doc, "m")
            pts = [value_from_json(p) for p in _need(doc, "punctures")]
            payload = make_voss(m, len(pts) + 1, pts, outer_cutoff=grid.get("outer_cutoff"))
        elif kind == "weierstrass":
            g, om = _map(doc, "g"), _map(doc, "omega")
            payload = WeierstrassData(g, om, doc.get("m", 2), _domain(doc.get("domain")))
        else:
            inputs = {k: _map(doc, k) for k in MAP_FIELDS[kind]}
            consts = {k: value_from_json(v) for k, v in (doc.get("constants") or {}).items()}
            base = value_from_json(doc.get("base_point", [0, 0]))
            payload = FrontData(kind, inputs, base, _domain(doc.get("domain")), consts)
    except ParseError:
        raise
    except WlabError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ParseError(f"invalid {kind} document: {exc}") from exc
    region = doc.get("region")
    if region is not None:
        if kind not in SURFACE_KINDS:
            raise ParseError("region only applies to surface documents")
        try:
            x0, x1 = map(float, region["x"])
            y0, y1 = map(float, region["y"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"region needs x=[x0,x1] and y=[y0,y1]: {exc}") from exc
        if not (x1 > x0 and y1 > y0):
            raise ParseError("region must have positive width and height")
    return Document(kind, payload, region, grid, doc)


def load_document(path) -> Document:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    return parse_document(doc)


def weierstrass_to_json(data: WeierstrassData) -> dict:
    return {
        "kind": "weierstrass",
        "m": data.m,
        "g": map_to_json(data.g),
        "omega": map_to_json(data.omega_hat),
        "domain": domain_to_json(data.domain),
    }


def front_to_json(fd: FrontData) -> dict:
    out = {"kind": fd.kind}
    for k, f in fd.inputs.items():
        out[k] = map_to_json(f)
    out["base_point"] = value_to_json(fd.base_point)
    out["domain"] = domain_to_json(fd.domain)
    if fd.constants:
        out["constants"] = {k: value_to_json(v) for k, v in fd.constants.items()}
    return out
