"""OBJ / CSV export of surface meshes, written atomically."""

from __future__ import annotations

import csv
import io
import os
import tempfile
from pathlib import Path

import numpy as np

from ..errors import IoFailure
from .mesh import SurfaceMesh

PROJECTIONS = {
    "R3": ("identity",),
    "R3_1": ("identity",),
    "C2_as_R4": ("drop4", "drop3"),
    "H3_minkowski": ("poincare", "klein"),
}


def project(vertices: np.ndarray, ambient: str, projection: str | None = None) -> np.ndarray:
    """Map mesh vertices to R³ for OBJ output."""
    allowed = PROJECTIONS[ambient]
    projection = projection or allowed[0]
    if projection not in allowed:
        raise ValueError(f"projection {projection!r} not available for {ambient} (use one of {allowed})")
    v = np.asarray(vertices, dtype=float)
    if projection == "identity":
        return v
    if projection == "drop4":
        return v[:, :3]
    if projection == "drop3":
        return v[:, [0, 1, 3]]
    x0 = v[:, :1]
    if projection == "poincare":
        return v[:, 1:] / (1.0 + x0)
    return v[:, 1:] / x0  # klein


def atomic_write(path: Path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename over the target."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", newline="") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _f(x: float) -> str:
    return repr(float(x))


def obj_text(mesh: SurfaceMesh, projection: str | None = None) -> str:
    v = project(mesh.vertices, mesh.ambient, projection)
    out = io.StringIO()
    out.write(f"# ambient {mesh.ambient} projection {projection or PROJECTIONS[mesh.ambient][0]}\n")
    for p in v:
        out.write("v " + " ".join(_f(c) for c in p) + "\n")
    for f in mesh.faces:
        out.write("f " + " ".join(str(int(i) + 1) for i in f) + "\n")
    return out.getvalue()


def scalars_text(mesh: SurfaceMesh) -> str:
    names = list(mesh.scalars)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["vertex_id", "param_re", "param_im", *names])
    cols = [np.asarray(mesh.scalars[k], dtype=float) for k in names]
    for i, z in enumerate(mesh.params):
        w.writerow([i, _f(z.real), _f(z.imag), *(_f(c[i]) for c in cols)])
    return buf.getvalue()


def polylines_text(mesh: SurfaceMesh) -> str:
    dim = mesh.vertices.shape[1]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["polyline_id", "point_id", "param_re", "param_im", *(f"x{k}" for k in range(dim))])
    for j, line in enumerate(mesh.singular_polylines):
        img = mesh.singular_polylines_mesh[j] if j < len(mesh.singular_polylines_mesh) else None
        for k, z in enumerate(line):
            xs = img[k] if img is not None else [np.nan] * dim
            w.writerow([j, k, _f(z.real), _f(z.imag), *(_f(c) for c in xs)])
    return buf.getvalue()


def export_mesh(
    mesh: SurfaceMesh,
    out_dir,
    stem: str = "mesh",
    formats=("obj", "csv"),
    projection: str | None = None,
) -> list[Path]:
    """Write ``<stem>.obj``, ``<stem>_scalars.csv`` and ``<stem>_singular.csv`` as requested."""
    out_dir = Path(out_dir)
    written = []
    unknown = set(formats) - {"obj", "csv"}
    if unknown:
        raise ValueError(f"unknown mesh formats {sorted(unknown)}")
    if "obj" in formats:
        written.append(atomic_write(out_dir / f"{stem}.obj", obj_text(mesh, projection)))
    if "csv" in formats:
        written.append(atomic_write(out_dir / f"{stem}_scalars.csv", scalars_text(mesh)))
        written.append(atomic_write(out_dir / f"{stem}_singular.csv", polylines_text(mesh)))
    return written


def read_obj(path) -> tuple[np.ndarray, np.ndarray]:
    verts, faces = [], []
    try:
        with open(path) as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                if parts[0] == "v":
                    verts.append([float(c) for c in parts[1:]])
                elif parts[0] == "f":
                    faces.append([int(c.split("/")[0]) - 1 for c in parts[1:]])
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    return np.array(verts, dtype=float), np.array(faces, dtype=int)


def read_scalars_csv(path) -> tuple[np.ndarray, dict]:
    """Parameters (complex) and per-vertex scalar columns from a sidecar CSV."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    head, body = rows[0], rows[1:]
    params = np.array([complex(float(r[1]), float(r[2])) for r in body])
    scalars = {name: np.array([float(r[3 + k]) for r in body]) for k, name in enumerate(head[3:])}
    return params, scalars
