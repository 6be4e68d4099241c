"""Minimal surfaces, maxfaces, improper affine fronts and flat fronts from rational data."""

from .builders import (
    build,
    build_affine,
    build_flat_front,
    build_maxface,
    build_minimal,
    default_grid,
    hyperboloid,
)
from .export import export_mesh, project, read_obj, read_scalars_csv
from .mesh import FrontData, ParamGrid, SurfaceMesh
from .singular import extract_singular_set, hausdorff, hausdorff_to_circle

__all__ = [
    "FrontData",
    "ParamGrid",
    "SurfaceMesh",
    "build",
    "build_minimal",
    "build_maxface",
    "build_affine",
    "build_flat_front",
    "default_grid",
    "hyperboloid",
    "extract_singular_set",
    "hausdorff",
    "hausdorff_to_circle",
    "export_mesh",
    "project",
    "read_obj",
    "read_scalars_csv",
]
