"""Conformal metrics from rational Weierstrass data.

Curvature, completeness, exceptional values and omission bounds
(``cplx``, ``metric``, ``domain``, ``verify``) plus mesh builders for
minimal surfaces, maxfaces, improper affine fronts and flat fronts
(``surfaces``).  Kept import-free so the CLI can cap thread counts before
numpy loads.
"""

__version__ = "0.1.0"
