"""Command-line front end: ``wlab curvature|verify|voss-lattice|build``.

Every command writes a JSON report with an ``errors`` list; the exit status
is nonzero exactly when that list is non-empty.  ``WLAB_THREADS`` caps the
number of threads used by the numerical libraries.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

THREAD_VARS = ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS", "NUMEXPR_NUM_THREADS")
FORMATS = ("obj", "csv", "json")


def apply_thread_cap(env=os.environ) -> int | None:
    """Propagate WLAB_THREADS to the BLAS/OpenMP thread variables (before numpy loads)."""
    raw = env.get("WLAB_THREADS")
    if raw is None or raw == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise SystemExit(f"WLAB_THREADS must be a positive integer, got {raw!r}")
    if n < 1:
        raise SystemExit(f"WLAB_THREADS must be a positive integer, got {raw!r}")
    for var in THREAD_VARS:
        env[var] = str(n)
    return n


def _clean(obj):
    """JSON-safe copy: complex -> [re, im], non-finite floats -> tagged strings."""
    import numpy as np

    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    from .cplx import INF

    if obj is INF:
        return "inf"
    return str(obj)


def _formats(text: str) -> tuple[str, ...]:
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [s for s in items if s not in FORMATS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"formats must be a comma list from {FORMATS}")
    return items


def _positive(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wlab", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, needs_input=True):
        sp.add_argument("--input", required=needs_input, help="JSON input document")
        sp.add_argument("--out", required=True, help="output directory")
        sp.add_argument("--grid-step", type=_positive, default=None, help="sampling grid spacing")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--format", type=_formats, default=FORMATS, help="comma list of obj,csv,json")

    c = sub.add_parser("curvature", help="closed-form vs finite-difference curvature on a lattice")
    common(c)
    c.add_argument("--h", type=_positive, default=1e-3, help="oracle stencil step")
    c.add_argument("--tol", type=_positive, default=1e-4, help="relative agreement tolerance")
    c.add_argument("--half-width", type=_positive, default=None, help="half width of the sample square")
    c.add_argument("--plain-stencil", action="store_true", help="disable Richardson extrapolation of the oracle")

    v = sub.add_parser("verify", help="exceptional values, completeness, omission bound, bound scan")
    common(v)
    v.add_argument("--refine", type=int, default=0)

    vl = sub.add_parser("voss-lattice", help="completeness/omission truth table over random Voss data")
    common(vl, needs_input=False)
    vl.add_argument("--m-max", type=int, default=4)
    vl.add_argument("--q-max", type=int, default=8)
    vl.add_argument("--configs", type=int, default=3)

    b = sub.add_parser("build", help="build a surface mesh from a representation document")
    common(b)
    b.add_argument("--projection", default=None, help="poincare|klein for H3, drop4|drop3 for C2")
    b.add_argument("--tree", choices=("bfs", "dfs"), default="bfs", help="spanning tree traversal")
    return p


# -- commands -------------------------------------------------------------------


def _weierstrass(doc):
    from .metric import WeierstrassData

    if not isinstance(doc.payload, WeierstrassData):
        from .errors import ParseError

        raise ParseError(f"command needs a weierstrass or voss document, got {doc.kind!r}")
    return doc.payload


def cmd_curvature(args, report: dict) -> None:
    import numpy as np

    from .io import load_document
    from .metric import compare_curvature
    from .surfaces.export import atomic_write

    data = _weierstrass(load_document(args.input))
    dom = data.domain
    step = args.grid_step or 0.05
    if dom.kind == "disk":
        half = dom.radius
    else:
        half = args.half_width or (max((abs(p - dom.center) for p in dom.punctures), default=0.0) + 1.0)
    n = int(round(2 * half / step)) + 1
    xs = dom.center.real + np.linspace(-half, half, n)
    ys = dom.center.imag + np.linspace(-half, half, n)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    z = (X + 1j * Y).ravel()
    if dom.kind == "disk":
        z = z[np.abs(z) < dom.radius]
    cmp = compare_curvature(data, z, args.h, richardson=not args.plain_stencil)
    err = cmp.rel_error
    adm = cmp.admissible
    Kf = cmp.K[np.isfinite(cmp.K)]
    report["summary"] = {
        "nodes": len(z),
        "admissible": int(adm.sum()),
        "h": args.h,
        "richardson": not args.plain_stencil,
        "tol": args.tol,
        "pass_fraction": cmp.pass_fraction(args.tol),
        "max_rel_error": float(np.max(err[adm], initial=0.0)),
        "median_rel_error": float(np.median(err[adm])) if adm.any() else 0.0,
        "max_K": float(Kf.max()) if Kf.size else 0.0,
        "min_K": float(Kf.min()) if Kf.size else 0.0,
        "nonpositive": bool(np.all(Kf <= 0)),
    }
    if "csv" in args.format:
        lines = ["node_id,re,im,K,K_fd,rel_error,admissible"]
        for i in range(len(z)):
            lines.append(
                f"{i},{float(z[i].real)!r},{float(z[i].imag)!r},{float(cmp.K[i])!r},{float(cmp.K_fd[i])!r},"
                f"{float(err[i])!r},{str(bool(adm[i])).lower()}"
            )
        report["files"].append(str(atomic_write(Path(args.out) / "curvature.csv", "\n".join(lines) + "\n")))


def cmd_verify(args, report: dict) -> None:
    from .domain import build_grid, is_complete
    from .io import load_document
    from .surfaces.export import atomic_write
    from .verify import bound_scan, check_picard, exceptional_values, truth_table_csv

    doc = load_document(args.input)
    data = _weierstrass(doc)
    comp = is_complete(data)
    pic = check_picard(data)
    summary = {
        "m": data.m,
        "complete": comp.complete,
        "witness": comp.witness,
        "ends": [{"end": e.end, "exponent": e.exponent, "divergent": e.divergent} for e in comp.ends],
        "picard": {"consistent": pic.consistent, "q": pic.q, "detail": pic.detail},
    }
    if not data.g.is_constant:
        exc = exceptional_values(data.g, data.domain)
        summary["exceptional"] = exc.to_json()
    step = args.grid_step or doc.grid.get("step", 0.1)
    grid = build_grid(data.domain, step, refine=args.refine)
    scan = bound_scan(data, grid)
    summary["bound_scan"] = scan.to_json()
    report["summary"] = summary
    row = {
        "m": data.m,
        "q": pic.q if pic.q is not None else 0,
        "complete": comp.complete,
        "exceptional_count": pic.q if pic.q is not None else 0,
        "picard_consistent": pic.consistent,
    }
    if "csv" in args.format:
        report["files"].append(str(atomic_write(Path(args.out) / "truth_table.csv", truth_table_csv([row]))))


def cmd_voss_lattice(args, report: dict) -> None:
    from .surfaces.export import atomic_write
    from .verify import truth_table_csv, voss_lattice

    if args.m_max < 1 or args.q_max < 2:
        from .errors import ParseError

        raise ParseError("need --m-max >= 1 and --q-max >= 2")
    rows = voss_lattice(args.m_max, args.q_max, args.seed, configs=args.configs)
    agree = sum(r["complete"] == (r["q"] <= r["m"] + 2) for r in rows)
    report["summary"] = {
        "rows": len(rows),
        "seed": args.seed,
        "completeness_matches_q_le_m_plus_2": agree,
        "exceptional_count_equals_q": sum(r["exceptional_count"] == r["q"] for r in rows),
        "picard_inconsistent": sum(not r["picard_consistent"] for r in rows),
    }
    if "csv" in args.format:
        report["files"].append(str(atomic_write(Path(args.out) / "voss_lattice.csv", truth_table_csv(rows))))


def cmd_build(args, report: dict) -> None:
    from .errors import ParseError
    from .io import load_document
    from .surfaces import FrontData, build, default_grid, export_mesh

    doc = load_document(args.input)
    if not isinstance(doc.payload, FrontData):
        raise ParseError(f"build needs a surface document, got {doc.kind!r}")
    fd = doc.payload
    grid = doc.param_grid(args.grid_step)
    if grid is None and args.grid_step:
        grid = default_grid(fd, step=args.grid_step)
    mesh = build(fd, grid, args.tree)
    report["summary"] = dict(mesh.report)
    mesh_formats = tuple(f for f in args.format if f in ("obj", "csv"))
    if mesh_formats:
        files = export_mesh(mesh, args.out, fd.kind, mesh_formats, args.projection)
        for name, comp in mesh.companions.items():
            files += export_mesh(comp, args.out, f"{fd.kind}_{name}", mesh_formats)
        report["files"].extend(str(f) for f in files)


COMMANDS = {
    "curvature": cmd_curvature,
    "verify": cmd_verify,
    "voss-lattice": cmd_voss_lattice,
    "build": cmd_build,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    apply_thread_cap()
    from .errors import WlabError
    from .surfaces.export import atomic_write

    report = {"command": args.command, "input": args.input, "seed": args.seed, "files": [], "errors": []}
    try:
        COMMANDS[args.command](args, report)
    except (WlabError, ValueError) as exc:
        report["errors"].append({"type": type(exc).__name__, "message": str(exc),
                                 "residuals": getattr(exc, "residuals", None)})
    out = Path(args.out)
    if "json" in args.format or report["errors"]:
        try:
            text = json.dumps(_clean(report), indent=2, sort_keys=True) + "\n"
            atomic_write(out / "report.json", text)
        except WlabError as exc:
            print(f"wlab: {exc}", file=sys.stderr)
            return 2
    for e in report["errors"]:
        print(f"wlab: {e['type']}: {e['message']}", file=sys.stderr)
    return 1 if report["errors"] else 0


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
