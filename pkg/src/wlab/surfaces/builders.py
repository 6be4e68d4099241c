"""Surface builders from holomorphic representation data.

All four builders share one pipeline: integrate a holomorphic form along
a spanning tree of a rectangular parameter grid, check that loop periods
around punctures vanish, sample the induced metric by finite differences,
and extract the singular curve where the relevant ratio has modulus one.
"""

from __future__ import annotations

import numpy as np

from ..cplx import RationalMap
from ..errors import (
    DegenerateMetric,
    ExactnessViolation,
    IdenticallyUnitModulus,
    NonUnimodularDrift,
    NotSimplyConnected,
    OdeStepFailure,
    PeriodViolation,
)
from ..metric import WeierstrassData
from . import integrate as itg
from .mesh import AMBIENT, FrontData, ParamGrid, SurfaceMesh
from .singular import extract_singular_set, map_polylines

DET_TOL = 1e-8
ODE_TOL = 1e-10
UNIT_TOL = 1e-12


def default_grid(fd: FrontData, half_width: float = 2.0, step: float = 0.02, exclusion: float | None = None) -> ParamGrid:
    """Square lattice centred on the base point, masking a small disk around each puncture."""
    n = int(round(2 * half_width / step)) + 1
    excl = 1.5 * step if exclusion is None else exclusion
    return ParamGrid.square(half_width, n, fd.base_point, punctures=fd.domain.punctures, exclusion=excl)


def _stack(maps: list[RationalMap]):
    def f(z):
        return np.stack([np.asarray(m(z), dtype=complex) for m in maps], axis=-1)

    return f


def _singular_points(fd: FrontData) -> list[complex]:
    return list(fd.domain.punctures)


def _check_periods(f, fd: FrontData, exc=PeriodViolation, what: str = "period") -> list[dict]:
    checks = itg.period_checks(f, fd.domain.punctures, _singular_points(fd))
    bad = [c for c in checks if not c.ok]
    if bad:
        raise exc(
            f"{what} condition fails around " + ", ".join(f"{c.center:g} (|Re| = {c.residual:.3g})" for c in bad),
            [c.to_json() for c in bad],
        )
    return [c.to_json() for c in checks]


# -- finite differences on the lattice --------------------------------------


def _fd_partials(grid: ParamGrid, V: np.ndarray):
    """Central differences X_u, X_v on the lattice (nan where a neighbour is masked)."""
    A = np.full(grid.shape + V.shape[1:], np.nan)
    A[grid.mask] = V
    Xu = np.full_like(A, np.nan)
    Xv = np.full_like(A, np.nan)
    Xu[1:-1] = (A[2:] - A[:-2]) / (2 * grid.dx)
    Xv[:, 1:-1] = (A[:, 2:] - A[:, :-2]) / (2 * grid.dy)
    lap = np.full_like(A, np.nan)
    lap[1:-1, 1:-1] = (A[2:, 1:-1] + A[:-2, 1:-1] - 2 * A[1:-1, 1:-1]) / grid.dx**2 + (
        A[1:-1, 2:] + A[1:-1, :-2] - 2 * A[1:-1, 1:-1]
    ) / grid.dy**2
    return Xu[grid.mask], Xv[grid.mask], lap[grid.mask]


def _fd_metric(grid: ParamGrid, V: np.ndarray, signature=None):
    Xu, Xv, _ = _fd_partials(grid, V)
    s = np.ones(V.shape[1]) if signature is None else np.asarray(signature, dtype=float)
    E = np.sum(s * Xu * Xu, axis=1)
    F = np.sum(s * Xu * Xv, axis=1)
    G = np.sum(s * Xv * Xv, axis=1)
    return E, F, G


def _rel_metric_error(E, F, G, target, scale) -> float:
    err = np.maximum.reduce([np.abs(E - target), np.abs(G - target), np.abs(F)]) / scale
    ok = np.isfinite(err)
    return float(np.max(err[ok], initial=0.0))


def _interior(grid: ParamGrid, V: np.ndarray) -> np.ndarray:
    _, _, lap = _fd_partials(grid, V[:, :1])
    return np.isfinite(lap[:, 0])


def _polylines(fd_field, grid: ParamGrid, vertices: np.ndarray, den=None):
    Z = grid.Z
    num = np.asarray(fd_field(Z), dtype=complex)
    dd = None if den is None else np.asarray(den(Z), dtype=complex)
    lines = extract_singular_set(num, grid.x, grid.y, grid.mask, den=dd)
    A = np.full(grid.shape + (vertices.shape[1],), np.nan)
    A[grid.mask] = vertices
    return lines, map_polylines(lines, A, grid.x, grid.y)


def _positive(values: np.ndarray, what: str):
    if not np.all(values > 0):
        i = int(np.argmin(values))
        raise DegenerateMetric(f"{what} is not positive at sample {i} (value {values[i]:.3g})")


# -- minimal surfaces --------------------------------------------------------


def minimal_forms(g: RationalMap, omega: RationalMap) -> list[RationalMap]:
    """φ = ((1−g²)/2, i(1+g²)/2, g)·ω̂."""
    g2 = g * g
    return [(1 - g2) * omega * 0.5, (1 + g2) * omega * 0.5j, g * omega]


def build_minimal(fd: FrontData, grid: ParamGrid | None = None, method: str = "bfs") -> SurfaceMesh:
    """X = 2 Re ∫ φ along spanning-tree paths; metric (1+|g|²)²|ω̂|²|dz|²."""
    if fd.kind != "minimal":
        raise ValueError("build_minimal needs minimal data")
    grid = grid or default_grid(fd)
    g, om = fd["g"], fd["omega"]
    phi = _stack(minimal_forms(g, om))
    periods = _check_periods(phi, fd)
    z = grid.points()
    P = phi(z)
    wd = WeierstrassData(g, om, 2)
    gz = g(z)
    lam = wd.factor_array(z)
    _positive(lam, "(1+|g|^2)^2 |omega|^2")

    tree = itg.tree_integral(phi, grid, fd.base_point, fd.poles(), method)
    X = 2 * tree.values.real

    sq = np.sum(np.abs(P) ** 2, axis=1)
    E, F, G = _fd_metric(grid, X)
    _, _, lap = _fd_partials(grid, X)
    interior = np.isfinite(lap[:, 0])
    harm = np.max(np.abs(lap[interior]), axis=1) / lam[interior]
    K = wd.curvature_array(z)
    report = {
        "kind": "minimal",
        "periods": periods,
        "nullity_residual": float(np.max(np.abs(np.sum(P**2, axis=1)) / sq)),
        "metric_identity_residual": float(np.max(np.abs(2 * sq - lam) / lam)),
        "harmonicity_residual": float(np.max(harm, initial=0.0)),
        "metric_fd_rel_error": _rel_metric_error(E, F, G, lam, lam),
        "spanning_tree": method,
        "vertex_count": len(z),
    }
    return SurfaceMesh(
        vertices=X,
        ambient=AMBIENT["minimal"],
        faces=grid.faces(),
        params=z,
        scalars={"conformal_factor": lam, "curvature": K, "abs_g": np.abs(gz)},
        report=report,
        grid=grid,
    )


# -- maxfaces ----------------------------------------------------------------


def maxface_forms(g: RationalMap, omega: RationalMap) -> list[RationalMap]:
    """(−2g, 1+g², i(1−g²))·ω̂, null for the Lorentz form −x₀²+x₁²+x₂²."""
    g2 = g * g
    return [g * omega * -2.0, (1 + g2) * omega, (1 - g2) * omega * 1j]


def _unimodular_constant(f: RationalMap) -> bool:
    return f.is_constant and abs(abs(f.eval(0j)) - 1.0) <= UNIT_TOL


def build_maxface(fd: FrontData, grid: ParamGrid | None = None, method: str = "bfs") -> SurfaceMesh:
    """f = Re ∫ (−2g, 1+g², i(1−g²))ω̂ in Minkowski 3-space (time coordinate first)."""
    if fd.kind != "maxface":
        raise ValueError("build_maxface needs maxface data")
    g, om = fd["g"], fd["omega"]
    if _unimodular_constant(g):
        raise IdenticallyUnitModulus("|g| is identically 1: the surface is singular everywhere")
    grid = grid or default_grid(fd)
    phi = _stack(maxface_forms(g, om))
    periods = _check_periods(phi, fd)
    z = grid.points()
    P = phi(z)
    gz, oz = g(z), om(z)
    ag2 = np.abs(gz) ** 2
    ds2 = (1 - ag2) ** 2 * np.abs(oz) ** 2
    dsig2 = (1 + ag2) ** 2 * np.abs(oz) ** 2
    _positive(dsig2, "(1+|g|^2)^2 |omega|^2")

    tree = itg.tree_integral(phi, grid, fd.base_point, fd.poles(), method)
    X = tree.values.real

    # nullity of the C³ lift (−2ig, 1+g², i(1−g²))ω̂, equivalent to Lorentz nullity of P
    lift = P * np.array([1j, 1, 1])
    nullity = np.abs(np.sum(lift**2, axis=1)) / np.sum(np.abs(lift) ** 2, axis=1)
    E, F, G = _fd_metric(grid, X, signature=(-1, 1, 1))
    with np.errstate(divide="ignore"):
        K = np.where(ag2 == 1, np.inf, 4 * np.abs(g.derivative()(z)) ** 2 / ((1 - ag2) ** 4 * np.abs(oz) ** 2))
    lines, lines3 = _polylines(g, grid, X)
    report = {
        "kind": "maxface",
        "periods": periods,
        "nullity_residual": float(np.max(nullity)),
        "lorentz_nullity_residual": float(np.max(np.abs(-P[:, 0] ** 2 + P[:, 1] ** 2 + P[:, 2] ** 2)
                                                 / np.sum(np.abs(P) ** 2, axis=1))),
        "ds2_le_dsigma2": bool(np.all(ds2 <= dsig2)),
        "max_ds2_over_dsigma2": float(np.max(ds2 / dsig2)),
        "metric_fd_rel_error": _rel_metric_error(E, F, G, ds2, dsig2),
        "singular_polyline_count": len(lines),
        "spanning_tree": method,
        "vertex_count": len(z),
    }
    return SurfaceMesh(
        vertices=X,
        ambient=AMBIENT["maxface"],
        faces=grid.faces(),
        params=z,
        scalars={"conformal_factor": ds2, "dsigma2_factor": dsig2, "curvature": K, "abs_g": np.sqrt(ag2)},
        singular_polylines=lines,
        singular_polylines_mesh=lines3,
        report=report,
        grid=grid,
    )


# -- improper affine fronts --------------------------------------------------


def _nested_fdg(Fp, Gp, a, b, Fa, poles, order: int = itg.ORDER) -> np.ndarray:
    """∫_a^b F dG along segments, with F(z) = F(a) + ∫_a^z F′ evaluated at each node."""
    x, w = itg._gauss_legendre(order)
    npc = itg._pieces(a, b, np.asarray(poles, dtype=complex))
    out = np.zeros(len(a), dtype=complex)
    for n in np.unique(npc):
        sel = np.flatnonzero(npc == n)
        step = max(1, itg.CHUNK // (n * order * order))
        for s in range(0, len(sel), step):
            idx = sel[s : s + step]
            d = (b[idx] - a[idx]) / n
            Fs = Fa[idx].astype(complex)
            acc = np.zeros(len(idx), dtype=complex)
            for p in range(n):
                z0 = a[idx] + p * d
                zj = z0[:, None] + d[:, None] * x[None, :]  # outer nodes
                zjk = z0[:, None, None] + d[:, None, None] * (x[None, :, None] * x[None, None, :])
                inner = np.einsum("k,ijk->ij", w, Fp(zjk.reshape(len(idx), -1)).reshape(zjk.shape))
                Fj = Fs[:, None] + d[:, None] * x[None, :] * inner
                acc += d * np.einsum("j,ij->i", w, Fj * Gp(zj))
                Fs = Fs + d * np.einsum("j,ij->i", w, Fp(zj))
            out[idx] = acc
    return out


def _loop_fdg(Fp, Gp, center, radius, n=itg.LOOP_NODES):
    z, dz = itg.circle(center, radius, n)
    dth = 2 * np.pi / n
    Fv = itg.periodic_antiderivative(Fp(z) * dz / dth) * dth
    vals = Fv * Gp(z)
    return complex(np.sum(vals * dz)), float(np.sum(np.abs(vals) * np.abs(dz)))


def build_affine(fd: FrontData, grid: ParamGrid | None = None, method: str = "bfs") -> SurfaceMesh:
    """ψ = (G+F̄, (|G|²−|F|²)/2 + Re(GF − 2∫F dG)) with F, G integrated from F′, G′."""
    if fd.kind != "affine":
        raise ValueError("build_affine needs affine data")
    grid = grid or default_grid(fd)
    Fpm, Gpm = fd["F_prime"], fd["G_prime"]
    Fp = lambda z: np.asarray(Fpm(z), dtype=complex)  # noqa: E731
    Gp = lambda z: np.asarray(Gpm(z), dtype=complex)  # noqa: E731
    pair = _stack([Fpm, Gpm])

    # F and G must be single valued; then Re(F dG) must be exact
    periods = _check_periods(lambda z: np.concatenate([pair(z), -1j * pair(z)], axis=1),
                             fd, ExactnessViolation, "single-valuedness")
    sing = _singular_points(fd)
    exact = []
    for c in fd.domain.punctures:
        r = itg.loop_radius(c, sing)
        total, length = _loop_fdg(Fp, Gp, c, r)
        rec = {"center": [c.real, c.imag], "radius": r, "integral": [total.real, total.imag],
               "ds_length": length, "residual": abs(total.real), "tol": itg.PERIOD_RTOL * length}
        rec["ok"] = rec["residual"] <= rec["tol"]
        exact.append(rec)
    bad = [e for e in exact if not e["ok"]]
    if bad:
        raise ExactnessViolation("Re(F dG) is not exact around " + ", ".join(str(e["center"]) for e in bad), bad)

    z = grid.points()
    fz, gz = Fp(z), Gp(z)
    tau = 2 * (np.abs(fz) ** 2 + np.abs(gz) ** 2)
    _positive(tau, "|dF|^2 + |dG|^2")

    poles = fd.poles()
    tree = itg.tree_integral(pair, grid, fd.base_point, poles, method)
    F0 = complex(fd.constants.get("F0", 0))
    G0 = complex(fd.constants.get("G0", 0))
    Fv = tree.values[:, 0] + F0
    Gv = tree.values[:, 1] + G0

    pts = z
    child = tree.order[1:]
    inc = np.zeros(len(pts), dtype=complex)
    if len(child):
        inc[child] = _nested_fdg(Fp, Gp, pts[tree.pred[child]], pts[child], Fv[tree.pred[child]], poles)
    start = _nested_fdg(Fp, Gp, np.array([fd.base_point]), np.array([pts[tree.root]]), np.array([F0]), poles)[0]
    H = itg.accumulate(inc, start, tree.order, tree.pred, tree.root)

    xc = Gv + np.conj(Fv)
    height = (np.abs(Gv) ** 2 - np.abs(Fv) ** 2) / 2 + np.real(Gv * Fv - 2 * H)
    psi = np.stack([xc.real, xc.imag, height], axis=1)
    n = np.conj(Fv) - Gv
    lift = np.stack([xc.real, n.real, xc.imag, n.imag], axis=1)  # L = x + i n in C² ≅ R⁴

    E, Fm, G = _fd_metric(grid, lift)
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = np.where(gz == 0, np.inf, np.abs(fz) / np.abs(np.where(gz == 0, 1, gz)))
    lines, lines3 = _polylines(Fpm, grid, psi, den=Gpm)
    lifted = SurfaceMesh(vertices=lift, ambient="C2_as_R4", faces=grid.faces(), params=z,
                         scalars={"dtau2_factor": tau}, grid=grid)
    report = {
        "kind": "affine",
        "periods": periods,
        "exactness": exact,
        "dtau2_fd_rel_error": _rel_metric_error(E, Fm, G, tau, tau),
        "nu_identically_zero": bool(Fpm.num.is_zero),
        "singular_polyline_count": len(lines),
        "spanning_tree": method,
        "vertex_count": len(z),
    }
    return SurfaceMesh(
        vertices=psi,
        ambient=AMBIENT["affine"],
        faces=grid.faces(),
        params=z,
        scalars={"dtau2_factor": tau, "abs_nu": nu, "h": np.abs(gz) ** 2 - np.abs(fz) ** 2},
        singular_polylines=lines,
        singular_polylines_mesh=lines3,
        report=report,
        grid=grid,
        companions={"C2": lifted},
    )


# -- flat fronts in hyperbolic space -------------------------------------------


def _coefficient(om: RationalMap, th: RationalMap, z: np.ndarray) -> np.ndarray:
    A = np.zeros(z.shape + (2, 2), dtype=complex)
    A[..., 0, 1] = th(z)
    A[..., 1, 0] = om(z)
    return A


def _rk4_transfer(om, th, a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    """Transfer matrices T with dT/dt = T·A(a + t(b−a))·(b−a), T(0) = I, n RK4 steps."""
    d = b - a
    T = np.broadcast_to(np.eye(2, dtype=complex), a.shape + (2, 2)).copy()
    h = 1.0 / n
    D = d[..., None, None]
    for k in range(n):
        t = k * h
        A0 = _coefficient(om, th, a + t * d) * D
        Ah = _coefficient(om, th, a + (t + h / 2) * d) * D
        A1 = _coefficient(om, th, a + (t + h) * d) * D
        k1 = T @ A0
        k2 = (T + (h / 2) * k1) @ Ah
        k3 = (T + (h / 2) * k2) @ Ah
        k4 = (T + h * k3) @ A1
        T = T + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
    return T


def transfer_matrices(om, th, a, b, tol: float = ODE_TOL, max_steps: int = 1 << 14) -> tuple[np.ndarray, np.ndarray]:
    """Edge transfer matrices with step-doubling error control; returns (T, steps used)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    out = np.empty(a.shape + (2, 2), dtype=complex)
    steps = np.zeros(a.shape, dtype=int)
    todo = np.arange(len(a))
    n = 1
    coarse = _rk4_transfer(om, th, a, b, n)
    while todo.size:
        fine = _rk4_transfer(om, th, a[todo], b[todo], 2 * n)
        if not np.all(np.isfinite(fine)):
            raise OdeStepFailure("non-finite transfer matrix (pole on an integration path?)")
        err = np.max(np.abs(fine - coarse), axis=(1, 2)) / 15.0
        scale = np.maximum(1.0, np.max(np.abs(fine), axis=(1, 2)))
        ok = err <= tol * scale
        out[todo[ok]] = fine[ok]
        steps[todo[ok]] = 2 * n
        todo = todo[~ok]
        coarse = fine[~ok]
        n *= 2
        if todo.size and 2 * n > max_steps:
            raise OdeStepFailure(f"step doubling did not reach {tol:g} within {max_steps} steps")
    return out, steps


def hyperboloid(L: np.ndarray) -> np.ndarray:
    """f = L L* as a point (x0, x1, x2, x3) of −x0²+x1²+x2²+x3² = −1."""
    f = L @ np.conj(np.swapaxes(L, -1, -2))
    a, d, b = f[..., 0, 0].real, f[..., 1, 1].real, f[..., 0, 1]
    return np.stack([(a + d) / 2, b.real, b.imag, (a - d) / 2], axis=-1)


def build_flat_front(fd: FrontData, grid: ParamGrid | None = None, method: str = "bfs") -> SurfaceMesh:
    """Solve dL = L·[[0, θ̂],[ω̂, 0]]dz from L(z₀) = I and map f = LL* to the hyperboloid."""
    if fd.kind != "flat_front":
        raise ValueError("build_flat_front needs flat_front data")
    grid = grid or default_grid(fd)
    for p in fd.domain.punctures:
        if grid.x[0] <= p.real <= grid.x[-1] and grid.y[0] <= p.imag <= grid.y[-1]:
            raise NotSimplyConnected(f"puncture {p} lies inside the parameter rectangle")
    om, th = fd["omega"], fd["theta"]
    z = grid.points()
    oz, tz = om(z), th(z)
    metric = np.abs(oz) ** 2 + np.abs(tz) ** 2
    _positive(metric, "|omega|^2 + |theta|^2")

    root = itg.root_node(grid, fd.base_point)
    order, pred = grid.spanning_tree(root, method)
    child = order[1:]
    T = np.empty((len(z), 2, 2), dtype=complex)
    steps = np.zeros(len(z), dtype=int)
    if len(child):
        T[child], steps[child] = transfer_matrices(om, th, z[pred[child]], z[child])
    T0, s0 = transfer_matrices(om, th, np.array([fd.base_point]), np.array([z[root]]))
    T[root], steps[root] = T0[0], s0[0]
    L = np.empty_like(T)
    L[root] = T[root]
    for i in child:
        L[i] = L[pred[i]] @ T[i]

    det = L[:, 0, 0] * L[:, 1, 1] - L[:, 0, 1] * L[:, 1, 0]
    drift = np.abs(det - 1)
    if drift.max() > DET_TOL:
        raise NonUnimodularDrift(f"det L drifts by {drift.max():.3g} > {DET_TOL:g}")
    X = hyperboloid(L)

    rho = th / om
    degenerate = _unimodular_constant(rho)
    if degenerate:
        lines, lines4 = [], []
    else:
        lines, lines4 = _polylines(th, grid, X, den=om)
    with np.errstate(divide="ignore", invalid="ignore"):
        arho = np.where(oz == 0, np.inf, np.abs(tz) / np.abs(np.where(oz == 0, 1, oz)))
    report = {
        "kind": "flat_front",
        "det_drift": float(drift.max()),
        "total_degeneracy": degenerate,
        "max_ode_steps": int(steps.max()),
        "singular_polyline_count": len(lines),
        "spanning_tree": method,
        "vertex_count": len(z),
    }
    mesh = SurfaceMesh(
        vertices=X,
        ambient=AMBIENT["flat_front"],
        faces=grid.faces(),
        params=z,
        scalars={"dsL2_factor": metric, "abs_rho": arho, "det_drift": drift},
        singular_polylines=lines,
        singular_polylines_mesh=lines4,
        report=report,
        grid=grid,
        lift=L,
    )
    return mesh


BUILDERS = {
    "minimal": build_minimal,
    "maxface": build_maxface,
    "affine": build_affine,
    "flat_front": build_flat_front,
}


def build(fd: FrontData, grid: ParamGrid | None = None, method: str = "bfs") -> SurfaceMesh:
    return BUILDERS[fd.kind](fd, grid, method)
