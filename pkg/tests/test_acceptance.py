"""Acceptance criteria.

Each test prints one ``[criterion N] PASS|FAIL`` line with its measured
values and pinned tolerances, and asserts both the numerical tolerance and
the wall-clock budget.
"""

import time

import numpy as np
import pytest
from _data import CATENOID, ENNEPER, lattice, random_nonconstant, random_poly, random_weierstrass

from wlab.cli import run
from wlab.cplx import RationalMap
from wlab.domain import build_grid
from wlab.errors import WindowEmpty
from wlab.metric import WeierstrassData, auxiliary_curvature_numeric, auxiliary_params, compare_curvature
from wlab.surfaces import FrontData, ParamGrid, build, hausdorff_to_circle, hyperboloid
from wlab.verify import check_picard, make_voss, voss_lattice

# pinned tolerances
CURV_REL_TOL = 1e-4
CURV_STEP = 1e-3
CURV_MIN_FRACTION = 0.99
ENNEPER_K0 = -4.0
ENNEPER_K0_TOL = 1e-12
FLAT_ABS_TOL = 1e-6
SCAN_REL_CHANGE = 0.10
RELABEL_TOL = 1e-10
HARMONIC_TOL = 1e-3
METRIC_REL_TOL = 1e-3
PERIOD_TOL = 1e-8
HAUSDORFF_TOL = 1e-3
NULLITY_TOL = 1e-10
PSI_TOL = 1e-8
HORO_TOL = 1e-6
DET_TOL = 1e-8

# runtime budgets in seconds
BUDGET = {1: 10, 2: 30, 3: 60, 4: 30, 5: 120, 6: 30, 7: 30, 8: 30, 9: 60}

SEED = 20240601


@pytest.fixture
def say(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {detail}")

    return emit


def lattice_rows(seed=SEED, configs=3):
    """Voss rows for m in 1..4, q in 2..m+4."""
    return [r for r in voss_lattice(4, 8, seed, configs=configs) if r["q"] <= r["m"] + 4]


def test_criterion_01_voss_truth_table(say):
    t = time.perf_counter()
    rows = lattice_rows()
    dt = time.perf_counter() - t
    expected = sum(3 * (m + 3) for m in range(1, 5))
    comp = sum(r["complete"] == (r["q"] <= r["m"] + 2) for r in rows)
    excc = sum(r["exceptional_count"] == r["q"] for r in rows)
    ok = len(rows) == expected and comp == len(rows) and excc == len(rows) and dt < BUDGET[1]
    say(1, ok, f"{len(rows)} rows; completeness matches {comp}/{len(rows)}; exceptional count matches "
               f"{excc}/{len(rows)}; {dt:.2f}s < {BUDGET[1]}s")
    assert ok


def test_criterion_02_picard_consistency(say):
    t = time.perf_counter()
    rows = lattice_rows()
    bad = sum(not r["picard_consistent"] for r in rows)
    rng = np.random.default_rng(SEED)
    checks = []
    for _ in range(20):
        g = random_nonconstant(rng, 3, 2)
        om = RationalMap(random_poly(rng, int(rng.integers(0, 3))), random_poly(rng, int(rng.integers(0, 3))))
        checks.append(check_picard(WeierstrassData(g, om, int(rng.integers(1, 5)))))
    bad += sum(not c.consistent for c in checks)
    dt = time.perf_counter() - t
    ok = bad == 0 and dt < BUDGET[2]
    say(2, ok, f"{bad} inconsistent of {len(rows)} lattice + {len(checks)} random rows "
               f"({sum(c.complete for c in checks)} random complete); {dt:.2f}s < {BUDGET[2]}s")
    assert ok


def test_criterion_03_curvature_oracle(say):
    t = time.perf_counter()
    rng = np.random.default_rng(SEED)
    datasets = [("enneper", WeierstrassData(ENNEPER["g"], ENNEPER["omega"], 2)),
                ("catenoid", WeierstrassData(CATENOID["g"], CATENOID["omega"], 2))]
    datasets += [(f"random{k}", random_weierstrass(rng)) for k in range(10)]
    z = lattice(2.0, 0.05)
    worst, nonpos = 1.0, True
    for _, d in datasets:
        cmp = compare_curvature(d, z, CURV_STEP)
        worst = min(worst, cmp.pass_fraction(CURV_REL_TOL))
        K = cmp.K[np.isfinite(cmp.K)]
        nonpos &= bool(np.all(K <= 0))
    K0 = datasets[0][1].curvature_array(np.array([0j]))[0]
    dt = time.perf_counter() - t
    ok = worst >= CURV_MIN_FRACTION and nonpos and abs(K0 - ENNEPER_K0) <= ENNEPER_K0_TOL and dt < BUDGET[3]
    say(3, ok, f"min pass fraction {worst:.4f} >= {CURV_MIN_FRACTION} at rel {CURV_REL_TOL:g}, h={CURV_STEP:g} "
               f"over {len(datasets)} datasets x {len(z)} nodes; K<=0 {nonpos}; Enneper K(0)={K0:.15g}; "
               f"{dt:.2f}s < {BUDGET[3]}s")
    assert ok


def flatness_samples(data):
    pts = np.array(data.domain.punctures)
    z = lattice(2.5, 0.1, complex(np.round(pts.mean(), 1)))
    return z[np.min(np.abs(z[:, None] - pts[None, :]), axis=1) > 0.01]


def test_criterion_04_auxiliary_flatness(say):
    t = time.perf_counter()
    cases = [(1, 4, [0, 1, 1j]), (2, 5, [0, 1, 1j, -1])]
    details, ok = [], True
    for m, q, pts in cases:
        data = make_voss(m, q, pts)
        params = auxiliary_params(m, q, exceptional_values=pts)
        z = flatness_samples(data)
        K = auxiliary_curvature_numeric(data, params, z, h=1e-10, dps=60)
        adm = np.isfinite(K)
        worst = float(np.max(np.abs(K[adm])))
        ok &= worst <= FLAT_ABS_TOL and adm.sum() == len(z)
        details.append(f"m={m},q={q} eta={params.eta:.4g} lambda={params.lam:.4g} max|K|={worst:.2e} "
                       f"on {int(adm.sum())} pts")
    rejected = 0
    total = 0
    for m in range(1, 5):
        for q in range(2, m + 3):
            total += 1
            try:
                auxiliary_params(m, q)
            except WindowEmpty:
                rejected += 1
    dt = time.perf_counter() - t
    ok &= rejected == total and dt < BUDGET[4]
    say(4, ok, "; ".join(details) + f" (tol {FLAT_ABS_TOL:g}); window rejects {rejected}/{total} q<=m+2; "
                                    f"{dt:.2f}s < {BUDGET[4]}s")
    assert ok


def test_criterion_05_bound_scan_stability(say):
    from wlab.verify import bound_scan

    t = time.perf_counter()
    data = make_voss(1, 4, [0, 1, 1j])
    sups = [bound_scan(data, build_grid(data.domain, 0.1, refine=r)).sup_product for r in range(3)]
    changes = [abs(b - a) / abs(a) for a, b in zip(sups, sups[1:])]
    relabeled = make_voss(1, 4, [1j, 0, 1])
    other = bound_scan(relabeled, build_grid(relabeled.domain, 0.1)).sup_product
    drel = abs(other - sups[0]) / abs(sups[0])
    dt = time.perf_counter() - t
    ok = max(changes) < SCAN_REL_CHANGE and drel <= RELABEL_TOL and dt < BUDGET[5]
    say(5, ok, f"sup |K|^1/2 d = {', '.join(f'{s:.6f}' for s in sups)} (refine 0,1,2); max change "
               f"{max(changes):.2%} < {SCAN_REL_CHANGE:.0%}; relabel diff {drel:.1e} <= {RELABEL_TOL:g}; "
               f"{dt:.2f}s < {BUDGET[5]}s")
    assert ok


def test_criterion_06_minimal_builder(say):
    t = time.perf_counter()
    enn = FrontData("minimal", {"g": ENNEPER["g"], "omega": ENNEPER["omega"]})
    r = build(enn).report
    cat = FrontData("minimal", {"g": CATENOID["g"], "omega": CATENOID["omega"]}, base_point=1)
    periods = build(cat).report["periods"]
    period_re = max(p["residual"] for p in periods)
    dt = time.perf_counter() - t
    ok = (r["harmonicity_residual"] <= HARMONIC_TOL and r["metric_fd_rel_error"] <= METRIC_REL_TOL
          and period_re <= PERIOD_TOL and dt < BUDGET[6])
    say(6, ok, f"Enneper harmonicity {r['harmonicity_residual']:.2e} <= {HARMONIC_TOL:g}; metric rel "
               f"{r['metric_fd_rel_error']:.2e} <= {METRIC_REL_TOL:g}; catenoid max|Re period| {period_re:.2e} "
               f"<= {PERIOD_TOL:g}; {dt:.2f}s < {BUDGET[6]}s")
    assert ok


def test_criterion_07_maxface_builder(say):
    t = time.perf_counter()
    fd = FrontData("maxface", {"g": ENNEPER["g"], "omega": ENNEPER["omega"]})
    mesh = build(fd)
    hd = hausdorff_to_circle(mesh.singular_polylines)
    r = mesh.report
    dt = time.perf_counter() - t
    ok = hd <= HAUSDORFF_TOL and r["nullity_residual"] <= NULLITY_TOL and r["ds2_le_dsigma2"] and dt < BUDGET[7]
    say(7, ok, f"singular set Hausdorff to |z|=1 {hd:.2e} <= {HAUSDORFF_TOL:g} ({len(mesh.singular_polylines)} "
               f"polyline); nullity {r['nullity_residual']:.2e} <= {NULLITY_TOL:g}; ds2<=dsigma2 "
               f"{r['ds2_le_dsigma2']}; {dt:.2f}s < {BUDGET[7]}s")
    assert ok


def test_criterion_08_affine_builder(say):
    t = time.perf_counter()
    fd = FrontData("affine", {"F_prime": RationalMap.constant(0), "G_prime": RationalMap.constant(1)})
    mesh = build(fd)
    z = mesh.params
    want = np.stack([z.real, z.imag, np.abs(z) ** 2 / 2], axis=1)
    err = float(np.max(np.abs(mesh.vertices - want)))
    nu0 = mesh.report["nu_identically_zero"] and bool(np.all(mesh.scalars["abs_nu"] == 0))
    empty = mesh.singular_polylines == []
    tau_err = mesh.report["dtau2_fd_rel_error"]
    dt = time.perf_counter() - t
    ok = err <= PSI_TOL and nu0 and empty and tau_err <= METRIC_REL_TOL and dt < BUDGET[8]
    say(8, ok, f"paraboloid max|psi - (z,|z|^2/2)| {err:.2e} <= {PSI_TOL:g}; nu==0 {nu0}; singular set empty "
               f"{empty}; dtau2 rel {tau_err:.2e} <= {METRIC_REL_TOL:g}; {dt:.2f}s < {BUDGET[8]}s")
    assert ok


def test_criterion_09_flat_front_builder(say):
    t = time.perf_counter()
    one, zero, ident = RationalMap.constant(1), RationalMap.constant(0), RationalMap.identity()
    horo = build(FrontData("flat_front", {"omega": one, "theta": zero}))
    z = horo.params
    L = np.zeros((len(z), 2, 2), complex)
    L[:, 0, 0] = L[:, 1, 1] = 1
    L[:, 1, 0] = z
    horo_err = float(np.max(np.abs(horo.vertices - hyperboloid(L))))

    rng = np.random.default_rng(SEED)
    drifts = []
    for _ in range(10):
        om = RationalMap(random_poly(rng, int(rng.integers(0, 3)), 0.5), random_poly(rng, 0))
        th = RationalMap(random_poly(rng, int(rng.integers(0, 3)), 0.5), random_poly(rng, 0))
        fd = FrontData("flat_front", {"omega": om, "theta": th})
        mesh = build(fd, ParamGrid.square(1.0, 41, 0j))
        drifts.append(mesh.report["det_drift"])

    rho = build(FrontData("flat_front", {"omega": one, "theta": ident}))
    hd = hausdorff_to_circle(rho.singular_polylines)
    dt = time.perf_counter() - t
    ok = horo_err <= HORO_TOL and max(drifts) <= DET_TOL and hd <= HAUSDORFF_TOL and dt < BUDGET[9]
    say(9, ok, f"horosphere err {horo_err:.2e} <= {HORO_TOL:g}; max det drift {max(drifts):.2e} <= {DET_TOL:g} "
               f"over {len(drifts)} datasets; |rho|=1 Hausdorff {hd:.2e} <= {HAUSDORFF_TOL:g}; "
               f"{dt:.2f}s < {BUDGET[9]}s")
    assert ok


def test_criterion_10_determinism(say, tmp_path):
    blobs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        rc = run(["voss-lattice", "--out", str(out), "--seed", str(SEED), "--format", "csv,json"])
        assert rc == 0
        blobs.append((out / "voss_lattice.csv").read_bytes())
    ok = blobs[0] == blobs[1] and len(blobs[0]) > 0
    say(10, ok, f"voss-lattice CSV byte-identical across runs: {ok} ({len(blobs[0])} bytes, seed {SEED})")
    assert ok

