"""Acceptance criteria, one test per criterion.

Each test appends a single PASS/FAIL line to the session summary before
asserting, so the summary lists every criterion even when some fail.
"""

import json
import math
import time

import numpy as np

from isopar import chart, cli, geodesics, hypersurfaces, tensors
from isopar.verify import base_a, base_b, lattice_bases

PI = math.pi
SEED = 12345


def record(log, number, title, ok, detail):
    log.append(f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} | {detail}")
    assert ok, detail


def test_criterion_01_lattice_ricci(acceptance_log):
    tol = 1e-9
    worst, misses, coord_worst = 0.0, [], 0.0
    for n in (2, 3, 4, 5):
        for a in lattice_bases(n):
            rho = chart.count_even_entries(a)
            expected = PI**2 * (1 - n + 4 * rho / 3)
            got = tensors.ricci_normal(a, "unit")
            err = abs(got - expected)
            worst = max(worst, err)
            coord_worst = max(coord_worst, abs(tensors.ricci_normal(a, "coordinate") - expected))
            if err > tol:
                misses.append(f"n={n} a={a[:-1].astype(int).tolist()} got {got:.6g} want {expected:.6g}")
    detail = (f"max |Ric(nu,nu) - pi^2(1-n+4rho/3)| = {worst:.3g} (tol {tol:g}), {len(misses)} bases off; "
              f"Ric(d_n,d_n) matches to {coord_worst:.2g}; unit value is that over 9^rho")
    record(acceptance_log, 1, "Ricci lattice formula", worst <= tol, detail)


def test_criterion_02_headline(acceptance_log):
    tol = 1e-6
    t0 = time.perf_counter()
    a, b = base_a(3), base_b(3)
    ca = hypersurfaces.integrate_riccati(a, 0.05)
    cb = hypersurfaces.integrate_riccati(b, 0.05)
    slope_a, slope_b = ca.initial_slope, cb.initial_slope
    fd_a, fd_b = hypersurfaces.fd_initial_slope(ca), hypersurfaces.fd_initial_slope(cb)
    coord_a = hypersurfaces.integrate_riccati(a, 0.004, normal="coordinate").initial_slope
    elapsed = time.perf_counter() - t0
    err_a, err_b = abs(slope_a - 2 * PI**2 / 3), abs(slope_b + 2 * PI**2)
    signs = ca.H[-1] > 0 > cb.H[-1]
    ok = err_a <= tol and err_b <= tol and signs and elapsed < 1.0
    detail = (f"dH/dr(0) a={slope_a:.7g} (fd {fd_a:.7g}, want {2 * PI**2 / 3:.7g}), "
              f"b={slope_b:.7g} (fd {fd_b:.7g}, want {-2 * PI**2:.7g}); "
              f"H(0.05) a={ca.H[-1]:.4g} b={cb.H[-1]:.4g} signs {'ok' if signs else 'wrong'}; "
              f"along d_n a slope={coord_a:.7g}; {elapsed:.2f} s")
    record(acceptance_log, 2, "headline verdict n=3", ok, detail)


def test_criterion_03_closed_form_geodesics(acceptance_log):
    tol = 1e-8
    errs = []
    t0 = time.perf_counter()
    for rho in range(3):
        a = np.array([0.0] * rho + [1.0] * (2 - rho) + [0.0])
        traj = geodesics.integrate_geodesic(a, (0, 0, 1), 1.0)
        errs.append(float(np.max(np.abs(traj.endpoint - geodesics.vertical_geodesic(a, 1.0)[0]))))
    elapsed = time.perf_counter() - t0
    ok = max(errs) < tol and elapsed < 1.0
    record(acceptance_log, 3, "closed-form geodesics", ok,
           f"endpoint errors {', '.join(f'{e:.2g}' for e in errs)} (tol {tol:g}); {elapsed:.2f} s")


def test_criterion_04_oracle_agreement(acceptance_log):
    tol = 1e-3
    rows = []
    for name, base in (("a", base_a(3)), ("b", base_b(3))):
        for r in (0.02, 0.05, 0.1):
            h_ric = hypersurfaces.mean_curvature_at(base, r)
            h_fd = hypersurfaces.parallel_mean_curvature_fd(base, r)
            rows.append((name, r, abs(h_ric - h_fd)))
    worst = max(d for *_, d in rows)
    record(acceptance_log, 4, "Riccati vs finite-difference oracle", worst < tol,
           f"max |H_riccati - H_fd| = {worst:.3g} over {len(rows)} cases (tol {tol:g})")


def test_criterion_05_christoffel_routes(acceptance_log):
    tol_gen, tol_fd = 1e-10, 1e-6
    rng = np.random.default_rng(SEED)
    worst_gen = worst_fd = 0.0
    for n in (2, 3, 4):
        for p in rng.uniform(-2, 2, (1000, n)):
            G = tensors.christoffel_closed(p)
            worst_gen = max(worst_gen, float(np.max(np.abs(G - tensors.christoffel_general(p)))))
            worst_fd = max(worst_fd, float(np.max(np.abs(G - tensors.christoffel_fd(p)))))
    record(acceptance_log, 5, "Christoffel triple agreement", worst_gen < tol_gen and worst_fd < tol_fd,
           f"closed vs general {worst_gen:.2g} (tol {tol_gen:g}), closed vs fd {worst_fd:.2g} (tol {tol_fd:g})")


def test_criterion_06_conformal_flatness(acceptance_log):
    tol_w, tol_c = 1e-8, 1e-7
    rng = np.random.default_rng(SEED)
    weyl_max = max(float(np.max(np.abs(tensors.weyl(p))))
                   for n in (4, 5) for p in rng.uniform(-2, 2, (500, n)))
    cotton_max = max(float(np.max(np.abs(tensors.cotton(p)))) for p in rng.uniform(-2, 2, (500, 3)))
    record(acceptance_log, 6, "conformal flatness", weyl_max < tol_w and cotton_max < tol_c,
           f"max |Weyl| = {weyl_max:.2g} (tol {tol_w:g}), max |Cotton| = {cotton_max:.2g} (tol {tol_c:g})")


def test_criterion_07_totally_geodesic_leaves(acceptance_log):
    tol = 1e-12
    rng = np.random.default_rng(SEED)
    worst, worst_k = 0.0, 0.0
    count = 0
    for s in rng.uniform(-2, 2, 5):
        leaf = hypersurfaces.Leaf(float(s))
        for q in rng.uniform(-2, 2, (100, 2)):
            S = hypersurfaces.leaf_shape_operator(leaf.point(q), leaf)
            worst = max(worst, float(np.max(np.abs(S))))
            worst_k = max(worst_k, float(np.max(np.abs(hypersurfaces.principal_curvatures(S)))))
            count += 1
    record(acceptance_log, 7, "totally geodesic leaves", worst <= tol and worst_k <= tol,
           f"max |S| = {worst:.2g}, max |kappa| = {worst_k:.2g} at {count} points (tol {tol:g})")


def test_criterion_08_structural_invariants(acceptance_log):
    rng = np.random.default_rng(SEED)
    pts = rng.uniform(-2, 2, (200, 3))
    sym = max(tensors.riemann_symmetry_residual(tensors.riemann(p).riemann)
              / max(1.0, float(np.max(np.abs(tensors.riemann(p).riemann)))) for p in pts)
    compat = max(tensors.metric_compatibility_residual(p) for p in pts)
    drift = max(geodesics.speed_drift(geodesics.integrate_geodesic(p, rng.normal(size=3), 1.0))
                for p in pts[:10])
    jac = max(abs(tensors.jacobi_operator(p).trace - tensors.ricci_normal(p)) for p in pts)
    trace_id = max(hypersurfaces.trace_identity_residual(hypersurfaces.integrate_riccati(p, 0.25))
                   for p in [base_a(3), base_b(3), *pts[:3]])
    checks = {"symmetries": (sym, 1e-9), "compatibility": (compat, 1e-9), "speed drift": (drift, 1e-8),
              "Jacobi trace": (jac, 1e-9), "dH/dr identity": (trace_id, 1e-6)}
    ok = all(v < t for v, t in checks.values())
    record(acceptance_log, 8, "structural invariants", ok,
           ", ".join(f"{k} {v:.2g} (tol {t:g})" for k, (v, t) in checks.items()))


def test_criterion_09_torus_descent(acceptance_log):
    tol = 1e-12
    rng = np.random.default_rng(SEED)
    worst = {"g": 0.0, "gamma": 0.0, "riemann": 0.0}

    def rel(x, y):
        return float(np.max(np.abs(x - y))) / max(1.0, float(np.max(np.abs(x))))

    for p in rng.uniform(-2, 2, (200, 3)):
        b0 = tensors.riemann(p)
        for i in range(3):
            q = p.copy()
            q[i] += 2.0
            b1 = tensors.riemann(q)
            worst["g"] = max(worst["g"], rel(b0.g, b1.g))
            worst["gamma"] = max(worst["gamma"], rel(b0.christoffel, b1.christoffel))
            worst["riemann"] = max(worst["riemann"], rel(b0.riemann, b1.riemann))
    record(acceptance_log, 9, "torus descent", max(worst.values()) <= tol,
           ", ".join(f"{k} {v:.2g}" for k, v in worst.items()) + f" (relative, tol {tol:g})")


def test_criterion_10_verify_cli(acceptance_log, tmp_path):
    reports, times, codes = [], [], []
    for k in range(2):
        out = tmp_path / f"verdict{k}.json"
        t0 = time.perf_counter()
        codes.append(cli.main(["verify", "--dim", "3", "--seed", "0", "--format", "json", "--output", str(out)]))
        times.append(time.perf_counter() - t0)
        reports.append(json.loads(out.read_text()))
    same = reports[0] == reports[1]
    ok = codes == [0, 0] and reports[0]["overall"] == "pass" and same and max(times) < 30
    failing = [c["id"] for c in reports[0]["checks"] if c["status"] == "fail"]
    record(acceptance_log, 10, "verify --dim 3", ok,
           f"exit codes {codes}, overall {reports[0]['overall']}, failing {failing or 'none'}, "
           f"deterministic {same}, runtime {max(times):.1f} s (limit 30 s)")

