"""End-to-end verification of the example: the leaves are totally geodesic,
yet the mean curvature of their parallel hypersurfaces is not constant.

``run_all`` executes ten groups of checks (C1..C10), each producing one or
more ``CheckResult``; a failing or crashing check never stops the others.
Random sample points come from ``numpy.random.default_rng`` seeded per check
group, so a report depends only on ``(n, config)``.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import chart, geodesics, hypersurfaces, tensors
from .chart import PI

log = logging.getLogger(__name__)

SCHEMA = "isopar.verdict/1"


@dataclass(frozen=True)
class VerifyConfig:
    seed: int = 0
    samples: int = 1000
    flatness_samples: int = 500
    periodicity_samples: int = 200
    leaves: int = 5
    points_per_leaf: int = 100
    box: float = 2.0
    step: float = 1e-3
    r_max: float = 0.25
    headline_r: float = 0.05
    oracle_radii: tuple[float, ...] = (0.02, 0.05, 0.1)
    oracle_eps: float = 1e-3
    fd_eps: float = 1e-5
    tol_exact: float = 1e-12
    tol_algebraic: float = 1e-10
    tol_structural: float = 1e-9
    tol_integrator: float = 1e-8
    tol_derivative: float = 1e-6
    tol_fd: float = 1e-6
    tol_oracle: float = 1e-3
    tol_weyl: float = 1e-8
    tol_cotton: float = 1e-7
    tol_symmetry: float = 1e-8

    def __post_init__(self):
        for name, value in asdict(self).items():
            if name.startswith(("tol_", "step", "box", "r_max", "headline_r", "oracle_eps", "fd_eps")):
                if not value > 0:
                    raise ValueError(f"{name} must be positive, got {value}")
        if self.samples < 1 or self.flatness_samples < 1 or self.periodicity_samples < 1:
            raise ValueError("sample counts must be positive")

    @property
    def integrator(self) -> geodesics.IntegratorConfig:
        return geodesics.IntegratorConfig(step=self.step)


@dataclass
class CheckResult:
    id: str
    description: str
    status: str  # "pass", "fail" or "skipped"
    metric: float
    tolerance: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.status != "fail"


@dataclass
class VerdictReport:
    n: int
    config: dict
    checks: list[CheckResult]
    headline: dict

    @property
    def overall(self) -> str:
        return "pass" if all(c.passed for c in self.checks) else "fail"

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA,
            "dimension": self.n,
            "config": self.config,
            "overall": self.overall,
            "headline": self.headline,
            "checks": [asdict(c) for c in self.checks],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def table(self) -> str:
        rows = [f"{'id':<5} {'status':<8} {'metric':>12} {'tolerance':>10}  description"]
        for c in self.checks:
            rows.append(f"{c.id:<5} {c.status:<8} {c.metric:>12.4g} {c.tolerance:>10.1g}  {c.description}")
        rows.append("")
        rows.append(f"overall: {self.overall}")
        if self.headline:
            rows.append(self.headline.get("conclusion", ""))
        return "\n".join(rows)


def _status(ok: bool) -> str:
    return "pass" if ok else "fail"


def _leq(cid, desc, metric, tol, **details) -> CheckResult:
    metric = float(metric)
    return CheckResult(cid, desc, _status(metric <= tol), metric, tol, _clean(details))


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    """``max|a - b|`` relative to ``max(1, max|a|)``."""
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(a)))))


def lattice_bases(n: int):
    """All base points with leaf coordinates in {0, 1} on the leaf x_n = 0."""
    for bits in np.ndindex(*(2,) * (n - 1)):
        yield np.array([*bits, 0.0], dtype=float)


def base_a(n: int) -> np.ndarray:
    return np.zeros(n)


def base_b(n: int) -> np.ndarray:
    x = np.ones(n)
    x[-1] = 0.0
    return x


def lattice_ricci(n: int, rho: int) -> float:
    """``pi^2 (1 - n + 4 rho / 3)``: Ric(d_n, d_n) at a lattice point."""
    return PI**2 * (1 - n + 4 * rho / 3)


# ---------------------------------------------------------------------------
# checks; each takes (n, cfg, rng) and returns a list of CheckResult
# ---------------------------------------------------------------------------

def _points(rng, cfg, n, count):
    return rng.uniform(-cfg.box, cfg.box, size=(count, n))


def check_isometries(n, cfg, rng):
    pts = _points(rng, cfg, n, cfg.periodicity_samples)
    per = {"g": 0.0, "gamma": 0.0, "riemann": 0.0}
    for p in pts:
        g0 = chart.metric_at(p).g
        G0 = tensors.christoffel_closed(p)
        R0 = tensors.riemann(p).riemann
        for i in range(n):
            q = p.copy()
            q[i] += 2.0
            per["g"] = max(per["g"], _rel(g0, chart.metric_at(q).g))
            per["gamma"] = max(per["gamma"], _rel(G0, tensors.christoffel_closed(q)))
            per["riemann"] = max(per["riemann"], _rel(R0, tensors.riemann(q).riemann))
    iso_dev = 0.0
    for p in pts:
        g0 = chart.metric_at(p).g
        for iso in chart.all_isometries(n):
            iso_dev = max(iso_dev, _rel(g0, chart.pullback_metric(iso, p)))
    return [
        _leq("C1a", "torus descent: g, Gamma, Riemann are 2-periodic in every coordinate",
             max(per.values()), cfg.tol_exact, samples=len(pts), **per),
        _leq("C1b", "reflections and translations pull g back to itself",
             iso_dev, cfg.tol_exact, samples=len(pts), isometries=2 * n),
    ]


def check_christoffel(n, cfg, rng):
    pts = _points(rng, cfg, n, cfg.samples)
    dev_general = dev_fd = 0.0
    for p in pts:
        c = tensors.christoffel_closed(p)
        dev_general = max(dev_general, float(np.max(np.abs(c - tensors.christoffel_general(p)))))
        dev_fd = max(dev_fd, float(np.max(np.abs(c - tensors.christoffel_fd(p, cfg.fd_eps)))))
    return [
        _leq("C2a", "closed-form Christoffel symbols match the general Levi-Civita formula",
             dev_general, cfg.tol_algebraic, samples=len(pts)),
        _leq("C2b", "closed-form Christoffel symbols match finite differences of g",
             dev_fd, cfg.tol_fd, samples=len(pts), eps=cfg.fd_eps),
    ]


def check_flatness(n, cfg, rng):
    if n == 2:
        return [CheckResult("C3", "conformal flatness", "skipped", 0.0, 0.0,
                            {"note": "skipped: no local conformal invariant in dimension 2"})]
    pts = _points(rng, cfg, n, cfg.flatness_samples)
    if n == 3:
        worst = max(float(np.max(np.abs(tensors.cotton(p)))) for p in pts)
        return [_leq("C3", "Cotton tensor vanishes (conformally flat, n = 3)", worst, cfg.tol_cotton,
                     tensor="cotton", samples=len(pts))]
    worst = trace = 0.0
    for p in pts:
        W = tensors.weyl(p)
        g_inv = chart.metric_at(p).g_inv
        worst = max(worst, float(np.max(np.abs(W))))
        trace = max(trace, float(np.max(np.abs(np.einsum("il,ijkl->jk", g_inv, W)))))
    return [_leq("C3", "Weyl tensor vanishes (conformally flat, n >= 4)", max(worst, trace), cfg.tol_weyl,
                 tensor="weyl", samples=len(pts), max_entry=worst, max_trace=trace)]


def check_riemann(n, cfg, rng):
    pts = _points(rng, cfg, n, cfg.samples)
    sym = compat = trace = eq3 = 0.0
    for p in pts:
        b = tensors.riemann(p)
        sym = max(sym, tensors.riemann_symmetry_residual(b.riemann))
        compat = max(compat, tensors.metric_compatibility_residual(p, b.christoffel))
        jac = tensors.jacobi_operator(p)
        trace = max(trace, abs(jac.trace - tensors.ricci_normal(p)))
        eq3 = max(eq3, float(np.max(np.abs(jac.coordinate - b.riemann[:, -1, -1, :]))))
    return [
        _leq("C4a", "Riemann pair symmetries and first Bianchi identity", sym, cfg.tol_structural, samples=len(pts)),
        _leq("C4b", "metric compatibility of the connection", compat, cfg.tol_structural, samples=len(pts)),
        _leq("C4c", "trace of the orthonormal Jacobi operator equals Ric(nu, nu)", trace, cfg.tol_structural,
             samples=len(pts)),
        _leq("C4d", "term-by-term Jacobi formula equals R(d_i, d_n, d_n, d_j)", eq3, cfg.tol_structural,
             samples=len(pts)),
    ]


def check_lattice_ricci(n, cfg, rng):
    coord_dev = unit_dev = 0.0
    cases = []
    for p in lattice_bases(n):
        rho = chart.count_even_entries(p)
        expected = lattice_ricci(n, rho)
        got_coord = tensors.ricci_normal(p, "coordinate")
        got_unit = tensors.ricci_normal(p, "unit")
        coord_dev = max(coord_dev, abs(got_coord - expected))
        unit_dev = max(unit_dev, abs(got_unit - expected / 9.0**rho))
        cases.append({"base": p, "rho": rho, "ric_coordinate": got_coord, "ric_unit": got_unit,
                      "expected_coordinate": expected})
    return [
        _leq("C5a", "Ric(d_n, d_n) = pi^2 (1 - n + 4 rho / 3) on all lattice bases",
             coord_dev, cfg.tol_structural, cases=cases),
        _leq("C5b", "Ric(nu, nu) = 9^-rho pi^2 (1 - n + 4 rho / 3) for the unit normal",
             unit_dev, cfg.tol_structural),
    ]


def check_geodesics(n, cfg, rng):
    icfg = cfg.integrator
    t_end = 1.0
    closed_dev = 0.0
    cases = []
    for rho in range(n):
        base = np.ones(n)
        base[:rho] = 0.0
        base[-1] = 0.25 if rho % 2 else 0.0
        v0 = np.zeros(n)
        v0[-1] = 1.0
        traj = geodesics.integrate_geodesic(base, v0, t_end, icfg)
        err = float(np.max(np.abs(traj.endpoint - geodesics.vertical_geodesic(base, t_end)[0])))
        closed_dev = max(closed_dev, err)
        cases.append({"base": base, "rho": rho, "endpoint_error": err})

    drift = equiv = 0.0
    for p in _points(rng, cfg, n, 3):
        v = rng.normal(size=n)
        traj = geodesics.integrate_geodesic(p, v, t_end, icfg)
        drift = max(drift, geodesics.speed_drift(traj))
        for i in (1, n):
            iso = chart.Isometry("reflection", i)
            J = iso.jacobian(n)
            mirrored = geodesics.integrate_geodesic(chart.apply_isometry(iso, p), J @ v, t_end, icfg)
            equiv = max(equiv, float(np.max(np.abs(mirrored.positions - traj.positions @ J.T))))
    return [
        _leq("C6a", "vertical lattice geodesics follow x_n + 3^-rho t", closed_dev, cfg.tol_integrator, cases=cases),
        _leq("C6b", "speed drift of generic unit-speed geodesics", drift, cfg.tol_integrator),
        _leq("C6c", "geodesics are equivariant under reflections", equiv, cfg.tol_integrator),
    ]


def check_leaves(n, cfg, rng):
    levels = rng.uniform(-cfg.box, cfg.box, size=cfg.leaves)
    worst = spread = 0.0
    for s in levels:
        leaf = hypersurfaces.Leaf(float(s))
        curvs = []
        for u in rng.uniform(-cfg.box, cfg.box, size=(cfg.points_per_leaf, n - 1)):
            S = hypersurfaces.leaf_shape_operator(leaf.point(u), leaf)
            worst = max(worst, float(np.max(np.abs(S))))
            curvs.append(hypersurfaces.principal_curvatures(S))
        curvs = np.array(curvs)
        spread = max(spread, float(np.max(curvs.max(axis=0) - curvs.min(axis=0))))
    return [
        _leq("C7a", "leaf shape operators vanish (totally geodesic leaves)", worst, cfg.tol_exact,
             leaves=levels, points=cfg.leaves * cfg.points_per_leaf),
        _leq("C7b", "principal curvatures are constant on every leaf", spread, cfg.tol_exact),
    ]


def _bases(n, rng, cfg):
    generic = np.append(rng.uniform(-cfg.box, cfg.box, size=n - 1), 0.0)
    return {"a": base_a(n), "b": base_b(n), "generic": generic}


def check_trace_identity(n, cfg, rng):
    res = sym = 0.0
    per = {}
    for name, base in _bases(n, rng, cfg).items():
        curve = hypersurfaces.integrate_riccati(base, cfg.r_max, cfg.integrator)
        r = hypersurfaces.trace_identity_residual(curve)
        per[name] = {"base": base, "residual": r}
        res = max(res, r)
        sym = max(sym, curve.symmetry_deviation())
    return [
        _leq("C8a", "dH/dr = Ric(gamma', gamma') + |S|^2 along Riccati curves", res, cfg.tol_derivative,
             r_max=cfg.r_max, curves=per),
        _leq("C8b", "parallel shape operators stay symmetric", sym, cfg.tol_symmetry),
    ]


def check_oracle(n, cfg, rng):
    worst = 0.0
    rows = []
    for name, base in (("a", base_a(n)), ("b", base_b(n))):
        curve = hypersurfaces.integrate_riccati(base, max(cfg.oracle_radii), cfg.integrator)
        for r in cfg.oracle_radii:
            i = int(np.argmin(np.abs(curve.r - r)))
            h_ric = float(curve.H[i])
            h_fd = hypersurfaces.parallel_mean_curvature_fd(base, r, cfg.oracle_eps, cfg.integrator)
            worst = max(worst, abs(h_ric - h_fd))
            rows.append({"base": name, "r": r, "H_riccati": h_ric, "H_fd": h_fd})
    return [_leq("C9", "Riccati mean curvature matches the finite-difference parallel surface",
                 worst, cfg.tol_oracle, cases=rows)]


def headline_values(n, cfg):
    """Slopes and finite-r mean curvatures at the bases a and b."""
    a, b = base_a(n), base_b(n)
    r = cfg.headline_r
    fine = geodesics.IntegratorConfig(step=cfg.step / 2)
    out = {}
    for name, base in (("a", a), ("b", b)):
        curve = hypersurfaces.integrate_riccati(base, r, cfg.integrator)
        curve_fine = hypersurfaces.integrate_riccati(base, r, fine)
        coord = hypersurfaces.integrate_riccati(base, 4 * cfg.step, cfg.integrator, normal="coordinate")
        out[name] = {
            "base": base,
            "rho": chart.count_even_entries(base),
            "slope_unit": curve.initial_slope,
            "slope_unit_fd": hypersurfaces.fd_initial_slope(curve),
            "slope_coordinate": coord.initial_slope,
            "H_r": float(curve.H[-1]),
            "H_r_error": abs(float(curve.H[-1] - curve_fine.H[-1])),
        }
    return out


def check_headline(n, cfg, rng):
    v = headline_values(n, cfg)
    a, b = v["a"], v["b"]
    slope_a = (n - 1) * PI**2 / 3
    slope_b = (1 - n) * PI**2
    dev_coord = max(abs(a["slope_coordinate"] - slope_a), abs(b["slope_coordinate"] - slope_b))
    dev_unit = max(abs(a["slope_unit"] - slope_a / 9.0 ** a["rho"]), abs(b["slope_unit"] - slope_b))
    gap = a["H_r"] - b["H_r"]
    err = a["H_r_error"] + b["H_r_error"]
    split = a["slope_unit"] > 0 > b["slope_unit"] and a["H_r"] > 0 > b["H_r"] and abs(gap) > 10 * max(err, 1e-300)
    return [
        CheckResult("C10a", "parallel mean curvature rises at a and falls at b (leaf not isoparametric)",
                    _status(split), gap, 10 * err, _clean({**v, "H_gap": gap, "error_estimate": err})),
        _leq("C10b", "Riccati slopes along d_n equal (n-1) pi^2 / 3 at a and (1-n) pi^2 at b",
             dev_coord, cfg.tol_derivative, expected_a=slope_a, expected_b=slope_b,
             got_a=a["slope_coordinate"], got_b=b["slope_coordinate"]),
        _leq("C10c", "unit-normal Riccati slopes equal 9^-rho times those values",
             dev_unit, cfg.tol_derivative, got_a=a["slope_unit"], got_b=b["slope_unit"]),
    ]


CHECKS: list[tuple[str, Callable]] = [
    ("C1", check_isometries),
    ("C2", check_christoffel),
    ("C3", check_flatness),
    ("C4", check_riemann),
    ("C5", check_lattice_ricci),
    ("C6", check_geodesics),
    ("C7", check_leaves),
    ("C8", check_trace_identity),
    ("C9", check_oracle),
    ("C10", check_headline),
]


def _run_one(index: int, n: int, cfg: VerifyConfig) -> list[CheckResult]:
    cid, fn = CHECKS[index]
    rng = np.random.default_rng([cfg.seed, index])
    try:
        return fn(n, cfg, rng)
    except Exception as exc:  # a crashing check is reported, never fatal
        log.exception("check %s crashed", cid)
        return [CheckResult(cid, f"{fn.__name__} crashed", "fail", math.inf, 0.0,
                            {"error": f"{type(exc).__name__}: {exc}"})]


def _headline(n: int, checks: list[CheckResult]) -> dict:
    c10 = next((c for c in checks if c.id == "C10a"), None)
    if c10 is None or "a" not in c10.details:
        return {"conclusion": "headline check did not run"}
    a, b = c10.details["a"], c10.details["b"]
    verdict = "is NOT isoparametric" if c10.status == "pass" else "could not be shown non-isoparametric"
    return {
        "dH_dr_a_unit": a["slope_unit"],
        "dH_dr_b_unit": b["slope_unit"],
        "dH_dr_a_coordinate": a["slope_coordinate"],
        "dH_dr_b_coordinate": b["slope_coordinate"],
        "H_r_a": a["H_r"],
        "H_r_b": b["H_r"],
        "conclusion": (f"leaf x_{n} = 0 {verdict}: dH/dr(0) = {a['slope_unit']:+.6g} at a, "
                       f"{b['slope_unit']:+.6g} at b (along d_n: {a['slope_coordinate']:+.6g}, "
                       f"{b['slope_coordinate']:+.6g})"),
    }


def run_all(n: int, cfg: VerifyConfig | None = None, jobs: int = 1) -> VerdictReport:
    if n < 2:
        raise ValueError(f"dimension must be at least 2, got {n}")
    cfg = cfg or VerifyConfig()
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            groups = list(pool.map(_run_one, range(len(CHECKS)), [n] * len(CHECKS), [cfg] * len(CHECKS)))
    else:
        groups = []
        for i, (cid, _) in enumerate(CHECKS):
            log.info("running %s", cid)
            groups.append(_run_one(i, n, cfg))
    checks = [c for group in groups for c in group]
    return VerdictReport(n, _clean(asdict(cfg)), checks, _headline(n, checks))
