"""Command line front end.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 numerical
failure (Riccati blow-up or non-finite state).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import fields, replace

import numpy as np

from . import chart, geodesics, hypersurfaces, tensors, verify
from .exceptions import DimensionError, NotOnLatticeError, NumericalError

log = logging.getLogger("isopar")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
# sweep and verify run in this dimension unless --dim is given
DEFAULT_DIM = 3


class UsageError(Exception):
    pass


def parse_point(text: str, dim: int | None = None) -> np.ndarray:
    try:
        values = [float(t) for t in text.split(",")]
    except ValueError:
        raise UsageError(f"malformed point {text!r}: expected comma-separated numbers") from None
    if dim is not None and len(values) != dim:
        raise UsageError(f"point {text!r} has {len(values)} coordinates but --dim is {dim}")
    try:
        return chart.as_point(values)
    except DimensionError as exc:
        raise UsageError(str(exc)) from None


def parse_grid(text: str) -> np.ndarray:
    """``START:STOP:STEP`` (inclusive) or a comma-separated list of values."""
    try:
        if ":" in text:
            start, stop, step = (float(t) for t in text.split(":"))
            if step <= 0:
                raise ValueError
            count = int(np.floor((stop - start) / step + 1e-9)) + 1
            if count < 1:
                raise ValueError
            return start + step * np.arange(count)
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"malformed grid {text!r}: use START:STOP:STEP or v1,v2,...") from None


def parse_tolerances(items: list[str]) -> dict[str, float]:
    known = {f.name for f in fields(verify.VerifyConfig) if f.name.startswith("tol_")}
    out = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        name = key if key.startswith("tol_") else f"tol_{key}"
        if not sep or name not in known:
            raise UsageError(f"bad --tol {item!r}; keys: {', '.join(sorted(k[4:] for k in known))}")
        try:
            out[name] = float(value)
        except ValueError:
            raise UsageError(f"bad tolerance value in {item!r}") from None
    return out


def _matrix(m: np.ndarray) -> str:
    return "\n".join("  " + "  ".join(f"{v: .10g}" for v in row) for row in m)


def _emit(text: str, output: str | None) -> None:
    if output:
        with open(output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _integrator(args, normalize=True) -> geodesics.IntegratorConfig:
    return geodesics.IntegratorConfig(step=args.step, method=args.method, normalize=normalize)


# ---------------------------------------------------------------------------

def cmd_metric(args) -> int:
    p = parse_point(args.point, args.dim)
    met = chart.metric_at(p)
    h = chart.factor_jet(p, 0).value
    if args.format == "json":
        _emit(json.dumps({"point": p.tolist(), "h": h, "g": met.g.tolist(),
                          "g_inv": met.g_inv.tolist(), "det": met.det}, indent=2) + "\n", args.output)
    else:
        _emit(f"point: {p.tolist()}\nh = {h:.12g}\ng =\n{_matrix(met.g)}\ng_inv =\n{_matrix(met.g_inv)}\n"
              f"det = {met.det:.12g}\n", args.output)
    return EXIT_OK


def cmd_curvature(args) -> int:
    p = parse_point(args.point, args.dim)
    n = p.size
    gamma = tensors.christoffel_closed(p)
    jac = tensors.jacobi_operator(p)
    ric_unit = tensors.ricci_normal(p, "unit")
    ric_coord = tensors.ricci_normal(p, "coordinate")
    flat_name, flat_norm = None, None
    if n == 3:
        flat_name, flat_norm = "cotton", float(np.max(np.abs(tensors.cotton(p))))
    elif n >= 4:
        flat_name, flat_norm = "weyl", float(np.max(np.abs(tensors.weyl(p))))
    nonzero = [(k + 1, i + 1, j + 1, float(gamma[k, i, j]))
               for k, i, j in zip(*np.nonzero(np.abs(gamma) > 1e-15)) if i <= j]
    if args.format == "json":
        _emit(json.dumps({
            "point": p.tolist(),
            "christoffel": gamma.tolist(),
            "ricci_normal_unit": ric_unit,
            "ricci_normal_coordinate": ric_coord,
            "jacobi_coordinate": jac.coordinate.tolist(),
            "jacobi_orthonormal": jac.orthonormal.tolist(),
            "flatness_tensor": flat_name,
            "flatness_max_abs": flat_norm,
        }, indent=2) + "\n", args.output)
        return EXIT_OK
    lines = [f"point: {p.tolist()}", "nonzero Christoffel symbols Gamma^k_ij (i <= j):"]
    lines += [f"  Gamma^{k}_{i}{j} = {v:.12g}" for k, i, j, v in nonzero] or ["  (none)"]
    lines += [
        f"Ric(nu, nu)   = {ric_unit:.12g}   (unit normal nu = d_{n}/h)",
        f"Ric(d_n, d_n) = {ric_coord:.12g}",
        "Jacobi operator of d_n, coordinate frame:", _matrix(jac.coordinate),
        "Jacobi operator of nu, orthonormal frame:", _matrix(jac.orthonormal),
    ]
    if flat_name:
        lines.append(f"max |{flat_name}| = {flat_norm:.3e}")
    else:
        lines.append("conformal flatness: no local conformal invariant in dimension 2")
    _emit("\n".join(lines) + "\n", args.output)
    return EXIT_OK


def cmd_geodesic(args) -> int:
    p = parse_point(args.point, args.dim)
    n = p.size
    if args.direction:
        v = parse_point(args.direction, n)
    else:
        v = np.zeros(n)
        v[-1] = 1.0
    if not args.t_end > 0:
        raise UsageError("--t-end must be positive")
    traj = geodesics.integrate_geodesic(p, v, args.t_end, _integrator(args, not args.no_normalize))
    log.info("geodesic: %d steps, speed drift %.3e", traj.meta.steps, traj.meta.max_speed_drift)
    if args.format == "json":
        rows = [{"t": float(t), "x": x.tolist(), "v": vv.tolist(), "speed": float(np.sqrt(s))}
                for t, x, vv, s in zip(traj.t, traj.positions, traj.velocities, traj.speeds_sq())]
        _emit(json.dumps({"meta": traj.meta.__dict__, "states": rows}) + "\n", args.output)
    else:
        _emit(traj.to_csv(), args.output)
    return EXIT_OK


def cmd_riccati(args) -> int:
    p = parse_point(args.point, args.dim)
    if args.r_max < 0:
        raise UsageError("--r-max must be non-negative")
    curve = hypersurfaces.integrate_riccati(p, args.r_max, _integrator(args), normal=args.normal, cap=args.cap)
    log.info("riccati: %d samples, initial slope %.12g", curve.r.size, curve.initial_slope)
    if args.format == "json":
        _emit(json.dumps({"base": p.tolist(), "normal": curve.normal, "initial_slope": curve.initial_slope,
                          "r": curve.r.tolist(), "H": curve.H.tolist(),
                          "hs_norm_sq": curve.hs_norm_sq.tolist(), "S": curve.S.tolist()}) + "\n", args.output)
    else:
        _emit(curve.to_csv(), args.output)
    return EXIT_OK


def _sweep_one(task):
    base, r, step, method, normal, cap = task
    cfg = geodesics.IntegratorConfig(step=step, method=method)
    return hypersurfaces.mean_curvature_at(base, r, cfg, normal=normal, cap=cap)


def cmd_sweep(args) -> int:
    n = args.dim = DEFAULT_DIM if args.dim is None else args.dim
    if n < 2:
        raise UsageError("--dim must be at least 2")
    if args.r < 0:
        raise UsageError("--r must be non-negative")
    axis = parse_grid(args.grid)
    bases = [np.array([*coords, args.leaf]) for coords in np.array(np.meshgrid(*[axis] * (n - 1), indexing="ij")).reshape(n - 1, -1).T]
    tasks = [(b, args.r, args.step, args.method, args.normal, args.cap) for b in bases]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            values = list(pool.map(_sweep_one, tasks, chunksize=max(1, len(tasks) // (4 * args.jobs))))
    else:
        values = [_sweep_one(t) for t in tasks]
    if args.format == "json":
        _emit(json.dumps({"leaf": args.leaf, "r": args.r,
                          "rows": [{"x": b.tolist(), "H": h} for b, h in zip(bases, values)]}) + "\n", args.output)
        return EXIT_OK
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([*[f"x_{i}" for i in range(1, n + 1)], "H"])
    for b, h in zip(bases, values):
        w.writerow([*map(geodesics.fmt_float, b), geodesics.fmt_float(h)])
    _emit(buf.getvalue(), args.output)
    return EXIT_OK


def cmd_verify(args) -> int:
    args.dim = DEFAULT_DIM if args.dim is None else args.dim
    if args.dim < 2:
        raise UsageError("--dim must be at least 2")
    overrides = parse_tolerances(args.tol)
    cfg = verify.VerifyConfig(seed=args.seed, step=args.step)
    if args.samples is not None:
        cfg = replace(cfg, samples=args.samples)
    if args.r_max is not None:
        cfg = replace(cfg, r_max=args.r_max)
    cfg = replace(cfg, **overrides)
    t0 = time.perf_counter()
    report = verify.run_all(args.dim, cfg, jobs=args.jobs)
    log.info("verify finished in %.2f s", time.perf_counter() - t0)
    if args.format == "json":
        _emit(report.to_json() + "\n", args.output)
    else:
        sys.stdout.write(report.table() + "\n")
        if args.output:
            _emit(report.to_json() + "\n", args.output)
    return EXIT_OK if report.overall == "pass" else EXIT_FAIL


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="isopar", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", type=int, help="ambient dimension n (inferred from --point if omitted)")
    common.add_argument("--output", help="write to this file instead of stdout")

    integ = argparse.ArgumentParser(add_help=False)
    integ.add_argument("--step", type=float, default=1e-3, help="RK4 step in arc length (default 1e-3)")
    integ.add_argument("--method", choices=("rk4", "adaptive"), default="rk4")

    p = sub.add_parser("metric", parents=[common], help="print h, g, g_inv and det at a point")
    p.add_argument("--point", required=True)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_metric)

    p = sub.add_parser("curvature", parents=[common], help="Christoffel symbols, Ricci, Jacobi and Weyl/Cotton")
    p.add_argument("--point", required=True)
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_curvature)

    p = sub.add_parser("geodesic", parents=[common, integ], help="integrate a geodesic, CSV trajectory")
    p.add_argument("--point", required=True)
    p.add_argument("--direction", help="initial velocity (default d_n)")
    p.add_argument("--t-end", type=float, default=1.0)
    p.add_argument("--no-normalize", action="store_true", help="keep the initial speed instead of unit speed")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_geodesic)

    p = sub.add_parser("riccati", parents=[common, integ], help="parallel shape operators from a leaf point")
    p.add_argument("--point", required=True, help="base point on its leaf")
    p.add_argument("--r-max", type=float, default=hypersurfaces.R_MAX)
    p.add_argument("--normal", choices=("unit", "coordinate"), default="unit")
    p.add_argument("--cap", type=float, default=hypersurfaces.BLOWUP_CAP)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_riccati)

    p = sub.add_parser("sweep", parents=[common, integ], help="mean curvature at distance r over a leaf grid")
    p.add_argument("--leaf", type=float, default=0.0, help="leaf level s (x_n = s)")
    p.add_argument("--grid", default="0:2:0.25", help="START:STOP:STEP or v1,v2,... for each leaf coordinate")
    p.add_argument("--r", "--r-max", dest="r", type=float, default=0.05, help="distance r")
    p.add_argument("--normal", choices=("unit", "coordinate"), default="unit")
    p.add_argument("--cap", type=float, default=hypersurfaces.BLOWUP_CAP)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[common], help="run the full verification pipeline")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--step", type=float, default=1e-3)
    p.add_argument("--r-max", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--tol", action="append", metavar="KEY=VALUE",
                   help="override a tolerance, e.g. --tol oracle=1e-3 (repeatable)")
    p.add_argument("--format", choices=("table", "json"), default="table")
    p.set_defaults(func=cmd_verify)
    return ap


def _configure_logging() -> None:
    level = os.environ.get("ISOPAR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def main(argv: list[str] | None = None) -> int:
    _configure_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, DimensionError, NotOnLatticeError, ValueError) as exc:
        parser.print_usage(sys.stderr)
        print(f"isopar: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"isopar: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
