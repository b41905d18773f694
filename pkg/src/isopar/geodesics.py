"""Geodesics and parallel transport for the conformal metric.

States are integrated in the coordinate chart.  Frames are ``n x m`` matrices
whose columns are coordinate components of tangent vectors; they are
transported by ``dE^k/dt = -Gamma^k_ij v^i E^j`` alongside the geodesic.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .chart import as_point, as_vector, metric_at
from .exceptions import NonFiniteStateError, NotOrthonormalError
from .tensors import christoffel_closed

FRAME_TOL = 1e-8


@dataclass(frozen=True)
class IntegratorConfig:
    """``method`` is ``"rk4"`` (fixed step, the default) or ``"adaptive"``
    (scipy's DOP853 embedded pair at ``rtol``/``atol``)."""

    step: float = 1e-3
    method: str = "rk4"
    rtol: float = 1e-11
    atol: float = 1e-12
    normalize: bool = True

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"step must be positive, got {self.step}")
        if self.method not in ("rk4", "adaptive"):
            raise ValueError(f"unknown integration method {self.method!r}")
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("rtol and atol must be positive")


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray, t_end: float,
              cfg: IntegratorConfig, stop: Callable[[float, np.ndarray], bool] | None = None):
    """Integrate ``dy/dt = rhs(t, y)`` on ``[0, t_end]``; returns ``(ts, ys)``.

    The fixed-step method uses ``ceil(t_end / step)`` equal steps so that the
    last sample lands on ``t_end`` exactly.  If ``stop(t, y)`` returns true for
    an accepted sample, integration ends there and the samples up to and
    including that one are returned.
    """
    y0 = np.asarray(y0, dtype=float)
    if t_end == 0:
        return np.zeros(1), y0[None, :].copy()
    if cfg.method == "adaptive":
        from scipy.integrate import solve_ivp

        sol = solve_ivp(rhs, (0.0, t_end), y0, method="DOP853", rtol=cfg.rtol, atol=cfg.atol)
        if not sol.success:
            raise NonFiniteStateError(f"adaptive integration failed: {sol.message}")
        ys = sol.y.T
        for i, (t, y) in enumerate(zip(sol.t, ys)):
            if not np.all(np.isfinite(y)):
                raise NonFiniteStateError(f"non-finite state at t={t:.6g}")
            if stop is not None and stop(t, y):
                return sol.t[: i + 1], ys[: i + 1]
        return sol.t, ys

    steps = max(1, math.ceil(t_end / cfg.step - 1e-9))
    h = t_end / steps
    ts = np.linspace(0.0, t_end, steps + 1)
    ys = np.empty((steps + 1, y0.size))
    ys[0] = y = y0
    for i in range(steps):
        t = ts[i]
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)):
            raise NonFiniteStateError(f"non-finite state at t={ts[i + 1]:.6g}")
        ys[i + 1] = y
        if stop is not None and stop(ts[i + 1], y):
            return ts[: i + 2], ys[: i + 2]
    return ts, ys


@dataclass(frozen=True)
class GeodesicState:
    t: float
    position: np.ndarray
    velocity: np.ndarray


@dataclass(frozen=True)
class IntegratorMeta:
    steps: int
    step: float
    method: str
    rtol: float
    atol: float
    max_speed_drift: float


@dataclass(frozen=True)
class GeodesicTrajectory:
    t: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    meta: IntegratorMeta
    config: IntegratorConfig = field(repr=False, default_factory=IntegratorConfig)
    frames: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.positions.shape[1]

    @property
    def states(self) -> list[GeodesicState]:
        return [GeodesicState(float(t), x, v) for t, x, v in zip(self.t, self.positions, self.velocities)]

    @property
    def endpoint(self) -> np.ndarray:
        return self.positions[-1]

    def speeds_sq(self) -> np.ndarray:
        """``g(v, v)`` at every state."""
        return np.array([metric_at(x).g[0, 0] * (v @ v) for x, v in zip(self.positions, self.velocities)])

    def write_csv(self, fh) -> None:
        n = self.n
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *[f"x_{i}" for i in range(1, n + 1)], *[f"v_{i}" for i in range(1, n + 1)], "speed"])
        for t, x, v, s2 in zip(self.t, self.positions, self.velocities, self.speeds_sq()):
            w.writerow([fmt_float(t), *map(fmt_float, x), *map(fmt_float, v), fmt_float(math.sqrt(s2))])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def fmt_float(x) -> str:
    # shortest round-trip repr; adding 0.0 folds -0.0 into 0.0
    return repr(float(x) + 0.0)


def _acceleration(x: np.ndarray, v: np.ndarray, gamma: np.ndarray | None = None) -> np.ndarray:
    if gamma is None:
        gamma = christoffel_closed(x)
    return -np.einsum("kij,i,j->k", gamma, v, v)


def geodesic_rhs(s: GeodesicState) -> tuple[np.ndarray, np.ndarray]:
    """``(dx, dv)`` with ``dv^k = -Gamma^k_ij v^i v^j``."""
    x = as_point(s.position)
    v = as_vector(s.velocity, x.size)
    return v.copy(), _acceleration(x, v)


def frame_gram_deviation(x: np.ndarray, frame: np.ndarray) -> float:
    """Max deviation of ``E^T g(x) E`` from the identity."""
    g = metric_at(x).g
    gram = frame.T @ g @ frame
    return float(np.max(np.abs(gram - np.eye(frame.shape[1]))))


def check_orthonormal(x: np.ndarray, frame, tol: float = FRAME_TOL) -> np.ndarray:
    E = np.asarray(frame, dtype=float)
    if E.ndim != 2 or E.shape[0] != x.size:
        raise NotOrthonormalError(f"frame must have {x.size} rows, got shape {E.shape}")
    dev = frame_gram_deviation(x, E)
    if dev > tol:
        raise NotOrthonormalError(f"frame Gram matrix deviates from identity by {dev:.3g}")
    return E


def coordinate_frame(x) -> np.ndarray:
    """The g-orthonormal frame ``d_i / h`` as columns."""
    x = as_point(x)
    return np.eye(x.size) / math.sqrt(metric_at(x).g[0, 0])


def _transport_system(n: int, m: int):
    def rhs(t, y):
        x, v = y[:n], y[n:2 * n]
        gamma = christoffel_closed(x)
        out = np.empty_like(y)
        out[:n] = v
        out[n:2 * n] = _acceleration(x, v, gamma)
        if m:
            E = y[2 * n:].reshape(n, m)
            out[2 * n:] = -np.einsum("kij,i,ja->ka", gamma, v, E).ravel()
        return out

    return rhs


def integrate_geodesic(p0, v0, t_end: float, cfg: IntegratorConfig | None = None,
                       frame=None) -> GeodesicTrajectory:
    """Integrate the geodesic from ``(p0, v0)`` over ``[0, t_end]``.

    With ``cfg.normalize`` the initial velocity is scaled to unit g-norm once;
    speed drift is recorded in ``meta`` but never corrected.  If ``frame`` is
    given its columns are parallel transported along the way.
    """
    cfg = cfg or IntegratorConfig()
    x0 = as_point(p0)
    n = x0.size
    v = as_vector(v0, n)
    if not t_end > 0:
        raise ValueError(f"t_end must be positive, got {t_end}")
    speed_sq = metric_at(x0).g[0, 0] * (v @ v)
    if cfg.normalize:
        if not speed_sq > 0:
            raise ValueError("cannot normalize a zero initial velocity")
        v = v / math.sqrt(speed_sq)
    m = 0
    y0 = [x0, v]
    if frame is not None:
        E = check_orthonormal(x0, frame)
        m = E.shape[1]
        y0.append(E.ravel())
    ts, ys = integrate(_transport_system(n, m), np.concatenate(y0), t_end, cfg)
    positions, velocities = ys[:, :n], ys[:, n:2 * n]
    frames = ys[:, 2 * n:].reshape(len(ts), n, m) if m else None
    drift = _drift(positions, velocities)
    meta = IntegratorMeta(len(ts) - 1, cfg.step, cfg.method, cfg.rtol, cfg.atol, drift)
    return GeodesicTrajectory(ts, positions, velocities, meta, cfg, frames)


def _drift(positions: np.ndarray, velocities: np.ndarray) -> float:
    h2 = np.prod(2.0 + np.cos(np.pi * positions[:, :-1]), axis=1) ** 2
    s2 = h2 * np.einsum("ij,ij->i", velocities, velocities)
    return float(np.max(np.abs(s2 - s2[0])))


def parallel_transport(traj: GeodesicTrajectory, initial_frame) -> GeodesicTrajectory:
    """Return ``traj`` with ``initial_frame`` transported along it.

    The geodesic is re-integrated from its first state with the same
    configuration, so the states are reproduced exactly.
    """
    cfg = IntegratorConfig(traj.config.step, traj.config.method, traj.config.rtol,
                           traj.config.atol, normalize=False)
    out = integrate_geodesic(traj.positions[0], traj.velocities[0], float(traj.t[-1]), cfg,
                             frame=initial_frame)
    return GeodesicTrajectory(out.t, out.positions, out.velocities, traj.meta, traj.config, out.frames)


def speed_drift(traj: GeodesicTrajectory) -> float:
    """``max |g(v, v) - g(v0, v0)|`` over the trajectory."""
    return _drift(traj.positions, traj.velocities)


def vertical_geodesic(a, t) -> np.ndarray:
    """Closed-form unit-speed geodesic from a lattice point along ``d_n``.

    ``a`` must have integer leaf coordinates; the last coordinate grows at
    rate ``3^-rho`` with ``rho`` the number of even leaf coordinates.
    """
    from .chart import count_even_entries

    x = as_point(a)
    rho = count_even_entries(x)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    out = np.tile(x, (t.size, 1))
    out[:, -1] = x[-1] + 3.0 ** (-rho) * t
    return out
