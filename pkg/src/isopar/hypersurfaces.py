"""Leaves ``{x_n = s}`` of the foliation, their shape operators, and the
shape operators of their parallel hypersurfaces.

Two independent routes give the mean curvature of the parallel hypersurface
at distance ``r``:

* ``integrate_riccati`` evolves ``dS/dr = R_gamma' + S^2`` in a parallel
  g-orthonormal frame along the normal geodesic;
* ``parallel_mean_curvature_fd`` builds the parallel hypersurface pointwise by
  shooting normal geodesics from a stencil of leaf points and differentiates
  the resulting immersion.

The shape operator is ``S X = -(nabla_X nu)^T`` and the mean curvature is its
plain trace (not divided by n - 1).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .chart import as_point, metric_at
from .exceptions import NotOnLeafError, RiccatiBlowUp, StencilDegenerateError
from .geodesics import IntegratorConfig, fmt_float, integrate, integrate_geodesic
from .tensors import christoffel_closed, christoffel_closed_derivative, riemann, riemann_up

LEAF_TOL = 1e-9
BLOWUP_CAP = 1e6
R_MAX = 0.25


@dataclass(frozen=True)
class Leaf:
    s: float

    def contains(self, p, tol: float = LEAF_TOL) -> bool:
        return abs(as_point(p)[-1] - self.s) < tol

    def point(self, leaf_coords) -> np.ndarray:
        return as_point(np.append(np.asarray(leaf_coords, dtype=float), self.s))

    def unit_normal(self, p) -> np.ndarray:
        x = as_point(p)
        nu = np.zeros(x.size)
        nu[-1] = 1.0 / math.sqrt(metric_at(x).g[0, 0])
        return nu

    def tangent_frame(self, p) -> np.ndarray:
        """Columns ``d_a / h`` for a < n: a g-orthonormal frame of the leaf."""
        x = as_point(p)
        return np.eye(x.size)[:, :-1] / math.sqrt(metric_at(x).g[0, 0])


def _leaf_of(p: np.ndarray, leaf: Leaf | None, tol: float) -> Leaf:
    if leaf is None:
        return Leaf(float(p[-1]))
    if not leaf.contains(p, tol):
        raise NotOnLeafError(f"point {p} is not on the leaf x_n = {leaf.s}")
    return leaf


def leaf_shape_operator(p, leaf: Leaf | None = None, tol: float = LEAF_TOL) -> np.ndarray:
    """Shape operator of the leaf through ``p`` w.r.t. ``nu = d_n / h``.

    Matrix in the orthonormal tangent frame ``d_a / h``:
    ``<S e_a, e_b> = -Gamma^b_an / h``.
    """
    x = as_point(p)
    _leaf_of(x, leaf, tol)
    gamma = christoffel_closed(x)
    h = math.sqrt(metric_at(x).g[0, 0])
    N = x.size - 1
    return -gamma[:N, :N, N].T / h


def principal_curvatures(shape, tol: float = 1e-8) -> np.ndarray:
    S = np.asarray(shape, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ValueError(f"shape operator must be square, got shape {S.shape}")
    asym = float(np.max(np.abs(S - S.T))) if S.size else 0.0
    if asym > tol:
        raise ValueError(f"shape operator is not symmetric (deviation {asym:.3g})")
    return np.sort(np.linalg.eigvalsh(0.5 * (S + S.T)))


@dataclass(frozen=True)
class ShapeState:
    r: float
    S: np.ndarray
    H: float
    hs_norm_sq: float


@dataclass(frozen=True)
class ShapeCurve:
    """Samples of the parallel shape operator along the normal geodesic.

    ``ricci[i]`` is Ric(gamma', gamma') at ``positions[i]``, evaluated from the
    Ricci tensor independently of the Riccati system.  ``initial_slope`` is the
    trace of the Riccati right-hand side at r = 0.
    """

    base: np.ndarray
    r: np.ndarray
    S: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    frames: np.ndarray
    ricci: np.ndarray
    initial_slope: float
    normal: str = "unit"
    config: IntegratorConfig = field(repr=False, default_factory=IntegratorConfig)

    @property
    def H(self) -> np.ndarray:
        return np.einsum("kaa->k", self.S)

    @property
    def hs_norm_sq(self) -> np.ndarray:
        return np.einsum("kab,kab->k", self.S, self.S)

    @property
    def states(self) -> list[ShapeState]:
        return [ShapeState(float(r), S, float(np.trace(S)), float(np.sum(S * S)))
                for r, S in zip(self.r, self.S)]

    def symmetry_deviation(self) -> float:
        return float(np.max(np.abs(self.S - self.S.transpose(0, 2, 1))))

    def write_csv(self, fh) -> None:
        m = self.S.shape[1]
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "H", "hs_norm_sq",
                    *[f"S_{a}{b}" for a in range(1, m + 1) for b in range(1, m + 1)]])
        for r, H, hs, S in zip(self.r, self.H, self.hs_norm_sq, self.S):
            w.writerow([fmt_float(r), fmt_float(H), fmt_float(hs), *map(fmt_float, S.ravel())])

    def to_csv(self) -> str:
        buf = io.StringIO()
        self.write_csv(buf)
        return buf.getvalue()


def _riemann_fast(x: np.ndarray) -> np.ndarray:
    gamma = christoffel_closed(x)
    h2 = float(np.prod(2.0 + np.cos(np.pi * x[:-1]))) ** 2
    Rup = riemann_up(gamma, christoffel_closed_derivative(x))
    return gamma, h2 * Rup.transpose(1, 2, 3, 0)


def _riccati_system(n: int):
    m = n - 1

    def unpack(y):
        x = y[:n]
        v = y[n:2 * n]
        E = y[2 * n:2 * n + n * m].reshape(n, m)
        S = y[2 * n + n * m:].reshape(m, m)
        return x, v, E, S

    def rhs(t, y):
        x, v, E, S = unpack(y)
        gamma, R = _riemann_fast(x)
        jac = np.einsum("ijkl,ia,j,k,lb->ab", R, E, v, v, E)
        return np.concatenate([
            v,
            -np.einsum("kij,i,j->k", gamma, v, v),
            -np.einsum("kij,i,ja->ka", gamma, v, E).ravel(),
            (jac + S @ S).ravel(),
        ])

    return rhs, unpack


def integrate_riccati(base, r_max: float = R_MAX, cfg: IntegratorConfig | None = None, *,
                      normal: str = "unit", cap: float = BLOWUP_CAP,
                      leaf_tol: float = LEAF_TOL) -> ShapeCurve:
    """Evolve the parallel shape operator of the leaf through ``base``.

    ``normal="unit"`` follows the unit-speed normal geodesic, so ``r`` is the
    distance to the leaf.  ``normal="coordinate"`` launches with velocity
    ``d_n`` instead; ``r`` is then an affine parameter and S is taken w.r.t.
    the (non-unit) velocity, which rescales S by the initial speed h.

    Raises RiccatiBlowUp if the Frobenius norm of S exceeds ``cap``.
    """
    cfg = cfg or IntegratorConfig()
    x0 = as_point(base)
    n = x0.size
    if r_max < 0:
        raise ValueError(f"r_max must be non-negative, got {r_max}")
    if normal not in ("unit", "coordinate"):
        raise ValueError(f"normal must be 'unit' or 'coordinate', got {normal!r}")
    leaf = Leaf(float(x0[-1]))
    E0 = leaf.tangent_frame(x0)
    nu = leaf.unit_normal(x0)
    speed = 1.0 if normal == "unit" else 1.0 / nu[-1]
    v0 = speed * nu
    S0 = speed * leaf_shape_operator(x0, leaf, leaf_tol)

    rhs, unpack = _riccati_system(n)
    y0 = np.concatenate([x0, v0, E0.ravel(), S0.ravel()])
    m = n - 1
    initial_slope = float(np.trace(rhs(0.0, y0)[2 * n + n * m:].reshape(m, m)))

    def stop(t, y):
        return np.linalg.norm(unpack(y)[3]) > cap

    ts, ys = integrate(rhs, y0, r_max, cfg, stop=stop)
    xs = ys[:, :n]
    vs = ys[:, n:2 * n]
    Es = ys[:, 2 * n:2 * n + n * m].reshape(-1, n, m)
    Ss = ys[:, 2 * n + n * m:].reshape(-1, m, m)
    ric = np.array([riemann(x).ricci_of(v) for x, v in zip(xs, vs)])
    curve = ShapeCurve(x0, ts, Ss, xs, vs, Es, ric, initial_slope, normal, cfg)
    if np.linalg.norm(Ss[-1]) > cap:
        raise RiccatiBlowUp(float(ts[-1]), cap, curve)
    return curve


def mean_curvature_derivative(curve: ShapeCurve) -> tuple[np.ndarray, np.ndarray]:
    """``(r, dH/dr)`` at interior samples by differencing the sampled H.

    Uses the fourth-order five-point central stencil when the samples are
    uniform (fixed-step integration) and ``numpy.gradient`` otherwise.
    """
    r, H = curve.r, curve.H
    if r.size < 5:
        raise ValueError("need at least five samples to difference H")
    dr = np.diff(r)
    if np.allclose(dr, dr[0], rtol=1e-9, atol=0):
        h = dr[0]
        d = (-H[4:] + 8 * H[3:-1] - 8 * H[1:-3] + H[:-4]) / (12 * h)
        return r[2:-2], d
    d = np.gradient(H, r, edge_order=2)
    return r[1:-1], d[1:-1]


def trace_identity_residual(curve: ShapeCurve) -> float:
    """Worst ``|dH/dr - Ric(gamma', gamma') - |S|^2|`` along the curve."""
    r, d = mean_curvature_derivative(curve)
    idx = np.searchsorted(curve.r, r)
    res = d - curve.ricci[idx] - curve.hs_norm_sq[idx]
    return float(np.max(np.abs(res)))


def fd_initial_slope(curve: ShapeCurve) -> float:
    """One-sided fourth-order difference of H at r = 0 (uniform samples)."""
    r, H = curve.r, curve.H
    if r.size < 5:
        raise ValueError("need at least five samples")
    h = r[1] - r[0]
    return float((-25 * H[0] + 48 * H[1] - 36 * H[2] + 16 * H[3] - 3 * H[4]) / (12 * h))


def mean_curvature_at(base, r: float, cfg: IntegratorConfig | None = None, **kw) -> float:
    """Mean curvature of the parallel hypersurface at distance ``r``, via Riccati."""
    return float(integrate_riccati(base, r, cfg, **kw).H[-1])


def _stencil(m: int, eps: float):
    """Offsets for first, pure second and mixed second differences."""
    e = np.eye(m) * eps
    pts = {(): np.zeros(m)}
    for a in range(m):
        pts[(a, 1)] = e[a]
        pts[(a, -1)] = -e[a]
    for a in range(m):
        for b in range(a + 1, m):
            for sa in (1, -1):
                for sb in (1, -1):
                    pts[(a, sa, b, sb)] = sa * e[a] + sb * e[b]
    return pts


def parallel_mean_curvature_fd(base, r: float, eps: float = 1e-3,
                               cfg: IntegratorConfig | None = None) -> float:
    """Mean curvature of the parallel hypersurface at ``r`` by finite differences.

    Each stencil point ``q`` of the leaf is pushed to ``exp_q(r nu(q))``; the
    image is differentiated to get tangents ``F_a`` and second derivatives
    ``F_ab``, the unit normal ``N`` is the g-orthogonal complement of the
    tangents (oriented along the outgoing geodesic), and
    ``II_ab = g(F_ab + Gamma(F_a, F_b), N)``.  Returns ``trace(G^-1 II)``.
    """
    if r < 0:
        raise ValueError(f"r must be non-negative, got {r}")
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    cfg = cfg or IntegratorConfig()
    x0 = as_point(base)
    n = x0.size
    m = n - 1
    leaf = Leaf(float(x0[-1]))

    images = {}
    out_velocity = leaf.unit_normal(x0)
    for key, off in _stencil(m, eps).items():
        q = x0.copy()
        q[:m] += off
        if r == 0:
            images[key] = q
            continue
        nu = leaf.unit_normal(q)
        traj = integrate_geodesic(q, nu, r, IntegratorConfig(cfg.step, cfg.method, cfg.rtol, cfg.atol, normalize=False))
        images[key] = traj.endpoint
        if key == ():
            out_velocity = traj.velocities[-1]

    F0 = images[()]
    T = np.array([(images[(a, 1)] - images[(a, -1)]) / (2 * eps) for a in range(m)])
    F2 = np.empty((m, m, n))
    for a in range(m):
        F2[a, a] = (images[(a, 1)] - 2 * F0 + images[(a, -1)]) / eps**2
        for b in range(a + 1, m):
            F2[a, b] = F2[b, a] = (images[(a, 1, b, 1)] - images[(a, 1, b, -1)]
                                   - images[(a, -1, b, 1)] + images[(a, -1, b, -1)]) / (4 * eps**2)

    g = metric_at(F0).g
    G = T @ g @ T.T
    ev = np.linalg.eigvalsh(G)
    if ev[0] <= 1e-10 * ev[-1]:
        raise StencilDegenerateError(f"tangent Gram matrix is singular (eigenvalues {ev})")
    # N spans the kernel of the covectors g(F_a, .)
    _, _, vt = np.linalg.svd(T @ g)
    N = vt[-1]
    N = N / math.sqrt(N @ g @ N)
    if N @ g @ out_velocity < 0:
        N = -N
    gamma = christoffel_closed(F0)
    cov = F2 + np.einsum("kij,ai,bj->abk", gamma, T, T)
    II = cov @ g @ N
    return float(np.trace(np.linalg.solve(G, II)))
