"""Connection and curvature of the conformal metric at a point.

Index conventions (0-based arrays):

* ``gamma[k, i, j]`` is the Christoffel symbol Gamma^k_ij.
* ``dgamma[l, k, i, j]`` is its partial derivative along x_l.
* ``riemann[i, j, k, l] = <R(d_i, d_j) d_k, d_l>`` with
  ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``.
  With this ordering ``<R(X, Y)Y, X>`` is positive on round spheres and
  ``riemann[i, n, n, j]`` is the coordinate Jacobi operator of ``d_n``.
* ``ricci[j, k] = sum_i R^i_{ijk}``, the trace of ``X -> R(X, d_j) d_k``.

Three independent routes to the Christoffel symbols are provided: the
closed-form families (``christoffel_closed``), the general Levi-Civita formula
fed with the analytic jet of ``g`` (``christoffel_general``), and the same
formula fed with finite differences of ``g`` (``christoffel_fd``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import PI, TRIG, ConformalFactor, ConformalJet, as_point, factor_jet, metric_at
from .exceptions import DimensionError


def _is_trig(factor) -> bool:
    return factor is None or factor is TRIG


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------

def _phi(x: np.ndarray) -> np.ndarray:
    """``pi sin(pi x_k) / (2 + cos(pi x_k))`` for k < n and 0 for k = n."""
    out = PI * np.sin(PI * x) / (2.0 + np.cos(PI * x))
    out[-1] = 0.0
    return out


def _dphi(x: np.ndarray) -> np.ndarray:
    c = np.cos(PI * x)
    out = PI**2 * (2.0 * c + 1.0) / (2.0 + c) ** 2
    out[-1] = 0.0
    return out


def _families(phi: np.ndarray) -> np.ndarray:
    """Assemble Gamma from the per-coordinate profile ``phi``.

    Gamma^k_ii = phi_k (k != i), Gamma^i_ij = Gamma^i_ji = -phi_j (which
    includes Gamma^i_ii = -phi_i), all symbols with distinct indices vanish.
    The factors (delta_in - 1), (delta_jn - 1), (1 - delta_kn) are carried by
    ``phi_n = 0``.
    """
    n = phi.size
    ar = np.arange(n)
    G = np.zeros((n, n, n))
    G[:, ar, ar] = phi[:, None]
    G[ar, ar, :] = -phi[None, :]
    G[ar, :, ar] = -phi[None, :]
    return G


def christoffel_closed(p) -> np.ndarray:
    """Christoffel symbols of the example metric from their closed forms."""
    return _families(_phi(as_point(p)))


def christoffel_closed_derivative(p) -> np.ndarray:
    """``dgamma[l, k, i, j]``; every nonzero family depends on one coordinate only."""
    x = as_point(p)
    n = x.size
    dphi = _dphi(x)
    dG = np.zeros((n, n, n, n))
    for l in range(n - 1):
        e = np.zeros(n)
        e[l] = dphi[l]
        dG[l] = _families(e)
    return dG


# ---------------------------------------------------------------------------
# general formula
# ---------------------------------------------------------------------------

def _bracket_terms(dg: np.ndarray) -> np.ndarray:
    n = dg.shape[0]
    out = np.empty((n, n, n))  # out[i, j, l] = g_jl,i + g_li,j - g_ij,l
    for i in range(n):
        for j in range(n):
            out[i, j] = dg[i, j, :] + dg[j, :, i] - dg[:, i, j]
    return out


def metric_derivative(p, factor: ConformalFactor | None = None) -> np.ndarray:
    """Analytic ``dg[l, i, j] = d_l g_ij = 2 h h_l delta_ij``."""
    jet = factor_jet(p, 1, factor)
    n = jet.n
    return 2.0 * jet.value * jet.grad[:, None, None] * np.eye(n)[None, :, :]


def christoffel_from_metric(g_inv: np.ndarray, dg: np.ndarray) -> np.ndarray:
    return 0.5 * np.einsum("kl,ijl->kij", g_inv, _bracket_terms(dg))


def christoffel_general(p, factor: ConformalFactor | None = None) -> np.ndarray:
    x = as_point(p)
    return christoffel_from_metric(metric_at(x, factor).g_inv, metric_derivative(x, factor))


def christoffel_fd(p, eps: float = 1e-5, factor: ConformalFactor | None = None) -> np.ndarray:
    """Levi-Civita formula with central finite differences of ``g`` (test oracle)."""
    if not eps > 0:
        raise ValueError(f"eps must be positive, got {eps}")
    x = as_point(p)
    n = x.size
    dg = np.empty((n, n, n))
    for l in range(n):
        step = np.zeros(n)
        step[l] = eps
        dg[l] = (metric_at(x + step, factor).g - metric_at(x - step, factor).g) / (2 * eps)
    return christoffel_from_metric(metric_at(x, factor).g_inv, dg)


def metric_compatibility_residual(p, gamma: np.ndarray | None = None,
                                  factor: ConformalFactor | None = None) -> float:
    """Max of ``|d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il|``."""
    x = as_point(p)
    g = metric_at(x, factor).g
    if gamma is None:
        gamma = christoffel_closed(x) if _is_trig(factor) else christoffel_general(x, factor)
    dg = metric_derivative(x, factor)
    res = dg - np.einsum("lki,lj->kij", gamma, g) - np.einsum("lkj,il->kij", gamma, g)
    return float(np.max(np.abs(res)))


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LogJet:
    """Derivatives of ``f = log h`` up to third order."""

    f1: np.ndarray
    f2: np.ndarray
    f3: np.ndarray


def log_jet(jet: ConformalJet) -> LogJet:
    h, h1, h2, h3 = jet.value, jet.grad, jet.hess, jet.third
    f1 = h1 / h
    f2 = h2 / h - np.outer(h1, h1) / h**2
    sym = (np.einsum("ij,k->ijk", h2, h1) + np.einsum("ik,j->ijk", h2, h1)
           + np.einsum("jk,i->ijk", h2, h1))
    f3 = h3 / h - sym / h**2 + 2.0 * np.einsum("i,j,k->ijk", h1, h1, h1) / h**3
    return LogJet(f1, f2, f3)


def _conformal_connection(lj: LogJet):
    """Gamma, dGamma, ddGamma of ``e^{2f} * delta`` from the log-jet."""
    n = lj.f1.size
    d = np.eye(n)
    G = (np.einsum("jk,i->kij", d, lj.f1) + np.einsum("ki,j->kij", d, lj.f1)
         - np.einsum("ij,k->kij", d, lj.f1))
    dG = (np.einsum("jk,il->lkij", d, lj.f2) + np.einsum("ki,jl->lkij", d, lj.f2)
          - np.einsum("ij,kl->lkij", d, lj.f2))
    ddG = (np.einsum("jk,ilm->mlkij", d, lj.f3) + np.einsum("ki,jlm->mlkij", d, lj.f3)
           - np.einsum("ij,klm->mlkij", d, lj.f3))
    return G, dG, ddG


def connection(p, factor: ConformalFactor | None = None):
    """``(gamma, dgamma)`` at ``p``; closed forms for the example metric."""
    x = as_point(p)
    if _is_trig(factor):
        return christoffel_closed(x), christoffel_closed_derivative(x)
    G, dG, _ = _conformal_connection(log_jet(factor.jet(x, 2)))
    return G, dG


def riemann_up(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    """``Rup[m, i, j, k] = R^m_{ijk}``, i.e. the d_m component of R(d_i, d_j) d_k."""
    return (np.einsum("imjk->mijk", dgamma) - np.einsum("jmik->mijk", dgamma)
            + np.einsum("pjk,mip->mijk", gamma, gamma)
            - np.einsum("pik,mjp->mijk", gamma, gamma))


@dataclass(frozen=True)
class CurvatureBundle:
    point: np.ndarray
    h: float
    g: np.ndarray
    g_inv: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray | None = None
    cotton: np.ndarray | None = None

    @property
    def n(self) -> int:
        return self.point.size

    def ricci_of(self, u) -> float:
        u = np.asarray(u, dtype=float)
        return float(u @ self.ricci @ u)


def riemann(p, factor: ConformalFactor | None = None) -> CurvatureBundle:
    """Riemann, Ricci and scalar curvature at ``p``."""
    x = as_point(p)
    gamma, dgamma = connection(x, factor)
    met = metric_at(x, factor)
    Rup = riemann_up(gamma, dgamma)
    R = np.einsum("lm,mijk->ijkl", met.g, Rup)
    ric = np.einsum("iijk->jk", Rup)
    scal = float(np.einsum("jk,jk->", met.g_inv, ric))
    h = float(np.sqrt(met.g[0, 0]))
    return CurvatureBundle(x, h, met.g, met.g_inv, gamma, R, ric, scal)


def riemann_lowered(p, factor: ConformalFactor | None = None) -> np.ndarray:
    return riemann(p, factor).riemann


def riemann_symmetry_residual(R: np.ndarray) -> float:
    """Worst violation of the algebraic Riemann symmetries and first Bianchi."""
    checks = [
        R + R.transpose(1, 0, 2, 3),
        R + R.transpose(0, 1, 3, 2),
        R - R.transpose(2, 3, 0, 1),
        # R_ijkl + R_jkil + R_kijl
        R + R.transpose(2, 0, 1, 3) + R.transpose(1, 2, 0, 3),
        # R_ijkl + R_iklj + R_iljk
        R + R.transpose(0, 3, 1, 2) + R.transpose(0, 2, 3, 1),
    ]
    return float(max(np.max(np.abs(c)) for c in checks))


def ricci_normal(p, normalization: str = "unit", factor: ConformalFactor | None = None) -> float:
    """Ricci curvature of the normal of the leaf through ``p``.

    ``normalization="unit"`` evaluates Ric(nu, nu) for the unit normal
    ``nu = d_n / h``; ``"coordinate"`` evaluates Ric(d_n, d_n).  They differ by
    the factor ``h^2``.
    """
    b = riemann(p, factor)
    r_nn = float(b.ricci[-1, -1])
    if normalization == "coordinate":
        return r_nn
    if normalization == "unit":
        return r_nn / b.h**2
    raise ValueError(f"normalization must be 'unit' or 'coordinate', got {normalization!r}")


@dataclass(frozen=True)
class JacobiOperator:
    """Jacobi operator of the leaf normal.

    ``coordinate[i, j] = <R(d_i, d_n) d_n, d_j>``; ``orthonormal[a, b]`` are the
    entries of ``X -> R(X, nu) nu`` in the frame ``d_a / h`` with ``nu = d_n / h``.
    """

    coordinate: np.ndarray
    orthonormal: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.orthonormal))


def jacobi_coordinate(gamma: np.ndarray, dgamma: np.ndarray, h: float) -> np.ndarray:
    """Coordinate Jacobi matrix assembled term by term from Gamma and dGamma."""
    n = gamma.shape[0]
    N = n - 1
    M = np.zeros((n, n))
    for i in range(N):
        for j in range(N):
            M[i, j] = h**2 * (
                dgamma[i, j, N, N]
                - dgamma[N, j, i, N]
                + gamma[:, N, N] @ gamma[j, i, :]
                - gamma[:, i, N] @ gamma[j, N, :]
            )
    return M


def jacobi_operator(p, factor: ConformalFactor | None = None) -> JacobiOperator:
    x = as_point(p)
    gamma, dgamma = connection(x, factor)
    b = riemann(x, factor)
    coord = jacobi_coordinate(gamma, dgamma, b.h)
    N = x.size - 1
    ortho = b.riemann[:, N, N, :] / b.h**4
    return JacobiOperator(coord, ortho)


def jacobi_endomorphism(R: np.ndarray, u: np.ndarray, frame: np.ndarray) -> np.ndarray:
    """``M[a, b] = <R(E_a, u) u, E_b>`` for frame columns ``E_a``."""
    return np.einsum("ijkl,ia,j,k,lb->ab", R, frame, u, u, frame)


def schouten(ricci: np.ndarray, scalar: float, g: np.ndarray) -> np.ndarray:
    n = g.shape[0]
    if n < 3:
        raise DimensionError("the Schouten tensor needs n >= 3")
    return (ricci - scalar / (2.0 * (n - 1)) * g) / (n - 2)


def kulkarni_nomizu_schouten(P: np.ndarray, g: np.ndarray) -> np.ndarray:
    """``P_il g_jk + P_jk g_il - P_ik g_jl - P_jl g_ik`` in the Riemann index order."""
    return (np.einsum("il,jk->ijkl", P, g) + np.einsum("jk,il->ijkl", P, g)
            - np.einsum("ik,jl->ijkl", P, g) - np.einsum("jl,ik->ijkl", P, g))


def weyl(p, factor: ConformalFactor | None = None) -> np.ndarray:
    """Weyl tensor ``R - P (KN) g`` (n >= 4)."""
    x = as_point(p)
    if x.size < 4:
        raise DimensionError(f"Weyl is only a conformal invariant for n >= 4, got n={x.size}; use cotton")
    b = riemann(x, factor)
    return weyl_from(b.riemann, b.g)


def weyl_from(R: np.ndarray, g: np.ndarray) -> np.ndarray:
    """Weyl part of any algebraic curvature tensor ``R`` (same index order)."""
    g_inv = np.linalg.inv(g)
    ric = np.einsum("il,ijkl->jk", g_inv, R)
    scal = float(np.einsum("jk,jk->", g_inv, ric))
    return R - kulkarni_nomizu_schouten(schouten(ric, scal, g), g)


def schouten_jet(p, factor: ConformalFactor | None = None):
    """Schouten tensor ``P`` and its partials ``dP[a, j, k] = d_a P_jk`` (n >= 3).

    Built from the third-order jet of h, independently of the closed
    Christoffel forms. Also returns Gamma for covariant differentiation.
    """
    x = as_point(p)
    n = x.size
    jet = factor_jet(x, 3, factor)
    lj = log_jet(jet)
    G, dG, ddG = _conformal_connection(lj)
    h2 = jet.value**2
    g = h2 * np.eye(n)

    Rup = riemann_up(G, dG)
    dRup = (np.einsum("aimjk->amijk", ddG) - np.einsum("ajmik->amijk", ddG)
            + np.einsum("apjk,mip->amijk", dG, G) + np.einsum("pjk,amip->amijk", G, dG)
            - np.einsum("apik,mjp->amijk", dG, G) - np.einsum("pik,amjp->amijk", G, dG))
    ric = np.einsum("iijk->jk", Rup)
    dric = np.einsum("aiijk->ajk", dRup)
    tr = np.trace(ric)
    scal = tr / h2
    dscal = (np.einsum("ajj->a", dric) - 2.0 * lj.f1 * tr) / h2
    dg = 2.0 * h2 * lj.f1[:, None, None] * np.eye(n)[None]

    P = schouten(ric, scal, g)
    dP = (dric - (dscal[:, None, None] * g[None] + scal * dg) / (2.0 * (n - 1))) / (n - 2)
    return P, dP, G


def cotton(p, factor: ConformalFactor | None = None) -> np.ndarray:
    """Cotton tensor ``C[i, j, k] = nabla_i P_jk - nabla_j P_ik`` (n = 3)."""
    x = as_point(p)
    if x.size != 3:
        raise DimensionError(f"cotton is defined here for n = 3 only, got n={x.size}")
    P, dP, G = schouten_jet(x, factor)
    # nabla_i P_jk = d_i P_jk - Gamma^m_ij P_mk - Gamma^m_ik P_jm
    nabla_P = dP - np.einsum("mij,mk->ijk", G, P) - np.einsum("mik,jm->ijk", G, P)
    return nabla_P - nabla_P.transpose(1, 0, 2)


def curvature_bundle(p, factor: ConformalFactor | None = None) -> CurvatureBundle:
    """``riemann`` plus the conformal-flatness tensor appropriate to the dimension."""
    x = as_point(p)
    b = riemann(x, factor)
    if x.size >= 4:
        return CurvatureBundle(**{**b.__dict__, "weyl": weyl(x, factor)})
    if x.size == 3:
        return CurvatureBundle(**{**b.__dict__, "cotton": cotton(x, factor)})
    return b
