import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isopar import tensors
from isopar.chart import FlatFactor, metric_at
from isopar.exceptions import DimensionError
from isopar.tensors import (
    christoffel_closed,
    christoffel_fd,
    christoffel_general,
    connection,
    cotton,
    jacobi_operator,
    ricci_normal,
    riemann,
    weyl,
)
from symbolic import symbolic_curvature

PI = math.pi


def test_christoffel_examples():
    G = christoffel_closed((0.5, 0, 0))
    # d_1 ln h = -pi sin(pi/2) / (2 + cos(pi/2)) = -pi/2
    assert G[0, 0, 0] == pytest.approx(-PI / 2)
    assert G[0, 2, 2] == pytest.approx(PI / 2)
    assert G[2, 0, 2] == pytest.approx(-PI / 2)
    assert G[1, 1, 1] == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("p", [(0, 0, 0), (1, 1, 0.3), (2, -1, 5.0), (0, 0, 0, -1)])
def test_christoffel_vanishes_on_lattice(p):
    assert np.max(np.abs(christoffel_closed(p))) < 1e-14


def test_christoffel_symmetric_lower(rng):
    for _ in range(20):
        G = christoffel_closed(rng.uniform(-2, 2, 4))
        assert np.array_equal(G, G.transpose(0, 2, 1))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_three_routes_agree(n, rng):
    worst_gen = worst_fd = 0.0
    for _ in range(1000 if n <= 3 else 250):
        p = rng.uniform(-2, 2, n)
        G = christoffel_closed(p)
        worst_gen = max(worst_gen, np.max(np.abs(G - christoffel_general(p))))
        worst_fd = max(worst_fd, np.max(np.abs(G - christoffel_fd(p))))
    assert worst_gen < 1e-12
    assert worst_fd < 1e-6


def test_fd_christoffel_converges_at_second_order():
    p = np.array([0.31, -0.77, 0.2])
    G = christoffel_closed(p)
    e1 = np.max(np.abs(christoffel_fd(p, eps=1e-2) - G))
    e2 = np.max(np.abs(christoffel_fd(p, eps=5e-3) - G))
    assert 3.5 < e1 / e2 < 4.5


def test_fd_christoffel_rejects_bad_eps():
    with pytest.raises(ValueError):
        christoffel_fd((0, 0, 0), eps=0)


def test_metric_compatibility(rng):
    for _ in range(50):
        assert tensors.metric_compatibility_residual(rng.uniform(-2, 2, 3)) < 1e-10


def test_closed_derivative_matches_differences(rng):
    eps = 1e-5
    for _ in range(20):
        p = rng.uniform(-2, 2, 3)
        dG = tensors.christoffel_closed_derivative(p)
        for l in range(3):
            e = np.zeros(3)
            e[l] = eps
            fd = (christoffel_closed(p + e) - christoffel_closed(p - e)) / (2 * eps)
            assert np.max(np.abs(dG[l] - fd)) < 1e-7


def test_log_jet_route_matches_closed(rng):
    from isopar.chart import TrigProductFactor

    class Wrapped(TrigProductFactor):
        # a non-singleton instance forces the generic route
        pass

    for _ in range(20):
        p = rng.uniform(-2, 2, 4)
        G0, dG0 = connection(p)
        G1, dG1 = connection(p, Wrapped())
        assert np.max(np.abs(G0 - G1)) < 1e-12
        assert np.max(np.abs(dG0 - dG1)) < 1e-11


def test_symbolic_christoffel_and_riemann(rng):
    gamma_fn, riem_fn = symbolic_curvature(3)
    for _ in range(25):
        p = rng.uniform(-2, 2, 3)
        assert np.max(np.abs(gamma_fn(p) - christoffel_closed(p))) < 1e-12
        R_sym = riem_fn(p)
        R = riemann(p).riemann
        assert np.max(np.abs(R_sym - R)) < 1e-9 * max(1.0, np.max(np.abs(R_sym)))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_riemann_symmetries(n, rng):
    for _ in range(30):
        R = riemann(rng.uniform(-2, 2, n)).riemann
        assert tensors.riemann_symmetry_residual(R) < 1e-9 * max(1.0, np.max(np.abs(R)))


def test_second_bianchi(rng):
    # d_a R_bc.. + cyclic, covariant version checked by finite differences
    n, eps = 3, 1e-4
    p = rng.uniform(-1, 1, n)

    def R_at(q):
        return riemann(q).riemann

    dR = np.empty((n,) + (n,) * 4)
    for a in range(n):
        e = np.zeros(n)
        e[a] = eps
        dR[a] = (R_at(p + e) - R_at(p - e)) / (2 * eps)
    G = christoffel_closed(p)
    R = R_at(p)
    # nabla_a R_ijkl
    nR = (dR - np.einsum("mai,mjkl->aijkl", G, R) - np.einsum("maj,imkl->aijkl", G, R)
          - np.einsum("mak,ijml->aijkl", G, R) - np.einsum("mal,ijkm->aijkl", G, R))
    cyc = nR + nR.transpose(1, 2, 0, 3, 4) + nR.transpose(2, 0, 1, 3, 4)
    assert np.max(np.abs(cyc)) < 1e-5 * max(1.0, np.max(np.abs(nR)))


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_lattice_ricci(n):
    for rho in range(n):
        a = np.array([0.0] * rho + [1.0] * (n - 1 - rho) + [0.37])
        expected = PI**2 * (1 - n + 4 * rho / 3)
        assert ricci_normal(a, "coordinate") == pytest.approx(expected, rel=1e-10)
        assert ricci_normal(a, "unit") == pytest.approx(expected / 9.0**rho, rel=1e-10)


def test_ricci_normal_rejects_unknown_normalization():
    with pytest.raises(ValueError):
        ricci_normal((0, 0, 0), "other")


def test_ricci_sign_split_n3():
    a, b = (0, 0, 0), (1, 1, 0)
    assert ricci_normal(a) > 0 > ricci_normal(b)
    assert ricci_normal(a) == pytest.approx(2 * PI**2 / 243, rel=1e-12)
    assert ricci_normal(b) == pytest.approx(-2 * PI**2, rel=1e-12)


def test_jacobi_operator_properties(rng):
    for _ in range(30):
        p = rng.uniform(-2, 2, 4)
        J = jacobi_operator(p)
        N = 3
        assert np.allclose(J.orthonormal, J.orthonormal.T, atol=1e-10)
        assert np.max(np.abs(J.orthonormal[N, :])) < 1e-10
        assert np.max(np.abs(J.orthonormal[:, N])) < 1e-10
        b = riemann(p)
        # term-by-term assembly against the lowered tensor
        assert np.max(np.abs(J.coordinate - b.riemann[:, N, N, :])) < 1e-9 * max(1, np.max(np.abs(J.coordinate)))
        assert J.trace == pytest.approx(ricci_normal(p), rel=1e-9, abs=1e-12)


def test_jacobi_lattice_diagonal():
    J = jacobi_operator((0, 1, 0.2)).orthonormal
    # rho = 1, h = 3: even axis pi^2/(3 h^2), odd axis -pi^2/h^2
    assert J[0, 0] == pytest.approx(PI**2 / 27)
    assert J[1, 1] == pytest.approx(-PI**2 / 9)
    assert abs(J[0, 1]) < 1e-14


def test_jacobi_endomorphism_generic_frame():
    p = np.array([0.3, 0.1, 0.0])
    b = riemann(p)
    frame = np.eye(3)[:, :2] / b.h
    nu = np.array([0, 0, 1 / b.h])
    M = tensors.jacobi_endomorphism(b.riemann, nu, frame)
    assert np.allclose(M, jacobi_operator(p).orthonormal[:2, :2], atol=1e-12)


@pytest.mark.parametrize("n", [4, 5])
def test_weyl_vanishes(n, rng):
    for _ in range(40):
        p = rng.uniform(-2, 2, n)
        R = riemann(p).riemann
        assert np.max(np.abs(weyl(p))) < 1e-9 * max(1.0, np.max(np.abs(R)))


def test_cotton_vanishes(rng):
    for _ in range(40):
        assert np.max(np.abs(cotton(rng.uniform(-2, 2, 3)))) < 1e-8


def test_flatness_dimension_errors():
    with pytest.raises(DimensionError):
        weyl((0, 0, 0))
    with pytest.raises(DimensionError):
        cotton((0, 0, 0, 0))
    with pytest.raises(DimensionError):
        tensors.schouten(np.zeros((2, 2)), 0.0, np.eye(2))


def test_flat_stub_curvature_is_zero():
    f = FlatFactor()
    p = (0.3, 0.2, 0.1, 0.4)
    assert not riemann(p, f).riemann.any()
    assert not weyl(p, f).any()
    assert not cotton(p[:3], f).any()


def test_weyl_detects_non_conformally_flat_tensor(rng):
    # R = A (KN) A for a random symmetric A is an algebraic curvature tensor
    n = 4
    A = rng.normal(size=(n, n))
    A = A + A.T
    R = (np.einsum("il,jk->ijkl", A, A) - np.einsum("ik,jl->ijkl", A, A))
    assert tensors.riemann_symmetry_residual(R) < 1e-12
    W = tensors.weyl_from(R, np.eye(n))
    assert np.max(np.abs(W)) > 1e-2
    # totally trace-free
    assert np.max(np.abs(np.einsum("ijki->jk", W))) < 1e-12


def test_weyl_trace_free_on_manifold(rng):
    p = rng.uniform(-2, 2, 5)
    W = weyl(p)
    assert np.max(np.abs(np.einsum("ijki->jk", W))) < 1e-8


def test_schouten_jet_derivative_matches_differences(rng):
    eps = 1e-5
    p = rng.uniform(-1, 1, 3)
    P, dP, _ = tensors.schouten_jet(p)
    for a in range(3):
        e = np.zeros(3)
        e[a] = eps
        fd = (tensors.schouten_jet(p + e)[0] - tensors.schouten_jet(p - e)[0]) / (2 * eps)
        assert np.max(np.abs(fd - dP[a])) < 1e-6 * max(1, np.max(np.abs(dP)))


def test_curvature_bundle_by_dimension():
    assert tensors.curvature_bundle((0.1, 0.2)).weyl is None
    assert tensors.curvature_bundle((0.1, 0.2, 0.3)).cotton is not None
    assert tensors.curvature_bundle((0.1, 0.2, 0.3, 0.4)).weyl is not None


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_scalar_is_trace_of_ricci(p):
    b = riemann(p)
    assert b.scalar == pytest.approx(np.trace(b.ricci) / b.h**2, rel=1e-12, abs=1e-12)
    assert np.allclose(b.ricci, b.ricci.T, atol=1e-10)
    assert b.ricci_of([0, 0, 1]) == pytest.approx(b.ricci[2, 2])


def test_metric_scaling_consistency():
    p = (0.25, -0.4, 0.0)
    assert riemann(p).h ** 2 == pytest.approx(metric_at(p).g[0, 0])
