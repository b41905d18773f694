"""The ambient chart: points, the conformal factor and its jet, the metric,
and the discrete isometries of the metric.

The manifold is R^n with the conformally flat metric ``g = h^2 * I`` where

    h(x) = prod_{i < n} (2 + cos(pi * x_i)).

Coordinates are stored as float arrays of length ``n``; index ``n - 1``
(0-based) is the foliation coordinate ``x_n``, on which ``h`` does not depend.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Literal, Protocol

import numpy as np

from .exceptions import DimensionError, NotOnLatticeError

PI = np.pi

#: default tolerance for deciding that a coordinate is an integer
INTEGRALITY_TOL = 1e-9


def as_point(p, n: int | None = None) -> np.ndarray:
    """Validate ``p`` and return it as a 1-d float array.

    Raises DimensionError if ``p`` is not a flat sequence of at least two
    finite numbers, or if ``n`` is given and does not match its length.
    """
    x = np.asarray(p, dtype=float)
    if x.ndim != 1:
        raise DimensionError(f"point must be one-dimensional, got shape {x.shape}")
    if x.size < 2:
        raise DimensionError(f"dimension must be at least 2, got {x.size}")
    if n is not None and x.size != n:
        raise DimensionError(f"expected a point of dimension {n}, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise DimensionError(f"point has non-finite coordinates: {x}")
    return x


def as_vector(v, n: int) -> np.ndarray:
    x = np.asarray(v, dtype=float)
    if x.shape != (n,):
        raise DimensionError(f"expected a vector of length {n}, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DimensionError(f"vector has non-finite components: {x}")
    return x


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector given by its components in the coordinate frame."""

    base: np.ndarray
    components: np.ndarray

    def __post_init__(self):
        base = as_point(self.base)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "components", as_vector(self.components, base.size))

    def norm_sq(self, factor: "ConformalFactor | None" = None) -> float:
        return float(metric_at(self.base, factor).g @ self.components @ self.components)


@dataclass(frozen=True)
class ConformalJet:
    """Value and partial derivatives of the conformal factor at a point.

    Arrays for derivative orders above the requested ``order`` are
    zero-filled, so every field always has its full shape.
    """

    value: float
    grad: np.ndarray
    hess: np.ndarray
    third: np.ndarray
    order: int

    @property
    def n(self) -> int:
        return self.grad.size


class ConformalFactor(Protocol):
    def jet(self, p, order: int = 2) -> ConformalJet: ...


def _check_order(order: int) -> None:
    if order not in (0, 1, 2, 3):
        raise ValueError(f"jet order must be one of 0, 1, 2, 3; got {order!r}")


class TrigProductFactor:
    """``h(x) = prod_{i<n} (2 + cos(pi x_i))``.

    Each factor lies in [1, 3], so ``h`` never vanishes, and partial
    derivatives follow from the product rule: ``d^m h / dx_i^m`` divides ``h``
    by factor ``i`` and multiplies by its m-th derivative.
    """

    @staticmethod
    def factor_ratios(x: np.ndarray) -> np.ndarray:
        """Array ``D[m, i] = c_i^{(m)} / c_i`` for m = 0..3, with ``c_n = 1``."""
        n = x.size
        s = np.sin(PI * x[: n - 1])
        c = np.cos(PI * x[: n - 1])
        base = 2.0 + c
        D = np.zeros((4, n))
        D[0] = 1.0
        D[1, : n - 1] = -PI * s / base
        D[2, : n - 1] = -PI**2 * c / base
        D[3, : n - 1] = PI**3 * s / base
        return D

    def value(self, p) -> float:
        x = as_point(p)
        return float(np.prod(2.0 + np.cos(PI * x[:-1])))

    def jet(self, p, order: int = 2) -> ConformalJet:
        _check_order(order)
        x = as_point(p)
        n = x.size
        h = self.value(x)
        D = self.factor_ratios(x)
        grad = np.zeros(n)
        hess = np.zeros((n, n))
        third = np.zeros((n, n, n))
        if order >= 1:
            grad = h * D[1]
        if order >= 2:
            hess = h * np.outer(D[1], D[1])
            hess[np.diag_indices(n)] = h * D[2]
        if order >= 3:
            for idx in itertools.product(range(n), repeat=3):
                term = h
                for axis in set(idx):
                    term *= D[idx.count(axis), axis]
                third[idx] = term
        return ConformalJet(h, grad, hess, third, order)


class FlatFactor:
    """``h = 1``: the Euclidean metric, used as a flat reference."""

    def value(self, p) -> float:
        as_point(p)
        return 1.0

    def jet(self, p, order: int = 2) -> ConformalJet:
        _check_order(order)
        n = as_point(p).size
        return ConformalJet(1.0, np.zeros(n), np.zeros((n, n)), np.zeros((n, n, n)), order)


#: the conformal factor of the example metric
TRIG = TrigProductFactor()


def factor_jet(p, order: int = 2, factor: ConformalFactor | None = None) -> ConformalJet:
    return (factor or TRIG).jet(p, order)


@dataclass(frozen=True)
class MetricValue:
    g: np.ndarray
    g_inv: np.ndarray
    det: float


def metric_at(p, factor: ConformalFactor | None = None) -> MetricValue:
    """Metric ``h(p)^2 * I`` with its inverse and determinant."""
    x = as_point(p)
    n = x.size
    h2 = factor_jet(x, 0, factor).value ** 2
    eye = np.eye(n)
    return MetricValue(h2 * eye, eye / h2, h2**n)


@dataclass(frozen=True)
class Isometry:
    """A reflection ``x_i -> -x_i`` or a translation ``x_i -> x_i + 2``.

    ``axis`` is 1-based, i.e. it names the coordinate ``x_axis``.
    """

    kind: Literal["reflection", "translation"]
    axis: int

    def __post_init__(self):
        if self.kind not in ("reflection", "translation"):
            raise ValueError(f"unknown isometry kind {self.kind!r}")
        if self.axis < 1:
            raise ValueError(f"axis must be >= 1, got {self.axis}")

    def _check(self, n: int) -> None:
        if self.axis > n:
            raise DimensionError(f"axis {self.axis} is invalid in dimension {n}")

    def jacobian(self, n: int) -> np.ndarray:
        self._check(n)
        J = np.eye(n)
        if self.kind == "reflection":
            J[self.axis - 1, self.axis - 1] = -1.0
        return J


def apply_isometry(iso: Isometry, p) -> np.ndarray:
    x = as_point(p).copy()
    iso._check(x.size)
    i = iso.axis - 1
    if iso.kind == "reflection":
        x[i] = -x[i]
    else:
        x[i] += 2.0
    return x


def pullback_metric(iso: Isometry, p, factor: ConformalFactor | None = None) -> np.ndarray:
    """``J^T g(iso(p)) J``; equals ``g(p)`` when ``iso`` is an isometry."""
    x = as_point(p)
    J = iso.jacobian(x.size)
    return J.T @ metric_at(apply_isometry(iso, x), factor).g @ J


def all_isometries(n: int) -> list[Isometry]:
    return [Isometry(kind, i) for kind in ("reflection", "translation") for i in range(1, n + 1)]


def lattice_integers(p, tol: float = INTEGRALITY_TOL) -> np.ndarray:
    """Nearest integers to the first n-1 coordinates; rejects points off the lattice."""
    x = as_point(p)
    head = x[:-1]
    nearest = np.rint(head)
    off = np.abs(head - nearest)
    if np.any(off > tol):
        raise NotOnLatticeError(
            f"coordinates {head[off > tol]} are not integers within {tol:g}"
        )
    return nearest.astype(np.int64)


def count_even_entries(p, tol: float = INTEGRALITY_TOL) -> int:
    """Number of even integers among the first n-1 coordinates of a lattice point."""
    return int(np.sum(lattice_integers(p, tol) % 2 == 0))
