"""Numerical verification that the leaves x_n = const of a conformally flat
metric on R^n (and the torus R^n / 2Z^n) are totally geodesic but not
isoparametric."""

from .chart import (
    FlatFactor,
    Isometry,
    TrigProductFactor,
    apply_isometry,
    count_even_entries,
    factor_jet,
    metric_at,
)
from .geodesics import IntegratorConfig, integrate_geodesic, parallel_transport, speed_drift
from .hypersurfaces import (
    Leaf,
    integrate_riccati,
    leaf_shape_operator,
    parallel_mean_curvature_fd,
    principal_curvatures,
)
from .tensors import (
    christoffel_closed,
    christoffel_fd,
    christoffel_general,
    cotton,
    jacobi_operator,
    ricci_normal,
    riemann,
    weyl,
)
from .verify import VerifyConfig, run_all

__version__ = "0.1.0"
