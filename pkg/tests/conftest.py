import math

import numpy as np
import pytest

from kerrshadow.geodesics import radial_potential, radial_potential_deriv
from kerrshadow.kerr import KerrParams
from kerrshadow.observer import ObserverSpec, omega_bounds


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)


def random_observer(rng, a_max=0.999, r_max=30.0) -> ObserverSpec:
    """Random admissible stationary observer, away from the Omega boundary."""
    a = rng.uniform(0.0, a_max)
    params = KerrParams(a)
    r0 = rng.uniform(params.r_plus * 1.05, r_max)
    theta0 = rng.uniform(0.05, math.pi - 0.05)
    om_m, om_p = omega_bounds(r0, theta0, params)
    omega = rng.uniform(om_m + 0.05 * (om_p - om_m),
                        om_p - 0.05 * (om_p - om_m))
    return ObserverSpec(params=params, r0=r0, theta0=theta0, Omega=omega)


def newton_photon_ring(a: float, r_seed: float, lam_seed: float) -> float:
    """Independent oracle: 2D Newton (numeric Jacobian) on
    (R(r_c), dR/dr(r_c)) = 0 in unknowns (r_c, lambda) with eta = 0."""
    p = KerrParams(a)
    x = np.array([r_seed, lam_seed])

    def system(v):
        return np.array([radial_potential(v[0], v[1], 0.0, p),
                         radial_potential_deriv(v[0], v[1], 0.0, p)])

    for _ in range(100):
        f = system(x)
        jac = np.empty((2, 2))
        eps = 1e-7
        for k in range(2):
            dx = np.zeros(2)
            dx[k] = eps
            jac[:, k] = (system(x + dx) - system(x - dx)) / (2 * eps)
        step = np.linalg.solve(jac, f)
        x = x - step
        if np.max(np.abs(step)) < 1e-14 * max(1.0, np.max(np.abs(x))):
            break
    return float(x[0])
