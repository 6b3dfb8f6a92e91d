"""Kerr spacetime in Boyer-Lindquist coordinates: metric scalars, horizon,
coordinate maps.

Geometric units are baked in: lengths in GM/c^2, times in GM/c^3, so the
only free parameter is the dimensionless spin ``a = Jc/GM^2``. Signature
is (-, +, +, +). The working manifold is the exterior r > r_plus with
theta strictly inside (0, pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Polar guard: evaluations dividing by sin(theta) clamp |sin| below this.
EPS_POLE = 1e-9


class InvalidSpinError(ValueError):
    """Spin outside [0, 1]: no event horizon."""


class DomainError(ValueError):
    """Coordinates off the exterior working manifold."""


@dataclass(frozen=True)
class KerrParams:
    """Black-hole parameters; only the dimensionless spin survives the
    unit convention."""

    a: float

    def __post_init__(self):
        if not (0.0 <= self.a <= 1.0) or not math.isfinite(self.a):
            raise InvalidSpinError(
                f"spin a={self.a} outside [0, 1]; no event horizon exists"
            )

    @property
    def r_plus(self) -> float:
        return horizon_radius(self)


@dataclass(frozen=True)
class MetricScalars:
    """The four scalars the line element is written with."""

    rho2: float   # r^2 + a^2 cos^2(theta)
    delta: float  # r^2 - 2r + a^2
    A: float      # (r^2 + a^2)^2 - a^2 delta sin^2(theta)
    omega: float  # 2 r a / A, frame-dragging angular velocity


@dataclass(frozen=True)
class BLPoint:
    """Boyer-Lindquist event (t, r, theta, phi)."""

    t: float
    r: float
    theta: float
    phi: float

    def __post_init__(self):
        if not (0.0 < self.theta < math.pi):
            raise DomainError(
                f"theta={self.theta} not strictly inside (0, pi)"
            )


def horizon_radius(params: KerrParams) -> float:
    """Outer root of delta(r) = 0, r_plus = 1 + sqrt(1 - a^2)."""
    return 1.0 + math.sqrt(1.0 - params.a * params.a)


def guarded_sin(theta: float, eps_pole: float = EPS_POLE) -> float:
    """sin(theta) clamped away from zero near the poles."""
    s = math.sin(theta)
    if abs(s) < eps_pole:
        return eps_pole if s >= 0.0 else -eps_pole
    return s


def metric_scalars(
    r: float, theta: float, params: KerrParams, eps_pole: float = EPS_POLE
) -> MetricScalars:
    """Evaluate rho^2, delta, A, omega at (r, theta) on the exterior."""
    rp = horizon_radius(params)
    if r <= rp:
        raise DomainError(f"r={r} is not outside the horizon r_plus={rp}")
    a = params.a
    s = guarded_sin(theta, eps_pole)
    c = math.cos(theta)
    rho2 = r * r + a * a * c * c
    delta = r * r - 2.0 * r + a * a
    A = (r * r + a * a) ** 2 - a * a * delta * s * s
    return MetricScalars(rho2=rho2, delta=delta, A=A, omega=2.0 * r * a / A)


def metric_matrix(
    r: float, theta: float, params: KerrParams, eps_pole: float = EPS_POLE
) -> np.ndarray:
    """Covariant metric g_{mu nu} in coordinate order (t, r, theta, phi),
    assembled from the (rho^2, delta, A, omega) form of the line element."""
    m = metric_scalars(r, theta, params, eps_pole)
    s = guarded_sin(theta, eps_pole)
    g = np.zeros((4, 4))
    f = (m.A / m.rho2) * s * s
    g[0, 0] = -m.rho2 * m.delta / m.A + f * m.omega * m.omega
    g[0, 3] = g[3, 0] = -f * m.omega
    g[3, 3] = f
    g[1, 1] = m.rho2 / m.delta
    g[2, 2] = m.rho2
    return g


def to_cartesian(point: BLPoint, params: KerrParams) -> tuple[float, float, float]:
    """Flat-embedding Cartesian map; r = const surfaces are confocal
    spheroids (x^2+y^2)/(r^2+a^2) + z^2/r^2 = 1."""
    a = params.a
    w = math.sqrt(point.r * point.r + a * a) * math.sin(point.theta)
    return (
        w * math.cos(point.phi),
        w * math.sin(point.phi),
        point.r * math.cos(point.theta),
    )


def ergosphere_radius(theta: float, params: KerrParams) -> float:
    """Outer boundary of the ergoregion, r = 1 + sqrt(1 - a^2 cos^2 theta)."""
    a = params.a
    c = math.cos(theta)
    return 1.0 + math.sqrt(1.0 - a * a * c * c)
