"""Critical curves in the (lambda, eta) plane of first integrals, trajectory
classification, and the elementary closed form for the separatrix approaching
a spherical photon orbit.

The radial critical curve is parameterized by the orbit radius r_c in
[r1, r2] (the equatorial photon-ring radii); on it the radial potential has
a double root, R(r) = (r - r_c)^2 (r^2 + 2 r_c r - 3 r_c^2 + Z^2), which is
what makes the separatrix integrable in elementary functions.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .geodesics import (
    polar_potential,
    radial_potential,
    turning_points,
)
from .kerr import DomainError, InvalidSpinError, KerrParams, horizon_radius

# Tolerance for "the integrals lie on the critical curve".
ON_CURVE_TOL = 1e-10


class SpinZeroError(ValueError):
    """The radial critical-curve parametrization divides by the spin."""


class Branch(enum.Enum):
    SigmaR = "sigma_r"
    SigmaTheta0 = "sigma_theta_0"
    SigmaThetaPlus = "sigma_theta_plus"
    SigmaThetaMinus = "sigma_theta_minus"


@dataclass(frozen=True)
class CriticalCurvePoint:
    """A point on one of the bifurcation curves; the critical coordinate is
    r_c for the radial branch and theta_c for the polar branches."""

    critical_coord: float
    lam: float
    eta: float
    branch: Branch


class TrajectoryKind(enum.Enum):
    HorizonInfinity = "horizon/infinity"
    HorizonHorizon = "horizon/horizon"
    InfinityInfinity = "infinity/infinity"
    SphericalCritical = "spherical-critical"
    Forbidden = "forbidden"


@dataclass(frozen=True)
class TrajectoryClass:
    kind: TrajectoryKind
    vortical: bool  # eta < 0: the ray never crosses the equatorial plane


def photon_ring_radii(params: KerrParams) -> tuple[float, float]:
    """Equatorial circular photon orbit radii (prograde r1, retrograde r2).

    r_{1,2} = 2 + 2 cos((2/3) arccos(-/+ a)); the limits a = 0 -> (3, 3)
    and a = 1 -> (1, 4) are returned exactly.
    """
    a = params.a
    if a == 0.0:
        return 3.0, 3.0
    if a == 1.0:
        return 1.0, 4.0
    r1 = 2.0 + 2.0 * math.cos((2.0 / 3.0) * math.acos(-a))
    r2 = 2.0 + 2.0 * math.cos((2.0 / 3.0) * math.acos(a))
    return r1, r2


def critical_lambda(r_c: float, params: KerrParams) -> float:
    a = params.a
    return ((1.0 + r_c) * a * a + r_c * r_c * (r_c - 3.0)) / (a * (1.0 - r_c))


def critical_eta(r_c: float, params: KerrParams) -> float:
    a = params.a
    return (r_c ** 3 * (4.0 * a * a - r_c * (r_c - 3.0) ** 2)
            / (a * a * (r_c - 1.0) ** 2))


def _require_spin(params: KerrParams) -> None:
    if params.a == 0.0:
        raise SpinZeroError(
            "the radial critical curve is parameterized with 1/a; at a=0 "
            "use the limit identity eta + lambda^2 = 27 at r_c = 3"
        )


def sigma_r(r_c: float, params: KerrParams) -> CriticalCurvePoint:
    """Point of the radial critical curve at orbit radius r_c in [r1, r2]."""
    _require_spin(params)
    r1, r2 = photon_ring_radii(params)
    if not (r1 - 1e-12 <= r_c <= r2 + 1e-12):
        raise DomainError(
            f"r_c={r_c} outside the photon-shell range [{r1}, {r2}]"
        )
    return CriticalCurvePoint(
        critical_coord=r_c,
        lam=critical_lambda(r_c, params),
        eta=critical_eta(r_c, params),
        branch=Branch.SigmaR,
    )


def sigma_theta(theta_c: float, sign: int, params: KerrParams,
                ) -> CriticalCurvePoint:
    """Point of a polar critical curve: lambda = +/- a sin^2(theta_c),
    eta = -a^2 cos^4(theta_c). theta_c in [0, pi]; the endpoints are the
    on-axis limit (0, -a^2) where the two branches merge."""
    if not (0.0 <= theta_c <= math.pi):
        raise DomainError(f"theta_c={theta_c} outside [0, pi]")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    a = params.a
    if theta_c in (0.0, math.pi):
        # exact on-axis limit; sin(pi) is not exactly zero in floats
        s, c = 0.0, 1.0
    else:
        s = math.sin(theta_c)
        c = math.cos(theta_c)
    branch = Branch.SigmaThetaPlus if sign == 1 else Branch.SigmaThetaMinus
    return CriticalCurvePoint(
        critical_coord=theta_c,
        lam=sign * a * s * s,
        eta=-(a * c * c) ** 2,
        branch=branch,
    )


def spurious_branch_point(r_c: float, params: KerrParams) -> tuple[float, float]:
    """The second solution family of the double-root conditions,
    lambda = (a^2 + r_c^2)/a, eta = -r_c^4/a^2. It satisfies R = dR/dr = 0
    but Theta < 0 for every theta, so no trajectory carries it."""
    _require_spin(params)
    a = params.a
    return (a * a + r_c * r_c) / a, -(r_c * r_c / a) ** 2


def theta_feasible(lam: float, eta: float, params: KerrParams) -> bool:
    """Whether Theta(theta) >= 0 somewhere on (0, pi).

    max Theta = eta for |lambda| >= a and eta + (a - |lambda|)^2 otherwise,
    so the admissible region below eta = 0 is the wedge bounded by the polar
    critical curves.
    """
    if eta >= 0.0:
        return True
    a = params.a
    al = abs(lam)
    if al >= a:
        return False
    return eta + (a - al) ** 2 >= 0.0


def solve_rc_for_lambda(lam: float, params: KerrParams) -> float | None:
    """Invert lambda(r_c) on [r1, r2] by bisection (lambda is strictly
    decreasing there); None when lam is outside the curve's range."""
    _require_spin(params)
    r1, r2 = photon_ring_radii(params)
    lo, hi = r1, r2
    f_lo = critical_lambda(lo, params) - lam
    f_hi = critical_lambda(hi, params) - lam
    if f_lo < 0.0 or f_hi > 0.0:
        return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = critical_lambda(mid, params) - lam
        if f_mid >= 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15 * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def classify(lam: float, eta: float, r_start: float,
             params: KerrParams) -> TrajectoryClass:
    """Trajectory type for integrals (lambda, eta) and launch radius r_start."""
    rp = horizon_radius(params)
    if r_start <= rp:
        raise DomainError(f"r_start={r_start} must exceed r_plus={rp}")
    vortical = eta < 0.0

    if not theta_feasible(lam, eta, params):
        return TrajectoryClass(TrajectoryKind.Forbidden, vortical)

    # membership on the radial critical curve
    if params.a == 0.0:
        if abs(eta + lam * lam - 27.0) < ON_CURVE_TOL:
            return TrajectoryClass(TrajectoryKind.SphericalCritical, vortical)
    else:
        r_c = solve_rc_for_lambda(lam, params)
        if r_c is not None and abs(eta - critical_eta(r_c, params)) < ON_CURVE_TOL:
            return TrajectoryClass(TrajectoryKind.SphericalCritical, vortical)

    radial, _ = turning_points(lam, eta, params)
    roots = [r for r, _crit in radial]
    if not roots:
        return TrajectoryClass(TrajectoryKind.HorizonInfinity, vortical)
    if radial_potential(r_start, lam, eta, params) < 0.0:
        return TrajectoryClass(TrajectoryKind.Forbidden, vortical)
    if r_start <= roots[0]:
        return TrajectoryClass(TrajectoryKind.HorizonHorizon, vortical)
    if r_start >= roots[-1]:
        return TrajectoryClass(TrajectoryKind.InfinityInfinity, vortical)
    # between the turning points but R >= 0: double-root shoulder;
    # treat as forbidden band boundary
    return TrajectoryClass(TrajectoryKind.Forbidden, vortical)


def separatrix_Z2(r_c: float, params: KerrParams) -> float:
    """Z^2 = 4 r_c ((r_c - 1)^3 + 1 - a^2)/(1 - r_c)^2, the constant in the
    factorization R = (r - r_c)^2 (r^2 + 2 r_c r - 3 r_c^2 + Z^2)."""
    a = params.a
    radicand = (r_c - 1.0) ** 3 + 1.0 - a * a
    if radicand < 0.0:
        raise DomainError(
            f"separatrix constant undefined: (r_c-1)^3 + 1 - a^2 < 0 at "
            f"r_c={r_c}"
        )
    return 4.0 * r_c * radicand / (1.0 - r_c) ** 2


def separatrix_Z(r_c: float, params: KerrParams) -> float:
    """Nonnegative square root of :func:`separatrix_Z2`; the separatrix
    closed form is even in Z, so this sign convention is free."""
    _require_spin(params)
    r1, r2 = photon_ring_radii(params)
    if not (r1 - 1e-12 <= r_c <= r2 + 1e-12):
        raise DomainError(
            f"r_c={r_c} outside the photon-shell range [{r1}, {r2}]"
        )
    return math.sqrt(separatrix_Z2(r_c, params))


def separatrix_r(sigma, r0: float, r_c: float, params: KerrParams):
    """Radial coordinate r(sigma) on the separatrix that starts at
    r(0) = r0 > r_c and approaches the spherical orbit r = r_c.

    Obtained by integrating d sigma = dr / sqrt(R) with the double-root
    factorization of R; with x0 = r0 - r_c and Q0 = r0^2 + 2 r_c r0
    - 3 r_c^2 + Z^2:

        r = r_c + Z^2 x0 / ((Z^2 + 2 r_c x0) cosh(Z sigma)
                            + Z sqrt(Q0) sinh(Z sigma) - 2 r_c x0)

    sigma may be a scalar or an array.
    """
    if not (r0 > r_c):
        raise DomainError(f"r0={r0} must exceed r_c={r_c} on this branch")
    z2 = separatrix_Z2(r_c, params)
    z = math.sqrt(z2)
    x0 = r0 - r_c
    q0 = r0 * r0 + 2.0 * r_c * r0 - 3.0 * r_c * r_c + z2
    if q0 < 0.0:
        raise DomainError(
            f"quadratic factor negative at r0={r0}: no real separatrix"
        )
    s = np.asarray(sigma, dtype=float)
    denom = ((z2 + 2.0 * r_c * x0) * np.cosh(z * s)
             + z * math.sqrt(q0) * np.sinh(z * s) - 2.0 * r_c * x0)
    r = r_c + z2 * x0 / denom
    if np.ndim(sigma) == 0:
        return float(r)
    return r


def sample_sigma_r(params: KerrParams, n: int = 512) -> list[CriticalCurvePoint]:
    """Uniform r_c sampling of the radial critical curve over [r1, r2]."""
    _require_spin(params)
    r1, r2 = photon_ring_radii(params)
    return [sigma_r(rc, params) for rc in np.linspace(r1, r2, n)]


def sample_sigma_theta(params: KerrParams, sign: int, n: int = 512,
                       ) -> list[CriticalCurvePoint]:
    """theta_c sampling of one polar critical branch over [0, pi]; the
    endpoint rows are the merge point (0, -a^2) on the rotation axis."""
    return [sigma_theta(tc, sign, params) for tc in np.linspace(0.0, math.pi, n)]


def curve_to_csv(points: list[CriticalCurvePoint]) -> str:
    """CSV export with header r_c,lambda,eta,branch (the first column is the
    branch's critical coordinate: r_c or theta_c)."""
    lines = ["r_c,lambda,eta,branch"]
    for p in points:
        lines.append(
            f"{p.critical_coord:.17g},{p.lam:.17g},{p.eta:.17g},{p.branch.value}"
        )
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class DiagramScan:
    lam: np.ndarray        # (n_lam,)
    eta: np.ndarray        # (n_eta,)
    feasible: np.ndarray   # (n_eta, n_lam) bool


def diagram_scan(params: KerrParams,
                 lam_range: tuple[float, float] = (-8.0, 8.0),
                 eta_range: tuple[float, float] = (-2.0, 30.0),
                 n_lam: int = 201, n_eta: int = 201,
                 n_r: int = 64, r_max: float = 1e3) -> DiagramScan:
    """Feasibility raster over the plane of first integrals: a cell is
    feasible when the region of possible motion (R >= 0 and Theta >= 0) is
    nonempty. The radial check scans R on a log grid over (r_plus, r_max]."""
    lam = np.linspace(*lam_range, n_lam)
    eta = np.linspace(*eta_range, n_eta)
    rp = horizon_radius(params)
    r_grid = np.geomspace(rp * (1.0 + 1e-9), r_max, n_r)
    a = params.a

    th_ok = np.empty((n_eta, n_lam), dtype=bool)
    for i, e in enumerate(eta):
        if e >= 0.0:
            th_ok[i, :] = True
        else:
            th_ok[i, :] = (np.abs(lam) <= a) & (e + (a - np.abs(lam)) ** 2 >= 0.0)

    r_ok = np.empty((n_eta, n_lam), dtype=bool)
    for i, e in enumerate(eta):
        K = e + (lam - a) ** 2                       # (n_lam,)
        body = (r_grid[None, :] ** 2 + a * a - a * lam[:, None]) ** 2
        delta = r_grid ** 2 - 2.0 * r_grid + a * a   # (n_r,)
        R = body - K[:, None] * delta[None, :]
        r_ok[i, :] = (R >= 0.0).any(axis=1)

    return DiagramScan(lam=lam, eta=eta, feasible=th_ok & r_ok)


def scan_to_csv(scan: DiagramScan) -> str:
    lines = ["lambda,eta,feasible"]
    for i, e in enumerate(scan.eta):
        for j, l in enumerate(scan.lam):
            lines.append(f"{l:.17g},{e:.17g},{int(scan.feasible[i, j])}")
    return "\n".join(lines) + "\n"
