"""Shadow boundary on the observer's celestial sphere, the stereographic
projection to the image plane, and the angle/ray conversions used by the
ray tracer.

Sky directions are measured against the observer tetrad: N1, N2, N3 are the
components along e_theta, e_phi, e_r with N3 = cos(alpha), so alpha = 0
looks at the hole (e_r points inward) and alpha = pi away from it. The
boundary is parameterized by the spherical-orbit radius r_c; its direction
satisfies

    cos(alpha) = (r0 - r_c) sqrt(Q(r0)) / (rho0 u0 (1 - lambda Omega)
                                           sqrt(Delta(r0)))

with Q the quadratic cofactor of the critical-level radial potential. The
signed numerator selects the branch automatically: boundary rays from orbits
below the observer arrive from the inward half of the sky, those from orbits
above from the outward half, which is exactly what backward integration of
the critical rays shows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .bifurcation import (
    critical_eta,
    critical_lambda,
    photon_ring_radii,
    separatrix_Z2,
)
from .geodesics import ConservedSet, PhaseState
from .kerr import BLPoint, DomainError, KerrParams, metric_scalars
from .observer import ObserverSpec, observer_kernel_block, tetrad

# arccos/arctan arguments are clamped within this slack; larger violations
# raise instead of clamping.
CLAMP_SLACK = 1e-12

SHADOW_CSV_HEADER = "r_c,alpha,beta,X,Y,case"


class PoleError(ValueError):
    """Stereographic projection evaluated at its pole alpha = pi."""


class DegenerateRayError(ValueError):
    """1 - Omega lambda = 0: the frame decomposition of the ray degenerates."""


@dataclass(frozen=True)
class DirectionAngles:
    """Spherical angles of the unit direction N on the observer's sky."""

    alpha: float
    beta: float

    def unit_vector(self) -> tuple[float, float, float]:
        sa = math.sin(self.alpha)
        return (sa * math.cos(self.beta), sa * math.sin(self.beta),
                math.cos(self.alpha))


@dataclass(frozen=True)
class ShadowCurve:
    """Sampled boundary curve; case 1 marks directions whose critical orbit
    lies below the observer radius (inward half of the sky), case 2 above."""

    r_c: np.ndarray
    alpha: np.ndarray
    beta: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    case: np.ndarray
    observer: ObserverSpec

    def __len__(self) -> int:
        return self.r_c.size


def theta_star(r_c: float, obs: ObserverSpec) -> float:
    """Polar potential at the observer's theta0 on the critical level:
    Theta*(r_c) = eta(r_c) + cos^2(theta0)(a^2 - lambda^2(r_c)/sin^2)."""
    p = obs.params
    lam = critical_lambda(r_c, p)
    eta = critical_eta(r_c, p)
    s = math.sin(obs.theta0)
    c = math.cos(obs.theta0)
    return eta + c * c * (p.a * p.a - lam * lam / (s * s))


def theta_star_roots(obs: ObserverSpec,
                     params: KerrParams | None = None) -> tuple[float, float]:
    """The two zeros r1* <= r2* of Theta* on the photon shell [r1, r2];
    they bound the part of the critical curve visible from theta0."""
    p = params if params is not None else obs.params
    if p.a <= 0.0:
        raise DomainError("theta_star_roots requires positive spin")
    r1, r2 = photon_ring_radii(p)
    if math.cos(obs.theta0) == 0.0:
        # equatorial observer: Theta* = eta with zeros at the shell edges
        return r1, r2

    grid = np.linspace(r1, r2, 2048)
    vals = np.array([theta_star(rc, obs) for rc in grid])
    imax = int(np.argmax(vals))
    # the positive window can be far narrower than the grid spacing for a
    # near-axis observer; refine the peak by ternary search around the
    # least-negative cell (Theta* is unimodal there, dominated by -lambda^2)
    lo_t = grid[max(0, imax - 1)]
    hi_t = grid[min(len(grid) - 1, imax + 1)]
    for _ in range(200):
        m1 = lo_t + (hi_t - lo_t) / 3.0
        m2 = hi_t - (hi_t - lo_t) / 3.0
        if theta_star(m1, obs) < theta_star(m2, obs):
            lo_t = m1
        else:
            hi_t = m2
        if hi_t - lo_t < 1e-15 * max(1.0, hi_t):
            break
    r_peak = 0.5 * (lo_t + hi_t)
    if theta_star(r_peak, obs) <= 0.0:
        raise DomainError(
            f"Theta* has no positive values on [{r1}, {r2}] for "
            f"theta0={obs.theta0}"
        )
    grid = np.array([r1, r_peak, r2])
    vals = np.array([theta_star(rc, obs) for rc in grid])
    imax = 1

    def bisect(lo, hi, increasing):
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            v = theta_star(mid, obs)
            if (v < 0.0) == increasing:
                lo = mid
            else:
                hi = mid
            if hi - lo < 1e-15 * max(1.0, hi):
                break
        return 0.5 * (lo + hi)

    if vals[0] >= 0.0:
        lo_root = r1
    else:
        lo_root = bisect(r1, grid[imax], increasing=True)
    if vals[-1] >= 0.0:
        hi_root = r2
    else:
        hi_root = bisect(grid[imax], r2, increasing=False)
    return lo_root, hi_root


def boundary_angles(r_c: float, obs: ObserverSpec,
                    params: KerrParams | None = None) -> tuple[float, float]:
    """(B_alpha, B_beta) for orbit radius r_c.

    B_alpha = arccos of the signed argument given in the module docstring;
    B_beta in [-pi/2, pi/2] from the quadrant-safe arctangent, hitting the
    endpoints exactly where Theta* = 0.
    """
    p = params if params is not None else obs.params
    a = p.a
    lam = critical_lambda(r_c, p)
    eta = critical_eta(r_c, p)
    m = metric_scalars(obs.r0, obs.theta0, p)
    u0 = tetrad(obs).u0
    rho0 = obs.rho0
    s = math.sin(obs.theta0)
    c = math.cos(obs.theta0)
    sd = math.sqrt(m.delta)

    q0 = obs.r0 ** 2 + 2.0 * r_c * obs.r0 - 3.0 * r_c * r_c \
        + separatrix_Z2(r_c, p)
    if q0 < 0.0:
        raise DomainError(
            f"critical-level quadratic factor negative at r0={obs.r0}"
        )
    arg = ((obs.r0 - r_c) * math.sqrt(q0)
           / (rho0 * u0 * (1.0 - lam * obs.Omega) * sd))
    if abs(arg) > 1.0 + CLAMP_SLACK:
        raise DomainError(
            f"arccos argument {arg} off [-1, 1] beyond roundoff slack at "
            f"r_c={r_c}"
        )
    b_alpha = math.acos(min(1.0, max(-1.0, arg)))

    th_star = eta + c * c * (a * a - lam * lam / (s * s))
    if th_star < -CLAMP_SLACK * max(1.0, abs(eta)):
        raise DomainError(
            f"Theta*={th_star} < 0 at r_c={r_c}: orbit not visible from "
            f"theta0={obs.theta0}"
        )
    th_star = max(th_star, 0.0)
    num = u0 * (rho0 ** 2 * (lam - obs.Omega * (obs.r0 ** 2 + a * a) * s * s)
                + 2.0 * obs.r0 * (1.0 - a * obs.Omega * s * s)
                * (a * s * s - lam))
    b_beta = math.atan2(num, rho0 * s * sd * math.sqrt(th_star))
    return b_alpha, b_beta


def stereographic(angles: DirectionAngles) -> tuple[float, float]:
    """Plane coordinates X = 2 tan(alpha/2) sin(beta),
    Y = 2 tan(alpha/2) cos(beta)."""
    if not (0.0 <= angles.alpha < math.pi):
        raise PoleError(
            f"alpha={angles.alpha} is at or beyond the projection pole pi"
        )
    t = 2.0 * math.tan(0.5 * angles.alpha)
    return t * math.sin(angles.beta), t * math.cos(angles.beta)


def inverse_stereographic(x: float, y: float) -> DirectionAngles:
    """Inverse of :func:`stereographic`; beta = 0 at the +Y axis."""
    rho = math.hypot(x, y)
    alpha = 2.0 * math.atan(0.5 * rho)
    beta = math.atan2(x, y) % (2.0 * math.pi)
    return DirectionAngles(alpha=alpha, beta=beta)


def shadow_curve(obs: ObserverSpec, params: KerrParams | None = None,
                 n_samples: int = 512) -> ShadowCurve:
    """Closed shadow boundary sampled over both beta branches.

    r_c runs over [r1*, r2*] with cosine spacing (dense near the endpoints
    where B_beta varies steeply); the two branches beta = pi + B_beta and
    beta = 2 pi - B_beta share their endpoints, closing the curve.
    """
    p = params if params is not None else obs.params
    if p.a < 1e-3:
        raise DomainError(
            "shadow_curve requires a >= 1e-3; the critical-curve "
            "parametrization degenerates at zero spin"
        )
    lo, hi = theta_star_roots(obs, p)
    n = max(int(n_samples), 4)
    k = np.arange(n)
    grid = 0.5 * (lo + hi) - 0.5 * (hi - lo) * np.cos(math.pi * k / (n - 1))
    grid[0], grid[-1] = lo, hi

    ba = np.empty(n)
    bb = np.empty(n)
    for i, rc in enumerate(grid):
        ba[i], bb[i] = boundary_angles(float(rc), obs, p)

    # branch A forward, branch B backward; seam samples appear once
    r_c = np.concatenate([grid, grid[::-1][1:-1]])
    alpha = np.concatenate([ba, ba[::-1][1:-1]])
    beta = np.concatenate([math.pi + bb, (2.0 * math.pi - bb)[::-1][1:-1]])
    case = np.where(r_c <= obs.r0, 1, 2).astype(np.int64)

    t = 2.0 * np.tan(0.5 * alpha)
    X = t * np.sin(beta)
    Y = t * np.cos(beta)
    return ShadowCurve(r_c=r_c, alpha=alpha, beta=beta, X=X, Y=Y,
                       case=case, observer=obs)


def shadow_curve_to_csv(curve: ShadowCurve) -> str:
    obs = curve.observer
    lines = [
        f"# a={obs.params.a:.17g} r0={obs.r0:.17g} theta0={obs.theta0:.17g} "
        f"Omega={obs.Omega:.17g} phi0={obs.phi0:.17g}",
        SHADOW_CSV_HEADER,
    ]
    for i in range(len(curve)):
        lines.append(
            f"{curve.r_c[i]:.17g},{curve.alpha[i]:.17g},{curve.beta[i]:.17g},"
            f"{curve.X[i]:.17g},{curve.Y[i]:.17g},{curve.case[i]}"
        )
    return "\n".join(lines) + "\n"


def ray_from_angles(angles: DirectionAngles, obs: ObserverSpec,
                    params: KerrParams | None = None,
                    ) -> tuple[PhaseState, ConservedSet]:
    """Phase state and first integrals of the beam seen at (alpha, beta),
    normalized to E = 1; the state satisfies H = 0 identically."""
    p = params if params is not None else obs.params
    blk = observer_kernel_block(obs)
    y0, L = _kernels.launch_from_angles(angles.alpha, angles.beta, *blk)
    a = p.a
    s = math.sin(obs.theta0)
    c = math.cos(obs.theta0)
    eta = y0[5] ** 2 - c * c * (a * a - L * L / (s * s))
    state = PhaseState(
        point=BLPoint(t=0.0, r=obs.r0, theta=obs.theta0, phi=obs.phi0),
        p_r=y0[4], p_theta=y0[5])
    return state, ConservedSet.from_impact_parameters(L, eta, E=1.0, params=p)


def angles_from_ray(state: PhaseState, c: ConservedSet, obs: ObserverSpec,
                    params: KerrParams | None = None) -> DirectionAngles:
    """Sky angles of a ray at the observer's location (inverse of
    :func:`ray_from_angles`)."""
    p = params if params is not None else obs.params
    a = p.a
    one_minus = 1.0 - obs.Omega * c.lam
    if one_minus == 0.0:
        raise DegenerateRayError(
            "1 - Omega*lambda = 0: ray is degenerate in the rotating frame"
        )
    m = metric_scalars(obs.r0, obs.theta0, p)
    u0 = tetrad(obs).u0
    rho0 = obs.rho0
    rho02 = rho0 * rho0
    s = math.sin(obs.theta0)
    sd = math.sqrt(m.delta)

    dr = m.delta * state.p_r / rho02
    dth = state.p_theta / rho02
    P = c.E * (obs.r0 ** 2 + a * a) - a * c.L
    dphi = (a * P / (m.delta * rho02) - a * c.E / rho02
            + c.L / (rho02 * s * s))

    cos_a = rho0 * dr / (u0 * c.E * one_minus * sd)
    sa_cb = rho0 * dth / (u0 * c.E * one_minus)
    coef = (a * (a - 2.0 * obs.r0 * obs.Omega) * s * s - m.delta) \
        / (rho02 * sd * s)
    sa_sb = (dphi / (u0 * u0 * c.E * one_minus) - obs.Omega) / coef

    if abs(cos_a) > 1.0 + CLAMP_SLACK:
        raise DomainError(f"cos(alpha)={cos_a} off [-1, 1] beyond slack")
    alpha = math.acos(min(1.0, max(-1.0, cos_a)))
    beta = math.atan2(sa_sb, sa_cb) % (2.0 * math.pi)
    return DirectionAngles(alpha=alpha, beta=beta)
