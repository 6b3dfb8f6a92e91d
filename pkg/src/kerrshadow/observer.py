"""Stationary observers: worldlines at fixed (r0, theta0) rotating with
constant angular velocity Omega, their admissible Omega range, four-velocity
and orthonormal tetrad.

The tetrad orientation keeps e_r pointing toward decreasing r and e_theta
toward decreasing theta, so the sky angles used by the shadow module apply
unchanged.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .kerr import (
    DomainError,
    KerrParams,
    horizon_radius,
    metric_matrix,
    metric_scalars,
)

# Construction rejects Omega closer than this to the admissibility boundary,
# where u0 diverges.
OMEGA_MARGIN = 1e-12


class TimelikeViolationError(ValueError):
    """Omega outside the open admissible interval (Omega_-, Omega_+)."""


class ErgosphereViolationError(ValueError):
    """A static observer requested inside the ergoregion."""


class ObserverKind(enum.Enum):
    ZAMO = "zamo"
    Static = "static"
    Carter = "carter"


def omega_bounds(r0: float, theta0: float, params: KerrParams,
                 ) -> tuple[float, float]:
    """Admissible angular velocities (Omega_-, Omega_+) for a timelike
    worldline at (r0, theta0)."""
    m = metric_scalars(r0, theta0, params)  # validates r0 > r_plus
    a = params.a
    s = math.sin(theta0)
    sd = math.sqrt(m.delta)
    om_m = (a - sd / s) / (r0 * r0 + a * a - a * sd * s)
    om_p = (a + sd / s) / (r0 * r0 + a * a + a * sd * s)
    return om_m, om_p


@dataclass(frozen=True)
class ObserverSpec:
    """Stationary observer at (r0, theta0) with phi = Omega t + phi0."""

    params: KerrParams
    r0: float
    theta0: float
    Omega: float
    phi0: float = 0.0

    def __post_init__(self):
        rp = horizon_radius(self.params)
        if self.r0 <= rp:
            raise DomainError(
                f"observer radius r0={self.r0} must exceed r_plus={rp}"
            )
        if not (0.0 < self.theta0 < math.pi):
            raise DomainError(
                f"observer theta0={self.theta0} not strictly inside (0, pi)"
            )
        om_m, om_p = omega_bounds(self.r0, self.theta0, self.params)
        if not (om_m + OMEGA_MARGIN < self.Omega < om_p - OMEGA_MARGIN):
            raise TimelikeViolationError(
                f"Omega={self.Omega} outside the admissible range "
                f"({om_m}, {om_p}); the worldline would not be timelike"
            )

    @property
    def rho0(self) -> float:
        c = math.cos(self.theta0)
        return math.sqrt(self.r0 ** 2 + self.params.a ** 2 * c * c)

    @property
    def scalars(self):
        return metric_scalars(self.r0, self.theta0, self.params)

    @property
    def omega0(self) -> float:
        """Frame-dragging angular velocity at the observer."""
        return self.scalars.omega


@dataclass(frozen=True)
class Tetrad:
    """Orthonormal frame in coordinate-basis components, order
    (t, r, theta, phi); rows of :attr:`matrix` are e_t, e_r, e_theta, e_phi
    and e_t is the four-velocity."""

    e_t: np.ndarray
    e_r: np.ndarray
    e_theta: np.ndarray
    e_phi: np.ndarray
    u0: float

    @property
    def matrix(self) -> np.ndarray:
        return np.vstack([self.e_t, self.e_r, self.e_theta, self.e_phi])


def u_time_component(obs: ObserverSpec, params: KerrParams | None = None,
                     ) -> float:
    """dt/dtau of the observer four-velocity,
    u0 = rho0 (Delta - a^2 sin^2 + Omega (4 a r0 - A0 Omega) sin^2)^(-1/2)."""
    p = params if params is not None else obs.params
    m = metric_scalars(obs.r0, obs.theta0, p)
    a = p.a
    s2 = math.sin(obs.theta0) ** 2
    radicand = (m.delta - a * a * s2
                + obs.Omega * (4.0 * a * obs.r0 - m.A * obs.Omega) * s2)
    if radicand <= 0.0:
        raise TimelikeViolationError(
            f"u0 radicand {radicand} <= 0 for Omega={obs.Omega}; the "
            f"worldline is not timelike"
        )
    return obs.rho0 / math.sqrt(radicand)


def tetrad(obs: ObserverSpec, params: KerrParams | None = None) -> Tetrad:
    """Orthonormal tetrad carried by the observer.

    e_t = u0 (d_t + Omega d_phi), e_r = -(sqrt(Delta)/rho0) d_r,
    e_theta = -(1/rho0) d_theta, and e_phi mixes d_t and d_phi so that it is
    unit and orthogonal to u.
    """
    p = params if params is not None else obs.params
    u0 = u_time_component(obs, p)
    m = metric_scalars(obs.r0, obs.theta0, p)
    a = p.a
    s = math.sin(obs.theta0)
    s2 = s * s
    rho0 = obs.rho0
    rho02 = rho0 * rho0
    sd = math.sqrt(m.delta)

    e_t = np.array([u0, 0.0, 0.0, u0 * obs.Omega])
    e_r = np.array([0.0, -sd / rho0, 0.0, 0.0])
    e_theta = np.array([0.0, 0.0, -1.0 / rho0, 0.0])
    pref = u0 / (s * sd)
    e_phi = np.array([
        pref * (m.A * s2 / rho02) * (obs.Omega - m.omega),
        0.0,
        0.0,
        pref * (1.0 - 2.0 * obs.r0 * (1.0 - a * obs.Omega * s2) / rho02),
    ])
    return Tetrad(e_t=e_t, e_r=e_r, e_theta=e_theta, e_phi=e_phi, u0=u0)


def named_observer(kind: ObserverKind | str, r0: float, theta0: float,
                   params: KerrParams, phi0: float = 0.0) -> ObserverSpec:
    """The three textbook stationary observers: ZAMO (Omega = omega0),
    static (Omega = 0, only outside the ergoregion) and Carter
    (Omega = a / (r0^2 + a^2))."""
    if isinstance(kind, str):
        kind = ObserverKind(kind.lower())
    a = params.a
    if kind is ObserverKind.ZAMO:
        m = metric_scalars(r0, theta0, params)
        om = m.omega
    elif kind is ObserverKind.Static:
        c = math.cos(theta0)
        if r0 * r0 - 2.0 * r0 + a * a * c * c <= 0.0:
            raise ErgosphereViolationError(
                f"static observer at r0={r0}, theta0={theta0} lies inside "
                f"the ergoregion; no Omega=0 worldline is timelike there"
            )
        om = 0.0
    elif kind is ObserverKind.Carter:
        om = a / (r0 * r0 + a * a)
    else:  # pragma: no cover
        raise ValueError(f"unknown observer kind {kind}")
    return ObserverSpec(params=params, r0=r0, theta0=theta0, Omega=om,
                        phi0=phi0)


def table_u0(kind: ObserverKind | str, r0: float, theta0: float,
             params: KerrParams) -> float:
    """Closed-form u0 of the three named observers, kept separate from the
    general formula so the two can be cross-checked."""
    if isinstance(kind, str):
        kind = ObserverKind(kind.lower())
    a = params.a
    m = metric_scalars(r0, theta0, params)
    c = math.cos(theta0)
    s2 = math.sin(theta0) ** 2
    rho02 = r0 * r0 + a * a * c * c
    if kind is ObserverKind.ZAMO:
        return math.sqrt(r0 * r0 + a * a
                         + 2.0 * r0 * a * a * s2 / rho02) / math.sqrt(m.delta)
    if kind is ObserverKind.Static:
        return math.sqrt(rho02) / math.sqrt(r0 * r0 - 2.0 * r0 + a * a * c * c)
    if kind is ObserverKind.Carter:
        return (r0 * r0 + a * a) / (math.sqrt(rho02) * math.sqrt(m.delta))
    raise ValueError(f"unknown observer kind {kind}")  # pragma: no cover


def observer_kernel_block(obs: ObserverSpec) -> tuple[float, ...]:
    """Scalar block consumed by the ray-launch and render kernels:
    (a, r0, theta0, Omega, phi0, u0, e_phi^t, e_phi^phi,
    g_tt, g_tphi, g_phiphi, g_rr, g_thth, sqrt(Delta0), rho0)."""
    p = obs.params
    tet = tetrad(obs)
    g = metric_matrix(obs.r0, obs.theta0, p)
    m = metric_scalars(obs.r0, obs.theta0, p)
    return (
        p.a, obs.r0, obs.theta0, obs.Omega, obs.phi0,
        tet.u0, float(tet.e_phi[0]), float(tet.e_phi[3]),
        g[0, 0], g[0, 3], g[3, 3], g[1, 1], g[2, 2],
        math.sqrt(m.delta), obs.rho0,
    )


def observer_report(obs: ObserverSpec) -> str:
    """Plain-text report used by the observer-info command."""
    p = obs.params
    om_m, om_p = omega_bounds(obs.r0, obs.theta0, p)
    tet = tetrad(obs)
    lines = [
        f"spin a                 : {p.a:.17g}",
        f"horizon r_plus         : {horizon_radius(p):.17g}",
        f"observer r0            : {obs.r0:.17g}",
        f"observer theta0        : {obs.theta0:.17g}",
        f"observer Omega         : {obs.Omega:.17g}",
        f"observer phi0          : {obs.phi0:.17g}",
        f"admissible Omega range : ({om_m:.17g}, {om_p:.17g})",
        f"frame dragging omega0  : {obs.omega0:.17g}",
        f"u0 = dt/dtau           : {tet.u0:.17g}",
        "tetrad rows (t, r, theta, phi components):",
    ]
    for name, vec in (("e_t", tet.e_t), ("e_r", tet.e_r),
                      ("e_theta", tet.e_theta), ("e_phi", tet.e_phi)):
        comps = " ".join(f"{v: .17g}" for v in vec)
        lines.append(f"  {name:8s}: {comps}")
    lines.append("named observers at this (r0, theta0):")
    for kind in ObserverKind:
        try:
            o = named_observer(kind, obs.r0, obs.theta0, p)
            lines.append(
                f"  {kind.value:7s}: Omega = {o.Omega:.17g}, "
                f"u0 = {table_u0(kind, obs.r0, obs.theta0, p):.17g}"
            )
        except ErgosphereViolationError:
            lines.append(f"  {kind.value:7s}: not defined (inside ergoregion)")
    return "\n".join(lines) + "\n"
