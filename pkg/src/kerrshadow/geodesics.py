"""Null-geodesic dynamics: Hamiltonian, first integrals, quadrature
potentials, turning points, and the adaptive integrator with horizon/escape
termination.

The equations of motion are integrated in the 4D Hamiltonian form (r, theta,
p_r, p_theta) plus the cyclic quadratures for t and phi and the Mino-time
quadrature for sigma; the square-root form of the radial/polar equations is
kept only as a diagnostic (no sign bookkeeping at turning points). Energy is
not integrated: E and L parameterize the flow.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .kerr import BLPoint, DomainError, KerrParams, guarded_sin, horizon_radius

TRAJECTORY_CSV_HEADER = "sigma,tau,t,r,theta,phi,p_r,p_theta"


class StepFailureError(RuntimeError):
    """The step controller hit the minimum step size with the error still
    above tolerance."""


@dataclass(frozen=True)
class ConservedSet:
    """First integrals of a ray: energy E, axial momentum L, the impact
    parameters lambda = L/E and eta, and the Carter integral value
    F = Q + (L - aE)^2."""

    E: float
    L: float
    lam: float
    eta: float
    Q: float
    F: float

    @classmethod
    def from_impact_parameters(cls, lam: float, eta: float, E: float = 1.0,
                               params: KerrParams | None = None,
                               a: float | None = None) -> "ConservedSet":
        if a is None:
            a = params.a if params is not None else 0.0
        L = lam * E
        # On the null shell F = E^2 (eta + (lambda - a)^2); Q follows from
        # F = Q + (L - aE)^2.
        F = E * E * (eta + (lam - a) ** 2)
        Q = F - (L - a * E) ** 2
        return cls(E=E, L=L, lam=lam, eta=eta, Q=Q, F=F)


@dataclass(frozen=True)
class PhaseState:
    """Position plus the two non-cyclic momenta (p_t = -E and p_phi = L live
    in the ConservedSet)."""

    point: BLPoint
    p_r: float
    p_theta: float


@dataclass(frozen=True)
class TrajectorySample:
    sigma: float
    tau: float
    state: PhaseState

    @property
    def t(self) -> float:
        return self.state.point.t

    @property
    def phi(self) -> float:
        return self.state.point.phi


class TerminationReason(enum.Enum):
    HorizonReached = _kernels.HORIZON
    Escaped = _kernels.ESCAPED
    MaxSteps = _kernels.MAX_STEPS
    TurningBounded = _kernels.TURNING_BOUNDED


@dataclass(frozen=True)
class IntegratorControls:
    """Tolerances and termination settings for :func:`integrate`."""

    rtol: float = 1e-10
    atol: float = 1e-12
    delta_h: float = 1e-6        # relative horizon shell: stop at r+(1+delta_h)
    r_max: float = 1e3           # escape radius
    max_steps: int = 1_000_000
    sigma_max: float = 200.0     # Mino-time budget for bounded rays
    h0: float = 1e-3
    forward: bool = True         # False integrates after tau -> -tau
    store_every: int = 1
    tol_null: float = 1e-8       # launch states must satisfy |H| < tol_null E^2


def radial_potential(r: float, lam: float, eta: float,
                     params: KerrParams) -> float:
    """R(r) = (r^2 + a^2 - a lam)^2 - (eta + (lam - a)^2) Delta(r)."""
    a = params.a
    delta = r * r - 2.0 * r + a * a
    return (r * r + a * a - a * lam) ** 2 - (eta + (lam - a) ** 2) * delta


def polar_potential(theta: float, lam: float, eta: float,
                    params: KerrParams) -> float:
    """Theta(theta) = eta + cos^2(theta) (a^2 - lam^2 / sin^2(theta))."""
    a = params.a
    s = guarded_sin(theta)
    c = math.cos(theta)
    return eta + c * c * (a * a - lam * lam / (s * s))


def radial_potential_deriv(r: float, lam: float, eta: float,
                           params: KerrParams) -> float:
    a = params.a
    return (4.0 * r * (r * r + a * a - a * lam)
            - (eta + (lam - a) ** 2) * (2.0 * r - 2.0))


def polar_potential_deriv(theta: float, lam: float, eta: float,
                          params: KerrParams) -> float:
    a = params.a
    s = guarded_sin(theta)
    c = math.cos(theta)
    return (-2.0 * s * c * (a * a - lam * lam / (s * s))
            + 2.0 * lam * lam * c * c * c / (s * s * s))


def hamiltonian(state: PhaseState, c: ConservedSet, params: KerrParams) -> float:
    """Geodesic Hamiltonian H = g^{ij} p_i p_j / 2; zero on null rays."""
    a = params.a
    r = state.point.r
    th = state.point.theta
    s = guarded_sin(th)
    cth = math.cos(th)
    rho2 = r * r + a * a * cth * cth
    delta = r * r - 2.0 * r + a * a
    P = c.E * (r * r + a * a) - a * c.L
    T = (c.L / s - a * c.E * s) ** 2
    # explicit multiplies mirror the integration kernel bit for bit; the
    # delta cancellation near the horizon amplifies any last-ulp difference
    return (delta * state.p_r * state.p_r + state.p_theta * state.p_theta
            - P * P / delta + T) / (2.0 * rho2)


def carter_integral(state: PhaseState, c: ConservedSet,
                    params: KerrParams) -> float:
    """F = p_theta^2 + (a E sin(theta) - L/sin(theta))^2 - 2 a^2 H cos^2."""
    a = params.a
    th = state.point.theta
    s = guarded_sin(th)
    cth = math.cos(th)
    H = hamiltonian(state, c, params)
    return (state.p_theta ** 2 + (a * c.E * s - c.L / s) ** 2
            - 2.0 * a * a * H * cth * cth)


def state_from_integrals(r: float, theta: float, lam: float, eta: float,
                         params: KerrParams, sign_r: int = 1,
                         sign_theta: int = 1, E: float = 1.0,
                         t: float = 0.0, phi: float = 0.0,
                         ) -> tuple[PhaseState, ConservedSet]:
    """Build a null phase state at (r, theta) from impact parameters by
    solving the zero-Hamiltonian and Carter levels for the momenta:
    p_r = sign_r E sqrt(R)/Delta, p_theta = sign_theta E sqrt(Theta)."""
    R = radial_potential(r, lam, eta, params)
    Th = polar_potential(theta, lam, eta, params)
    if R < 0.0 or Th < 0.0:
        raise DomainError(
            f"(r={r}, theta={theta}) lies outside the region of possible "
            f"motion for lambda={lam}, eta={eta} (R={R}, Theta={Th})"
        )
    a = params.a
    delta = r * r - 2.0 * r + a * a
    p_r = sign_r * E * math.sqrt(R) / delta
    p_theta = sign_theta * E * math.sqrt(Th)
    state = PhaseState(point=BLPoint(t=t, r=r, theta=theta, phi=phi),
                       p_r=p_r, p_theta=p_theta)
    return state, ConservedSet.from_impact_parameters(lam, eta, E=E, params=params)


def equations_of_motion(state: PhaseState, c: ConservedSet,
                        params: KerrParams) -> np.ndarray:
    """d(t, r, theta, phi, p_r, p_theta, sigma)/dtau at the given state."""
    y = _state_to_vector(state)
    dy = np.empty(7)
    _kernels.geo_rhs(y, dy, params.a, c.E, c.L, 1.0)
    return dy


def _state_to_vector(state: PhaseState) -> np.ndarray:
    p = state.point
    return np.array([p.t, p.r, p.theta, p.phi, state.p_r, state.p_theta, 0.0])


def _require_null(initial: PhaseState, c: ConservedSet, params: KerrParams,
                  tol_null: float) -> None:
    h = hamiltonian(initial, c, params)
    if abs(h) > tol_null * max(c.E * c.E, 1e-30):
        raise DomainError(
            f"initial state is off the null shell: |H| = {abs(h)} exceeds "
            f"tol_null * E^2 = {tol_null * c.E * c.E}"
        )


def integrate(initial: PhaseState, c: ConservedSet, params: KerrParams,
              controls: IntegratorControls = IntegratorControls(),
              ) -> tuple[list[TrajectorySample], TerminationReason]:
    """Adaptive integration of a null ray until it reaches the horizon
    shell, escapes past r_max, or exhausts its step/Mino-time budget."""
    _require_null(initial, c, params, controls.tol_null)
    y0 = _state_to_vector(initial)
    y0[6] = 0.0
    n_max = controls.max_steps // controls.store_every + 8
    out = np.empty((n_max, 8))
    direction = 1.0 if controls.forward else -1.0
    r_inner = horizon_radius(params) * (1.0 + controls.delta_h)
    n, reason, _steps = _kernels.integrate_dense(
        y0, params.a, c.E, c.L, direction, controls.rtol, controls.atol,
        r_inner, controls.r_max, controls.max_steps, controls.sigma_max,
        controls.h0, controls.store_every, out)
    if reason == _kernels.STEP_FAILURE:
        raise StepFailureError(
            "step controller could not meet tolerance above the minimum "
            "step size")
    samples = [
        TrajectorySample(
            sigma=row[0], tau=row[1],
            state=PhaseState(
                point=BLPoint(t=row[2], r=row[3], theta=row[4], phi=row[5]),
                p_r=row[6], p_theta=row[7]))
        for row in out[:n]
    ]
    return samples, TerminationReason(reason)


def integrate_raw(initial: PhaseState, c: ConservedSet, params: KerrParams,
                  controls: IntegratorControls = IntegratorControls(),
                  ) -> tuple[np.ndarray, TerminationReason]:
    """Array variant of :func:`integrate`: rows follow
    TRAJECTORY_CSV_HEADER."""
    _require_null(initial, c, params, controls.tol_null)
    y0 = _state_to_vector(initial)
    n_max = controls.max_steps // controls.store_every + 8
    out = np.empty((n_max, 8))
    direction = 1.0 if controls.forward else -1.0
    r_inner = horizon_radius(params) * (1.0 + controls.delta_h)
    n, reason, _steps = _kernels.integrate_dense(
        y0, params.a, c.E, c.L, direction, controls.rtol, controls.atol,
        r_inner, controls.r_max, controls.max_steps, controls.sigma_max,
        controls.h0, controls.store_every, out)
    if reason == _kernels.STEP_FAILURE:
        raise StepFailureError(
            "step controller could not meet tolerance above the minimum "
            "step size")
    return out[:n].copy(), TerminationReason(reason)


def turning_points(lam: float, eta: float, params: KerrParams,
                   critical_tol: float = 1e-8,
                   ) -> tuple[list[tuple[float, bool]], list[tuple[float, bool]]]:
    """Real zeros of R on (r_plus, inf) and of Theta on (0, pi), ascending.

    Returns (radial, polar) lists of (root, is_critical) where is_critical
    flags a multiplicity-2 root. Radial roots come from the companion
    matrix of the quartic polished by Newton; a sign-change bracket scan
    would miss exactly the double roots that matter here.
    """
    a = params.a
    rp = horizon_radius(params)
    K = eta + (lam - a) ** 2
    b0 = a * a - a * lam
    # R = r^4 + (2 b0 - K) r^2 + 2 K r + b0^2 - K a^2
    coeffs = np.array([1.0, 0.0, 2.0 * b0 - K, 2.0 * K, b0 * b0 - K * a * a])
    # A double root comes out of the companion matrix as a complex pair with
    # |imag| ~ sqrt(eps), so polish every real part and let the residual
    # filter discard genuinely complex pairs.
    radial: list[tuple[float, bool]] = []
    seen: list[float] = []
    for z in np.roots(coeffs):
        r = float(z.real)
        for _ in range(80):
            f = radial_potential(r, lam, eta, params)
            df = radial_potential_deriv(r, lam, eta, params)
            if df == 0.0 or not math.isfinite(r):
                break
            step = f / df
            r -= step
            if abs(step) < 1e-15 * max(1.0, abs(r)):
                break
        if not math.isfinite(r) or not (r > rp * (1.0 + 1e-12)):
            continue
        if abs(radial_potential(r, lam, eta, params)) > 1e-10 * max(1.0, r ** 4):
            continue
        # a double root is only located to ~sqrt(eps) under coefficient
        # roundoff, so partner copies within 1e-7 relative merge into one
        # critical root
        if any(abs(r - q) < 1e-7 * max(1.0, abs(q)) for q in seen):
            for i, (q, _) in enumerate(radial):
                if abs(r - q) < 1e-7 * max(1.0, abs(q)):
                    radial[i] = (q, True)
            continue
        seen.append(r)
        crit = abs(radial_potential_deriv(r, lam, eta, params)) < critical_tol
        radial.append((r, crit))
    radial.sort(key=lambda t: t[0])

    # Theta roots via v = cos^2(theta): a^2 v^2 - (a^2 - lam^2 - eta) v - eta = 0
    polar: list[tuple[float, bool]] = []
    vs: list[float] = []
    B = a * a - lam * lam - eta
    if a == 0.0:
        denom = lam * lam + eta
        if denom != 0.0:
            vs.append(eta / denom)
    else:
        disc = B * B + 4.0 * a * a * eta
        if disc >= 0.0:
            sq = math.sqrt(disc)
            vs.extend([(B + sq) / (2.0 * a * a), (B - sq) / (2.0 * a * a)])
    for v in vs:
        if v < -1e-14 or v >= 1.0:
            continue
        v = max(v, 0.0)
        th = math.acos(math.sqrt(v))
        for root in {th, math.pi - th}:
            crit = abs(polar_potential_deriv(root, lam, eta, params)) < critical_tol
            polar.append((root, crit))
    polar.sort(key=lambda t: t[0])
    merged: list[tuple[float, bool]] = []
    for root, crit in polar:
        if merged and abs(root - merged[-1][0]) < 1e-12:
            merged[-1] = (merged[-1][0], True)
        else:
            merged.append((root, crit))
    return radial, merged


def trajectory_to_csv(samples: list[TrajectorySample] | np.ndarray) -> str:
    """CSV text with full double precision (17 significant digits)."""
    lines = [TRAJECTORY_CSV_HEADER]
    if isinstance(samples, np.ndarray):
        rows = samples
    else:
        rows = [
            (s.sigma, s.tau, s.t, s.state.point.r, s.state.point.theta,
             s.phi, s.state.p_r, s.state.p_theta)
            for s in samples
        ]
    for row in rows:
        lines.append(",".join(f"{v:.17g}" for v in row))
    return "\n".join(lines) + "\n"
