"""Hot numerical kernels: geodesic right-hand side, adaptive Dormand-Prince
5(4) stepping, endpoint/dense integration drivers, local-frame ray launch and
the pixel render loops.

Everything here is scalar/array code compiled with numba ``@njit`` by default;
with ``KERRSHADOW_PURE_NUMPY=1`` the same functions run uncompiled (see
:mod:`kerrshadow._accel`). No function in this module raises: drivers return
integer reason codes so they stay nopython-compatible.

State vector layout (length 7): ``t, r, theta, phi, p_r, p_theta, sigma``
with the energy E and axial momentum L passed alongside as constants of
motion. sigma is the Mino-type time, d sigma = E dtau / rho^2.
"""

from __future__ import annotations

import math

import numpy as np

from ._accel import njit, prange

# Termination reason codes shared with geodesics.TerminationReason.
RUNNING = 0
HORIZON = 1
ESCAPED = 2
MAX_STEPS = 3
TURNING_BOUNDED = 4
STEP_FAILURE = 5

# Dormand-Prince 5(4) tableau. Row 7 of the stage coefficients equals the
# 5th-order weights (FSAL): the last stage evaluation is reused as k1 of the
# next step.
_DP_C = np.array([0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0])
_DP_A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0,
     0.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0, 0.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0, 0.0],
])
_DP_B = _DP_A[6].copy()
# b5 - b4: error estimator weights.
_DP_E = np.array([
    71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0,
    -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0,
])

_MIN_SIN = 1e-9       # polar guard for 1/sin(theta) terms
_MIN_DELTA = 1e-300   # keeps arithmetic finite if a trial stage overshoots r+
# Null-shell renormalization region: below this delta the radial momentum
# grows like 1/delta and integration error transverse to the H = 0 shell is
# amplified by P^2/(delta rho^2), so p_r is re-solved from the constraint.
_PROJECT_DELTA = 0.5


@njit(cache=True)
def geo_rhs(y, dy, a, E, L, direction):
    """Hamiltonian vector field plus the cyclic and Mino-time quadratures.

    direction = +1 integrates forward in tau, -1 after the reversal
    tau -> -tau (the whole field changes sign).
    """
    r = y[1]
    th = y[2]
    pr = y[4]
    pth = y[5]

    s = math.sin(th)
    if -_MIN_SIN < s < _MIN_SIN:
        s = _MIN_SIN if s >= 0.0 else -_MIN_SIN
    c = math.cos(th)
    s2 = s * s

    a2 = a * a
    rho2 = r * r + a2 * c * c
    delta = r * r - 2.0 * r + a2
    if delta < _MIN_DELTA:
        delta = _MIN_DELTA
    P = E * (r * r + a2) - a * L

    # 2 rho^2 H = delta p_r^2 + p_th^2 - P^2/delta + T(theta)
    Ls = L / s
    T = (Ls - a * E * s) ** 2
    G = delta * pr * pr + pth * pth - P * P / delta + T

    dP = 2.0 * r * E
    dD = 2.0 * r - 2.0
    dG_dr = dD * pr * pr - (2.0 * P * dP * delta - P * P * dD) / (delta * delta)
    dT_dth = -2.0 * Ls * Ls * (c / s) + 2.0 * a2 * E * E * s * c

    inv_rho2 = 1.0 / rho2
    inv_rho4 = inv_rho2 * inv_rho2

    dy[0] = direction * ((r * r + a2) * P / (delta * rho2)
                         + a * (L - a * E * s2) * inv_rho2)
    dy[1] = direction * (delta * pr * inv_rho2)
    dy[2] = direction * (pth * inv_rho2)
    dy[3] = direction * (a * P / (delta * rho2) - a * E * inv_rho2
                         + L / (rho2 * s2))
    dy[4] = direction * (-(0.5 * dG_dr * inv_rho2 - G * r * inv_rho4))
    dy[5] = direction * (-(0.5 * dT_dth * inv_rho2 + G * a2 * s * c * inv_rho4))
    dy[6] = direction * (E * inv_rho2)


@njit(cache=True)
def _project_null(y, a, E, L):
    """Re-solve p_r from the null condition 2 rho^2 H = 0 near the horizon,
    keeping the integrated sign. Only the magnitude is replaced; returns
    True when a projection happened (the cached FSAL stage is then stale).

    Rays handled by the drivers are exactly null, so on the ill-conditioned
    stretch delta -> 0 the constraint is a better source for p_r than the
    integrated value. Skipped when the radicand is nonpositive (radial
    turning point inside the projection region)."""
    r = y[1]
    delta = r * r - 2.0 * r + a * a
    if delta >= _PROJECT_DELTA or delta <= 0.0:
        return False
    s = math.sin(y[2])
    if -_MIN_SIN < s < _MIN_SIN:
        s = _MIN_SIN if s >= 0.0 else -_MIN_SIN
    P = E * (r * r + a * a) - a * L
    T = (L / s - a * E * s) ** 2
    rad = P * P - delta * (y[5] * y[5] + T)
    if rad <= 0.0:
        return False
    pr = math.sqrt(rad) / delta
    y[4] = pr if y[4] >= 0.0 else -pr
    return True


@njit(cache=True)
def _error_norm(err, y, ynew, rtol, atol):
    acc = 0.0
    for i in range(7):
        sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
        e = err[i] / sc
        acc += e * e
    return math.sqrt(acc / 7.0)


@njit(cache=True)
def integrate_endpoint(y0, a, E, L, direction, rtol, atol,
                       r_inner, r_outer, max_steps, sigma_max, h0):
    """Integrate until termination, returning only the final state.

    Returns (y_end, reason, steps). A step that would overshoot the escape
    radius is retried with a shrunk h so the terminal state lands on the
    sphere r = r_outer (within 1e-6 relative) at full integration accuracy.
    """
    y = y0.copy()
    ynew = np.empty(7)
    ytmp = np.empty(7)
    err = np.empty(7)
    k = np.empty((7, 7))

    geo_rhs(y, k[0], a, E, L, direction)
    h = h0
    steps = 0
    rejected_min = False

    while True:
        if steps >= max_steps:
            return y, MAX_STEPS, steps
        # Horizon approach: never step further than a fraction of the gap.
        drdt = k[0, 1]
        if drdt < 0.0:
            gap = y[1] - (r_inner * 0.999999)
            hmax = 0.25 * gap / (-drdt) if -drdt > 1e-300 else h
            if h > hmax:
                h = hmax
        if h < 1e-14:
            return y, STEP_FAILURE, steps

        # Stages 2..7 (stage 7 input is the 5th-order solution, FSAL).
        for i in range(1, 7):
            for m in range(7):
                acc = 0.0
                for j in range(i):
                    acc += _DP_A[i, j] * k[j, m]
                ytmp[m] = y[m] + h * acc
            geo_rhs(ytmp, k[i], a, E, L, direction)
        for m in range(7):
            ynew[m] = y[m]
            for j in range(6):
                ynew[m] += h * _DP_B[j] * k[j, m]
            acc = 0.0
            for j in range(7):
                acc += _DP_E[j] * k[j, m]
            err[m] = h * acc

        enorm = _error_norm(err, y, ynew, rtol, atol)
        if not (enorm <= 1.0):
            # reject: shrink and retry
            fac = 0.9 * enorm ** -0.2 if enorm > 0.0 else 5.0
            if fac < 0.2:
                fac = 0.2
            hnew = h * fac
            if hnew < 1e-14:
                if rejected_min:
                    return y, STEP_FAILURE, steps
                rejected_min = True
                hnew = 1e-14
            h = hnew
            continue
        if ynew[1] >= r_outer * (1.0 + 1e-6):
            # overshoot: land on the sphere instead of interpolating
            h *= 0.95 * (r_outer - y[1]) / (ynew[1] - y[1])
            continue
        rejected_min = False
        steps += 1
        projected = _project_null(ynew, a, E, L)

        # Terminations on the accepted state.
        if ynew[1] >= r_outer:
            return ynew, ESCAPED, steps
        if ynew[1] <= r_inner:
            return ynew, HORIZON, steps
        if abs(ynew[6]) >= sigma_max:
            return ynew, TURNING_BOUNDED, steps

        for m in range(7):
            y[m] = ynew[m]
        if projected:
            geo_rhs(y, k[0], a, E, L, direction)  # FSAL stage is stale
        else:
            for m in range(7):
                k[0, m] = k[6, m]
        fac = 5.0 if enorm == 0.0 else 0.9 * enorm ** -0.2
        if fac > 5.0:
            fac = 5.0
        elif fac < 0.2:
            fac = 0.2
        h *= fac


@njit(cache=True)
def integrate_dense(y0, a, E, L, direction, rtol, atol,
                    r_inner, r_outer, max_steps, sigma_max, h0,
                    store_every, out):
    """Like integrate_endpoint but records accepted states into ``out``.

    out has shape (n_max, 8) with rows [sigma, tau, t, r, theta, phi,
    p_r, p_theta]; tau is the signed physical affine parameter. Returns
    (n_rows, reason, steps). The initial state is row 0 and the terminal
    state is always the last row.
    """
    y = y0.copy()
    ynew = np.empty(7)
    ytmp = np.empty(7)
    err = np.empty(7)
    k = np.empty((7, 7))

    geo_rhs(y, k[0], a, E, L, direction)
    h = h0
    steps = 0
    s_int = 0.0  # internal nonnegative integration parameter
    n = 0
    rejected_min = False

    out[n, 0] = y[6]
    out[n, 1] = 0.0
    out[n, 2] = y[0]
    out[n, 3] = y[1]
    out[n, 4] = y[2]
    out[n, 5] = y[3]
    out[n, 6] = y[4]
    out[n, 7] = y[5]
    n += 1

    reason = RUNNING
    while reason == RUNNING:
        if steps >= max_steps or n >= out.shape[0] - 1:
            reason = MAX_STEPS
            break
        drdt = k[0, 1]
        if drdt < 0.0:
            gap = y[1] - (r_inner * 0.999999)
            hmax = 0.25 * gap / (-drdt) if -drdt > 1e-300 else h
            if h > hmax:
                h = hmax
        if h < 1e-14:
            reason = STEP_FAILURE
            break

        for i in range(1, 7):
            for m in range(7):
                acc = 0.0
                for j in range(i):
                    acc += _DP_A[i, j] * k[j, m]
                ytmp[m] = y[m] + h * acc
            geo_rhs(ytmp, k[i], a, E, L, direction)
        for m in range(7):
            ynew[m] = y[m]
            for j in range(6):
                ynew[m] += h * _DP_B[j] * k[j, m]
            acc = 0.0
            for j in range(7):
                acc += _DP_E[j] * k[j, m]
            err[m] = h * acc

        enorm = _error_norm(err, y, ynew, rtol, atol)
        if not (enorm <= 1.0):
            fac = 0.9 * enorm ** -0.2 if enorm > 0.0 else 5.0
            if fac < 0.2:
                fac = 0.2
            hnew = h * fac
            if hnew < 1e-14:
                if rejected_min:
                    reason = STEP_FAILURE
                    break
                rejected_min = True
                hnew = 1e-14
            h = hnew
            continue
        if ynew[1] >= r_outer * (1.0 + 1e-6):
            # overshoot: land on the sphere instead of interpolating
            h *= 0.95 * (r_outer - y[1]) / (ynew[1] - y[1])
            continue
        rejected_min = False
        steps += 1
        s_int += h
        projected = _project_null(ynew, a, E, L)

        terminal = RUNNING
        if ynew[1] >= r_outer:
            terminal = ESCAPED
        elif ynew[1] <= r_inner:
            terminal = HORIZON
        elif abs(ynew[6]) >= sigma_max:
            terminal = TURNING_BOUNDED

        if terminal != RUNNING or steps % store_every == 0:
            out[n, 0] = ynew[6]
            out[n, 1] = direction * s_int
            out[n, 2] = ynew[0]
            out[n, 3] = ynew[1]
            out[n, 4] = ynew[2]
            out[n, 5] = ynew[3]
            out[n, 6] = ynew[4]
            out[n, 7] = ynew[5]
            n += 1
        if terminal != RUNNING:
            reason = terminal
            break

        for m in range(7):
            y[m] = ynew[m]
        if projected:
            geo_rhs(y, k[0], a, E, L, direction)  # FSAL stage is stale
        else:
            for m in range(7):
                k[0, m] = k[6, m]
        fac = 5.0 if enorm == 0.0 else 0.9 * enorm ** -0.2
        if fac > 5.0:
            fac = 5.0
        elif fac < 0.2:
            fac = 0.2
        h *= fac

    return n, reason, steps


@njit(cache=True)
def launch_from_angles(alpha, beta, a, r0, th0, omega_obs, phi0,
                       u0, ephi_t, ephi_ph,
                       gtt, gtph, gphph, grr, gthth, sqrt_d0, rho0):
    """Initial phase state of the light beam seen at sky angles (alpha, beta).

    The tangent is W(-e_t + N1 e_theta + N2 e_phi + N3 e_r) with W fixed by
    the normalization E = -p_t = 1, which makes the returned vector future
    directed. Returns (y0, L).
    """
    n1 = math.sin(alpha) * math.cos(beta)
    n2 = math.sin(alpha) * math.sin(beta)
    n3 = math.cos(alpha)

    # coordinate components for W = 1
    wt = -u0 + n2 * ephi_t
    wph = -u0 * omega_obs + n2 * ephi_ph
    wr = -(sqrt_d0 / rho0) * n3
    wth = -(1.0 / rho0) * n1

    e_hat = -(gtt * wt + gtph * wph)   # E for W = 1 (negative: past directed)
    inv = 1.0 / e_hat
    L = (gtph * wt + gphph * wph) * inv
    pr = grr * wr * inv
    pth = gthth * wth * inv

    y0 = np.empty(7)
    y0[0] = 0.0
    y0[1] = r0
    y0[2] = th0
    y0[3] = phi0
    y0[4] = pr
    y0[5] = pth
    y0[6] = 0.0
    return y0, L


@njit(cache=True)
def _sky_quadrant(theta, phi, phi0):
    """Color index 1..4 from the celestial-sphere hit point.

    The azimuth seam is pinned to the observer's phi0. theta outside (0, pi)
    is folded back over the pole (phi then shifts by pi).
    """
    two_pi = 2.0 * math.pi
    th = theta % two_pi
    if th < 0.0:
        th += two_pi
    if th > math.pi:
        th = two_pi - th
        phi = phi + math.pi
    dphi = (phi - phi0) % two_pi
    if dphi < 0.0:
        dphi += two_pi
    north = th < 0.5 * math.pi
    first_half = dphi < math.pi
    if north:
        return 1 if first_half else 2
    return 3 if first_half else 4


@njit(cache=True)
def trace_pixel_index(x_plane, y_plane, a, r0, th0, omega_obs, phi0,
                      u0, ephi_t, ephi_ph,
                      gtt, gtph, gphph, grr, gthth, sqrt_d0, rho0,
                      rtol, atol, r_inner, r_celestial, max_steps, sigma_max):
    """Backward-trace one image-plane point; returns a color index:
    0 black (horizon / trapped), 1..4 celestial quadrant, 5 step failure."""
    rho_p = math.hypot(x_plane, y_plane)
    alpha = 2.0 * math.atan(0.5 * rho_p)
    beta = math.atan2(x_plane, y_plane)
    y0, L = launch_from_angles(alpha, beta, a, r0, th0, omega_obs, phi0,
                               u0, ephi_t, ephi_ph,
                               gtt, gtph, gphph, grr, gthth, sqrt_d0, rho0)
    yend, reason, _ = integrate_endpoint(
        y0, a, 1.0, L, -1.0, rtol, atol,
        r_inner, r_celestial, max_steps, sigma_max, 1e-3)
    if reason == ESCAPED:
        return _sky_quadrant(yend[2], yend[5], phi0)
    if reason == STEP_FAILURE:
        return 5
    return 0


@njit(cache=True, parallel=True)
def render_indices(width, height, extent, a, r0, th0, omega_obs, phi0,
                   u0, ephi_t, ephi_ph,
                   gtt, gtph, gphph, grr, gthth, sqrt_d0, rho0,
                   rtol, atol, r_inner, r_celestial, max_steps, sigma_max):
    """Color-index raster for the full image plane window
    [-extent, extent]^2, pixel (row 0, col 0) at the top-left. Pixels are
    independent, so the result does not depend on the worker count."""
    idx = np.zeros((height, width), dtype=np.uint8)
    sx = 2.0 * extent / width
    sy = 2.0 * extent / height
    for p in prange(width * height):
        j = p // width
        i = p - j * width
        x_plane = -extent + (i + 0.5) * sx
        y_plane = extent - (j + 0.5) * sy
        idx[j, i] = trace_pixel_index(
            x_plane, y_plane, a, r0, th0, omega_obs, phi0,
            u0, ephi_t, ephi_ph,
            gtt, gtph, gphph, grr, gthth, sqrt_d0, rho0,
            rtol, atol, r_inner, r_celestial, max_steps, sigma_max)
    return idx


@njit(cache=True, parallel=True)
def render_indices_flat(width, height, extent, r0, th0, phi0, r_celestial):
    """Straight-ray control image: same sky-angle conventions, flat space.

    Rays leave the observer's position along the reversed local direction
    and are intersected with the sphere r = r_celestial analytically.
    """
    idx = np.zeros((height, width), dtype=np.uint8)
    sx = 2.0 * extent / width
    sy = 2.0 * extent / height

    sth = math.sin(th0)
    cth = math.cos(th0)
    sph = math.sin(phi0)
    cph = math.cos(phi0)
    # observer position and local spherical basis
    px = r0 * sth * cph
    py = r0 * sth * sph
    pz = r0 * cth
    rhx, rhy, rhz = sth * cph, sth * sph, cth
    thx, thy, thz = cth * cph, cth * sph, -sth
    phx, phy, phz = -sph, cph, 0.0

    for p in prange(width * height):
        j = p // width
        i = p - j * width
        x_plane = -extent + (i + 0.5) * sx
        y_plane = extent - (j + 0.5) * sy
        rho_p = math.hypot(x_plane, y_plane)
        alpha = 2.0 * math.atan(0.5 * rho_p)
        beta = math.atan2(x_plane, y_plane)
        n1 = math.sin(alpha) * math.cos(beta)
        n2 = math.sin(alpha) * math.sin(beta)
        n3 = math.cos(alpha)
        # reversed spatial part of the beam tangent (see launch_from_angles)
        dx = -n3 * rhx - n1 * thx + n2 * phx
        dy_ = -n3 * rhy - n1 * thy + n2 * phy
        dz = -n3 * rhz - n1 * thz + n2 * phz
        b = px * dx + py * dy_ + pz * dz
        disc = b * b + r_celestial * r_celestial - r0 * r0
        s = -b + math.sqrt(disc)
        hx = px + s * dx
        hy = py + s * dy_
        hz = pz + s * dz
        theta = math.acos(hz / r_celestial)
        phi = math.atan2(hy, hx)
        idx[j, i] = _sky_quadrant(theta, phi, phi0)
    return idx
