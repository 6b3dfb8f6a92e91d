import math

import numpy as np
import pytest

from kerrshadow.bifurcation import (
    critical_eta,
    critical_lambda,
    photon_ring_radii,
)
from kerrshadow.geodesics import (
    IntegratorControls,
    TerminationReason,
    hamiltonian,
    integrate_raw,
)
from kerrshadow.kerr import DomainError, KerrParams
from kerrshadow.observer import ObserverSpec, named_observer, tetrad
from kerrshadow.shadow import (
    DirectionAngles,
    PoleError,
    SHADOW_CSV_HEADER,
    angles_from_ray,
    boundary_angles,
    inverse_stereographic,
    ray_from_angles,
    shadow_curve,
    shadow_curve_to_csv,
    stereographic,
    theta_star,
    theta_star_roots,
)


def carter_closed_forms(obs, r_c):
    """Carter-observer closed forms for the boundary angles."""
    a = obs.params.a
    d_c = r_c * r_c - 2.0 * r_c + a * a
    d_0 = obs.r0 ** 2 - 2.0 * obs.r0 + a * a
    sin_a = 2.0 * math.sqrt(d_c) * math.sqrt(d_0) / (
        d_c + d_0 - (obs.r0 - r_c) ** 2 / r_c)
    c2 = math.cos(obs.theta0) ** 2
    sin_b = (a * a * c2 * (r_c - 1.0)
             - r_c * (r_c * r_c - 3.0 * r_c + 2.0 * a * a)) / (
        2.0 * a * r_c * math.sqrt(d_c))
    return sin_a, sin_b


def backward_fate(angles, obs, sigma_max=60.0):
    st, c = ray_from_angles(angles, obs)
    _, reason = integrate_raw(
        st, c, obs.params,
        IntegratorControls(forward=False, sigma_max=sigma_max))
    return reason


# ---------------------------------------------------------------------------
# Theta* roots


def test_theta_star_roots_equatorial_observer():
    p = KerrParams(0.98)
    obs = ObserverSpec(p, 5.0, math.pi / 2, 0.0)
    r1, r2 = photon_ring_radii(p)
    lo, hi = theta_star_roots(obs)
    assert lo == pytest.approx(r1, abs=1e-12)
    assert hi == pytest.approx(r2, abs=1e-12)


def test_theta_star_roots_inclined_observer():
    p = KerrParams(0.98)
    obs = ObserverSpec(p, 5.0, math.pi / 4, 0.0)
    r1, r2 = photon_ring_radii(p)
    lo, hi = theta_star_roots(obs)
    assert r1 < lo < hi < r2  # strict interior, ordered chain
    assert abs(theta_star(lo, obs)) < 1e-9
    assert abs(theta_star(hi, obs)) < 1e-9


def test_theta_star_roots_polar_limit():
    # toward the axis both roots collapse onto the polar orbit radius,
    # the zero of lambda(r_c); bisection gives the independent oracle
    p = KerrParams(0.98)
    r1, r2 = photon_ring_radii(p)
    lo_b, hi_b = r1, r2
    for _ in range(200):
        mid = 0.5 * (lo_b + hi_b)
        if critical_lambda(mid, p) >= 0:
            lo_b = mid
        else:
            hi_b = mid
    r_polar = 0.5 * (lo_b + hi_b)
    obs = ObserverSpec(p, 5.0, 1e-4, 0.0)
    lo, hi = theta_star_roots(obs)
    assert lo == pytest.approx(r_polar, abs=1e-3)
    assert hi == pytest.approx(r_polar, abs=1e-3)


# ---------------------------------------------------------------------------
# Boundary angles


def test_boundary_beta_hits_quarter_turn_at_edges():
    p = KerrParams(0.98)
    obs = ObserverSpec(p, 5.0, math.pi / 4, 0.0)
    lo, hi = theta_star_roots(obs)
    _, bb_lo = boundary_angles(lo, obs)
    _, bb_hi = boundary_angles(hi, obs)
    assert abs(bb_lo) == pytest.approx(math.pi / 2, abs=1e-6)
    assert abs(bb_hi) == pytest.approx(math.pi / 2, abs=1e-6)


def test_boundary_angles_reject_invisible_orbit():
    p = KerrParams(0.98)
    obs = ObserverSpec(p, 5.0, math.pi / 4, 0.0)
    lo, hi = theta_star_roots(obs)
    r1, _ = photon_ring_radii(p)
    with pytest.raises(DomainError):
        boundary_angles(0.5 * (r1 + lo), obs)  # Theta* < 0 there


def test_carter_observer_closed_form_relations():
    # sin(alpha) matches the closed form exactly; the closed form for
    # sin(beta) equals sin(B_beta) * sin(theta0) in our conventions
    for a in (0.5, 0.98):
        p = KerrParams(a)
        for r0 in (3.0, 5.0, 10.0):
            for th0 in (math.pi / 6, math.pi / 4, math.pi / 2):
                obs = named_observer("carter", r0, th0, p)
                lo, hi = theta_star_roots(obs)
                for rc in np.linspace(lo, hi, 9)[1:-1]:
                    b_alpha, b_beta = boundary_angles(float(rc), obs)
                    sin_a, sin_b = carter_closed_forms(obs, float(rc))
                    assert abs(math.sin(b_alpha) - sin_a) < 1e-9
                    assert abs(math.sin(b_beta) * math.sin(th0) - sin_b) < 1e-9


def test_schwarzschild_limit_alpha():
    # oracle from the critical level eta + lambda^2 = 27 of zero spin:
    # sin(alpha) = sqrt(27 (1 - 2/r0)) / r0
    p = KerrParams(1e-3)
    obs = ObserverSpec(p, 5.0, math.pi / 2, 0.0)
    oracle = math.sqrt(27.0 * (1.0 - 2.0 / 5.0)) / 5.0
    assert oracle == pytest.approx(0.804984, abs=1e-6)
    curve = shadow_curve(obs, n_samples=128)
    assert np.max(np.abs(np.sin(curve.alpha) - oracle)) < 1e-3


# ---------------------------------------------------------------------------
# Stereographic projection


def test_stereographic_axis_points():
    assert stereographic(DirectionAngles(0.0, 1.23)) == (0.0, 0.0)
    x, y = stereographic(DirectionAngles(math.pi / 2, math.pi / 2))
    assert (x, y) == (pytest.approx(2.0), pytest.approx(0.0, abs=1e-15))
    x, y = stereographic(DirectionAngles(math.pi / 2, 0.0))
    assert (x, y) == (pytest.approx(0.0, abs=1e-15), pytest.approx(2.0))


def test_stereographic_pole_rejected():
    with pytest.raises(PoleError):
        stereographic(DirectionAngles(math.pi, 0.0))


def test_stereographic_round_trip(rng):
    for _ in range(200):
        alpha = rng.uniform(0.01, math.pi - 0.01)
        beta = rng.uniform(0.0, 2.0 * math.pi)
        x, y = stereographic(DirectionAngles(alpha, beta))
        ang = inverse_stereographic(x, y)
        assert ang.alpha == pytest.approx(alpha, abs=1e-12)
        assert ang.beta == pytest.approx(beta, abs=1e-12)


# ---------------------------------------------------------------------------
# Ray <-> angles


def test_ray_round_trip_and_null(rng):
    p = KerrParams(0.9)
    obs = ObserverSpec(p, 6.0, 1.1, 0.02)
    for _ in range(200):
        alpha = rng.uniform(0.05, math.pi - 0.05)
        beta = rng.uniform(0.0, 2.0 * math.pi)
        st, c = ray_from_angles(DirectionAngles(alpha, beta), obs)
        assert c.E == 1.0
        assert abs(hamiltonian(st, c, p)) < 1e-12
        ang = angles_from_ray(st, c, obs)
        assert ang.alpha == pytest.approx(alpha, abs=1e-10)
        dbeta = (ang.beta - beta + math.pi) % (2.0 * math.pi) - math.pi
        assert abs(dbeta) < 1e-10


def test_center_direction_is_purely_radial():
    p = KerrParams(0.98)
    obs = ObserverSpec(p, 5.0, math.pi / 2, 0.0)
    st, c = ray_from_angles(DirectionAngles(0.0, 0.0), obs)
    assert st.p_theta == 0.0
    # forward tangent points outward; the backward-traced beam dives in
    assert st.p_r > 0.0


def test_launch_matches_tetrad_decomposition(rng):
    # w = W(-e_t + N . e) with W = u0 (Omega L - E)
    from kerrshadow.kerr import metric_matrix

    p = KerrParams(0.95)
    obs = ObserverSpec(p, 4.0, 1.3, 0.03)
    tet = tetrad(obs)
    g = metric_matrix(obs.r0, obs.theta0, p)
    ginv = np.linalg.inv(g)
    for _ in range(50):
        alpha = rng.uniform(0.05, math.pi - 0.05)
        beta = rng.uniform(0.0, 2.0 * math.pi)
        st, c = ray_from_angles(DirectionAngles(alpha, beta), obs)
        w = ginv @ np.array([-c.E, st.p_r, st.p_theta, c.L])
        W = tet.u0 * (obs.Omega * c.L - c.E)
        n1 = math.sin(alpha) * math.cos(beta)
        n2 = math.sin(alpha) * math.sin(beta)
        n3 = math.cos(alpha)
        w_expect = W * (-tet.e_t + n1 * tet.e_theta + n2 * tet.e_phi
                        + n3 * tet.e_r)
        assert np.abs(w - w_expect).max() < 1e-12


# ---------------------------------------------------------------------------
# Shadow curve assembly


def test_curve_d_shape_asymmetry():
    p = KerrParams(0.98)
    obs = named_observer("static", 5.0, math.pi / 2, p)
    curve = shadow_curve(obs, n_samples=512)
    assert set(curve.case.tolist()) == {1}  # r0 beyond the photon shell
    x_min, x_max = curve.X.min(), curve.X.max()
    assert abs(abs(x_min) - abs(x_max)) / max(abs(x_min), abs(x_max)) > 0.05


def test_curve_near_schwarzschild_is_circle():
    p = KerrParams(1e-3)
    obs = ObserverSpec(p, 5.0, math.pi / 2, 0.0)
    curve = shadow_curve(obs, n_samples=256)
    radius = np.hypot(curve.X, curve.Y)
    assert (radius.max() - radius.min()) / radius.mean() < 1e-3
    x_min, x_max = curve.X.min(), curve.X.max()
    assert abs(abs(x_min) - abs(x_max)) / max(abs(x_min), abs(x_max)) < 1e-3


def test_curve_branches_mirror_across_equatorial_axis():
    p = KerrParams(0.98)
    obs = named_observer("static", 5.0, math.pi / 2, p)
    n = 128
    curve = shadow_curve(obs, n_samples=n)
    # branch B revisits the same r_c grid reversed; X agrees, Y flips
    xa, ya = curve.X[1:n - 1], curve.Y[1:n - 1]
    xb, yb = curve.X[n:][::-1], curve.Y[n:][::-1]
    assert np.allclose(xa, xb, atol=1e-13)
    assert np.allclose(ya, -yb, atol=1e-13)


def test_curve_closes():
    p = KerrParams(0.98)
    for obs in (named_observer("static", 5.0, math.pi / 2, p),
                named_observer("zamo", 2.0, math.pi / 2, p)):
        n = 256
        curve = shadow_curve(obs, n_samples=n)
        d = np.hypot(np.diff(np.r_[curve.X, curve.X[0]]),
                     np.diff(np.r_[curve.Y, curve.Y[0]]))
        assert d.max() < 10.0 * np.median(d[d > 0]) + 1e-6


def test_case3_combines_both_forms_with_continuous_seam():
    p = KerrParams(0.98)
    obs = named_observer("zamo", 2.0, math.pi / 2, p)
    lo, hi = theta_star_roots(obs)
    assert lo < obs.r0 < hi
    curve = shadow_curve(obs, n_samples=256)
    assert set(curve.case.tolist()) == {1, 2}
    # the two clause forms meet at r_c = r0: evaluate the seam directly
    pts = []
    for rc in (obs.r0 * (1.0 - 1e-10), obs.r0 * (1.0 + 1e-10)):
        b_alpha, b_beta = boundary_angles(rc, obs)
        pts.append(stereographic(DirectionAngles(b_alpha, math.pi + b_beta)))
    gap = math.hypot(pts[0][0] - pts[1][0], pts[0][1] - pts[1][1])
    assert gap < 1e-6


def test_boundary_rays_straddle_shadow():
    # perturbing alpha by +/- 1e-6 flips the backward fate between escape
    # and capture, so the sampled directions bound the shadow
    p = KerrParams(0.98)
    obs = named_observer("static", 5.0, math.pi / 2, p)
    lo, hi = theta_star_roots(obs)
    for rc in np.linspace(lo, hi, 5)[1:-1]:
        b_alpha, b_beta = boundary_angles(float(rc), obs)
        for beta in (math.pi + b_beta, 2.0 * math.pi - b_beta):
            up = backward_fate(DirectionAngles(b_alpha + 1e-6, beta), obs)
            dn = backward_fate(DirectionAngles(b_alpha - 1e-6, beta), obs)
            assert up is TerminationReason.Escaped
            assert dn is TerminationReason.HorizonReached


def test_boundary_rays_carry_critical_integrals():
    p = KerrParams(0.98)
    obs = named_observer("zamo", 2.0, math.pi / 2, p)
    lo, hi = theta_star_roots(obs)
    for rc in np.linspace(lo, hi, 7)[1:-1]:
        rc = float(rc)
        b_alpha, b_beta = boundary_angles(rc, obs)
        st, c = ray_from_angles(
            DirectionAngles(b_alpha, math.pi + b_beta), obs)
        assert c.lam == pytest.approx(critical_lambda(rc, p), abs=1e-9)
        assert c.eta == pytest.approx(critical_eta(rc, p), abs=1e-9)


def test_curve_spin_floor():
    p = KerrParams(1e-4)
    obs = ObserverSpec(p, 5.0, math.pi / 2, 0.0)
    with pytest.raises(DomainError):
        shadow_curve(obs)


def test_shadow_csv_format():
    p = KerrParams(0.98)
    obs = named_observer("static", 5.0, math.pi / 2, p)
    text = shadow_curve_to_csv(shadow_curve(obs, n_samples=16))
    lines = text.strip().split("\n")
    assert lines[0].startswith("# a=")
    header = dict(tok.split("=") for tok in lines[0][2:].split())
    assert float(header["a"]) == 0.98
    assert float(header["Omega"]) == 0.0
    assert float(header["r0"]) == 5.0
    assert lines[1] == SHADOW_CSV_HEADER
    assert len(lines) == 2 + 2 * 16 - 2
    assert lines[2].split(",")[5] == "1"
