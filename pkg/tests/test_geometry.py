import math

import numpy as np
import pytest

from maxsurf.analytic import grim_reaper, hyperbolic_plane, hyperbolic_plane_mean_curvature
from maxsurf.disk import disk_grid
from maxsurf.geometry import (
    FlowState,
    GridSpec,
    geometry,
    height_gradient_identity,
    laplace_beltrami,
    oscillation,
    spacelike_margin,
)
from maxsurf.lorentz import minkowski_inner
from maxsurf.profiles import cylinder, sine_tube, trumpet


def curve_state(u_of_x, xl, xr, n, t=0.0):
    grid = GridSpec("curve1d", n)
    x = 0.5 * (xl + xr) + grid.reference() * 0.5 * (xr - xl)
    return FlowState(grid, t, np.asarray(u_of_x(x), dtype=float), (xl, xr))


def radial_state(u_of_r, rho_b, n, t=0.0):
    grid = GridSpec("radial2d", n)
    rho = grid.reference() * rho_b
    return FlowState(grid, t, np.asarray(u_of_r(rho), dtype=float), rho_b)


def disk_state(u_of_xy, n, radius=1.0, t=0.0):
    grid = GridSpec("disk2d", n, radius)
    dg = disk_grid(n, radius)
    u = np.where(dg.inside, u_of_xy(dg.X, dg.Y), 0.0)
    return FlowState(grid, t, u, None)


# -- flat disk ---------------------------------------------------------------


def test_flat_disk_geometry():
    # nonzero constant: ghost fill exact up to LU roundoff only
    st = disk_state(lambda x, y: 0.7 + 0.0 * x, 64)
    g = geometry(st, cylinder(1.0))
    ins = g.mask
    assert np.abs(g.H[ins]).max() <= 1e-11
    assert np.abs(g.v_hat[ins] - 1.0).max() <= 1e-12
    assert g.volume == pytest.approx(math.pi, abs=1e-12)  # exact cell areas
    assert oscillation(st) == 0.0
    # u identically zero is an exact fixed point of every stencil
    st0 = disk_state(lambda x, y: 0.0 * x, 64)
    g0 = geometry(st0, cylinder(1.0))
    assert np.abs(g0.H[ins]).max() == 0.0


def test_disk_quadrature_exact_area():
    for n in (32, 101):
        st = disk_state(lambda x, y: 0.0 * x, n)
        assert geometry(st, cylinder(1.0)).volume == pytest.approx(math.pi, abs=1e-12)


# -- translator closed forms ---------------------------------------------------


def test_curve_log_cosh_fields():
    sol = grim_reaper()
    st = curve_state(lambda x: np.log(np.cosh(x)), -1.0, 1.0, 801)
    g = geometry(st, trumpet())
    x = st.coords()
    h = st.spacing()
    interior = slice(3, -3)
    np.testing.assert_allclose(g.v_hat[interior], np.cosh(x)[interior], atol=20 * h * h)
    # H = cosh x with the future normal; H/v_hat = 1 on the translator
    np.testing.assert_allclose(g.H[interior], np.cosh(x)[interior], atol=50 * h * h)
    np.testing.assert_allclose((g.H / g.v_hat)[interior], 1.0, atol=50 * h * h)
    # interior update g^xx u_xx = 1
    uxx = np.gradient(np.gradient(st.u, x), x)
    # the translator's v is identically 1 (nu = V everywhere)
    np.testing.assert_allclose(g.v[interior], 1.0, atol=1e-6)


def test_curve_oscillation_log_cosh():
    st = curve_state(lambda x: np.log(np.cosh(x)), -1.0, 1.0, 101)
    assert oscillation(st) == pytest.approx(math.log(math.cosh(1.0)), abs=1e-12)


# -- hyperboloid (radial) ------------------------------------------------------


def test_radial_hyperboloid_mean_curvature_order2():
    R = 1.5
    sol = hyperbolic_plane(R)
    errs = []
    for n in (51, 101, 201):
        st = radial_state(lambda r: sol.u(r, 0.0), 1.2, n)
        g = geometry(st, None)
        errs.append(np.abs(g.H - 2.0 / R).max())
    assert errs[0] == pytest.approx(0.0, abs=1e-2)
    order = math.log2(errs[0] / errs[2]) / 2.0
    assert 1.6 < order < 2.4


def test_hyperbolic_plane_oracle_is_exact():
    rho = np.linspace(0.0, 2.0, 40)
    Hs = hyperbolic_plane_mean_curvature(2.5, rho)
    np.testing.assert_allclose(Hs, 2.0 / 2.5, atol=1e-13)


def test_perturbed_disk_oscillation():
    st = disk_state(lambda x, y: 0.1 * (1 - (x * x + y * y)) ** 2, 64)
    assert oscillation(st) == pytest.approx(0.1, abs=1e-3)


# -- invariants ----------------------------------------------------------------


def test_gradient_functions_at_least_one():
    rng = np.random.default_rng(3)
    for _ in range(10):
        amp = rng.uniform(0.01, 0.25)
        k = rng.uniform(0.5, 2.0)
        st = curve_state(lambda x: amp * np.sin(k * x), -1.5, 1.5, 101)
        g = geometry(st, trumpet())
        assert np.all(g.v_hat >= 1.0)
        assert np.all(g.v >= 1.0 - 1e-12)


def test_normal_is_unit_and_orthogonal():
    st = curve_state(lambda x: 0.3 * np.sin(x), -1.0, 1.0, 201)
    g = geometry(st, None)
    x = st.coords()
    sq = g.nu[:, 0] ** 2 - g.nu[:, 1] ** 2
    np.testing.assert_allclose(sq, -1.0, atol=1e-12)
    # against the exact tangent (1, u_x): O(h^2) at interior nodes
    tang = np.stack([np.ones_like(x), 0.3 * np.cos(x)], axis=-1)
    ip = g.nu[:, 0] * tang[:, 0] - g.nu[:, 1] * tang[:, 1]
    h = st.spacing()
    assert np.abs(ip[2:-2]).max() <= 5 * h * h


def test_det_identity_exact():
    st = curve_state(lambda x: 0.2 * np.sin(2 * x), -1.0, 1.0, 101)
    g = geometry(st, None)
    np.testing.assert_allclose(g.det_g, g.det_ghat / g.v_hat**2, atol=1e-12)
    st2 = disk_state(lambda x, y: 0.05 * np.sin(2 * x) * np.cos(y), 48)
    g2 = geometry(st2, cylinder(1.0))
    ins = g2.mask
    np.testing.assert_allclose(
        g2.det_g[ins], (g2.det_ghat / g2.v_hat**2)[ins], atol=1e-12
    )
    st3 = radial_state(lambda r: 0.1 * r * r, 1.0, 101)
    g3 = geometry(st3, None)
    np.testing.assert_allclose(g3.det_g, g3.det_ghat / g3.v_hat**2, atol=1e-12)


def test_height_gradient_identity_zero_on_constant():
    st = curve_state(lambda x: 0.0 * x + 2.0, -1.0, 1.0, 51)
    assert height_gradient_identity(st) == 0.0


def test_height_gradient_identity_second_order():
    res = []
    for n in (101, 201):
        st = curve_state(lambda x: np.log(np.cosh(x)), -1.0, 1.0, n)
        res.append(height_gradient_identity(st))
    ratio = res[0] / res[1]
    assert 3.0 < ratio < 5.0

    rng = np.random.default_rng(5)
    a, b = rng.uniform(0.05, 0.15, 2)
    f = lambda x: a * np.sin(1.3 * x) + b * np.cos(0.7 * x)
    res = [height_gradient_identity(curve_state(f, -1.0, 1.0, n)) for n in (101, 201)]
    assert 3.0 < res[0] / res[1] < 5.0


def test_spacelike_margin_and_error():
    st = curve_state(lambda x: 0.999 * x, -1.0, 1.0, 51)
    assert spacelike_margin(st) < 3e-3
    from maxsurf.geometry import SpacelikeError

    with pytest.raises(SpacelikeError):
        geometry(curve_state(lambda x: 1.2 * x, -1.0, 1.0, 51), None)


def test_remarkablev_equivalence_bound():
    # cylinder: V = e3 = V_hat, so v = v_hat exactly
    st = disk_state(lambda x, y: 0.1 * (1 - (x * x + y * y)) ** 2, 48)
    g = geometry(st, cylinder(1.0))
    ins = g.mask
    np.testing.assert_allclose(g.v[ins], g.v_hat[ins], atol=1e-12)
    # sine tube: bounded by 2 C_V with C_V = max boost between V and e_t
    p = sine_tube(2.0, 0.5, 1.0)
    st2 = radial_state(lambda r: math.pi / 2 + 0.05 * (1 - (r / 2.5) ** 2) ** 2, 2.5, 101)
    g2 = geometry(st2, p)
    dfmax = float(np.abs(p.df(st2.u)).max())
    c_v = 1.0 / math.sqrt(1.0 - dfmax * dfmax)
    assert np.all(g2.v_hat <= 2.0 * c_v * g2.v + 1e-12)
    assert np.all(g2.v <= 2.0 * c_v * g2.v_hat + 1e-12)


# -- intrinsic laplacian -------------------------------------------------------


def test_laplace_beltrami_flat_plane_quadratic():
    # on a flat radial graph, Delta(R - rho^2) = -4 exactly (n = 2)
    st = radial_state(lambda r: 0.0 * r + 1.0, 2.0, 101)
    phi = 10.0 - st.coords() ** 2
    lap = laplace_beltrami(st, phi)
    np.testing.assert_allclose(lap[:-1], -4.0, atol=1e-9)


def test_laplace_beltrami_disk_quadratic():
    st = disk_state(lambda x, y: 0.0 * x, 64)
    dg = disk_grid(64, 1.0)
    phi = 10.0 - (dg.X**2 + dg.Y**2)
    lap = laplace_beltrami(st, phi)
    deep = dg.deep
    np.testing.assert_allclose(lap[deep], -4.0, atol=1e-9)


def test_laplace_beltrami_curve_matches_closed_form():
    # on the translator graph, Delta H = cosh x (sinh^2 + cosh^2) in the interior
    st = curve_state(lambda x: np.log(np.cosh(x)), -1.0, 1.0, 801)
    x = st.coords()
    H = np.cosh(x)
    lap = laplace_beltrami(st, H)
    exact = np.cosh(x) * (np.sinh(x) ** 2 + np.cosh(x) ** 2)
    err = np.abs(lap[5:-5] - exact[5:-5]).max()
    assert err < 5e-4
