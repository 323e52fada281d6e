"""Target-field construction from boundary data and normal derivatives."""
import math

import numpy as np
import pytest

from activepenalty.basis import basis_B
from activepenalty.extension import (Extender, ExtensionConfig, GridTooCoarse, boundary_average,
                                     boundary_normal_derivatives, build_extension_scalar,
                                     build_extension_vector, extension_stencil, feedback_radius)
from activepenalty.geometry import Circle, Interval, phi_on_grid
from activepenalty.grid import PeriodicGrid, ScalarField, VectorField2D

PI = math.pi
INTERVAL = Interval(PI - 0.7, PI + 0.7)
CIRCLE = Circle(PI, PI, 0.5)


def sfield(grid, values):
    return ScalarField(grid, np.asarray(values, dtype=float))


def test_config_validation():
    with pytest.raises(ValueError):
        ExtensionConfig(k=3)
    with pytest.raises(ValueError):
        ExtensionConfig(k=-1)
    with pytest.raises(ValueError):
        ExtensionConfig(l=0.0)
    with pytest.raises(ValueError):
        ExtensionConfig(k=2, family="compact1")
    with pytest.raises(ValueError, match="tube width"):
        ExtensionConfig(l=0.5).resolved(CIRCLE, 2)


def test_k_above_two_rejected():
    g = PeriodicGrid(1, 128)
    with pytest.raises(ValueError, match="k <= 2"):
        boundary_normal_derivatives(sfield(g, g.coords()), INTERVAL, 3)


def test_linear_field_exact_1d():
    g = PeriodicGrid(1, 128)
    x = g.coords()
    bd = boundary_normal_derivatives(sfield(g, 1.5 - 2.0 * x), INTERVAL, 2, l=0.6)
    assert np.max(np.abs(bd.u_n - (-2.0) * bd.normal)) <= 1e-11
    assert np.max(np.abs(bd.u_nn)) <= 1e-9


def test_linear_field_exact_2d():
    g = PeriodicGrid(2, 128)
    X, Y = g.coords()
    bd = boundary_normal_derivatives(sfield(g, 0.3 + 2.0 * X - 0.5 * Y), CIRCLE, 1)
    expected = 2.0 * bd.normal[:, 0] - 0.5 * bd.normal[:, 1]
    assert np.max(np.abs(bd.u_n - expected)) <= 1e-11


def test_quadratic_in_1d():
    g = PeriodicGrid(1, 256)
    x = g.coords()
    bd = boundary_normal_derivatives(sfield(g, x ** 2), INTERVAL, 2, l=0.6)
    left = np.isclose(bd.xi, PI - 0.7)
    assert left.any()
    assert np.max(np.abs(bd.u_n[left] - 2 * (PI - 0.7) * 1.0)) <= g.h ** 2
    assert np.max(np.abs(bd.u_nn - 2.0)) <= g.h ** 2


def test_sin_cos_normal_derivative_second_order():
    errs = []
    Ns = [64, 128, 256]
    for N in Ns:
        g = PeriodicGrid(2, N)
        X, Y = g.coords()
        bd = boundary_normal_derivatives(sfield(g, np.sin(X) * np.cos(Y)), CIRCLE, 1)
        xx, xy = bd.xi[:, 0], bd.xi[:, 1]
        exact = (bd.normal[:, 0] * np.cos(xx) * np.cos(xy)
                 - bd.normal[:, 1] * np.sin(xx) * np.sin(xy))
        errs.append(np.max(np.abs(bd.u_n - exact)))
    slope = -np.polyfit(np.log(Ns), np.log(errs), 1)[0]
    assert slope >= 1.8
    assert errs[-1] <= 10 * (2 * PI / 256) ** 2


def test_boundary_value_recovered_at_zero_distance():
    g = PeriodicGrid(1, 64)
    geom = Interval(16 * g.h, 48 * g.h)  # both ends on grid nodes
    f = sfield(g, np.cos(g.coords()))
    bd = boundary_normal_derivatives(f, geom, 1, l=0.6).with_boundary_values(0.7)
    gt = build_extension_scalar(bd, ExtensionConfig(k=1, l=0.6, G=-0.2), g).values
    assert gt[16] == pytest.approx(0.7, abs=1e-15)
    assert gt[48] == pytest.approx(0.7, abs=1e-15)


def test_far_field_is_G():
    g = PeriodicGrid(2, 128)
    X, Y = g.coords()
    cfg = ExtensionConfig(k=1, l=0.2, G=1.25)
    bd = boundary_normal_derivatives(sfield(g, np.sin(X + Y)), CIRCLE, 1, l=0.2)
    gt = build_extension_scalar(bd.with_boundary_values(3.0), cfg, g).values
    phi = phi_on_grid(CIRCLE, g)
    assert np.all(gt[phi > 0.2] == 1.25)
    assert np.all(gt[phi < 0] == 0.0)


def test_hand_evaluated_b1_profile():
    # f = c x near the left end, g = G = 0: target is l c n B1(s / l)
    g = PeriodicGrid(1, 256)
    c, l = 0.8, 0.6
    x = g.coords()
    bd = boundary_normal_derivatives(sfield(g, c * x), INTERVAL, 1, l=l)
    gt = build_extension_scalar(bd, ExtensionConfig(k=1, l=l), g).values
    s = INTERVAL.phi(x)
    sel = (s >= 0) & (s <= l) & (x < PI)
    expected = l * c * 1.0 * np.array([basis_B(1, t) for t in s[sel] / l])
    assert np.max(np.abs(gt[sel] - expected)) <= 1e-12


def test_one_sided_slope_matches_normal_derivative():
    # the assembled target leaves the boundary with slope u_n (error O(h))
    slopes = []
    for N in (256, 512):
        g = PeriodicGrid(1, N)
        i, span = N // 4, N // 4  # ends on grid nodes, width pi / 2
        geom = Interval(i * g.h, (i + span) * g.h)
        x = g.coords()
        gt = Extender(geom, g, ExtensionConfig(k=1, l=0.6))(np.sin(x), np.sin(geom.a), 0.0)
        fd = (gt[i + 1] - gt[i]) / g.h
        slopes.append(abs(fd - math.cos(geom.a)))
    assert slopes[1] <= 0.75 * slopes[0] + 1e-12
    assert slopes[1] <= 5 * (2 * PI / 512)


def test_linearity_in_u():
    g = PeriodicGrid(2, 96)
    rng = np.random.default_rng(0)
    ext = Extender(CIRCLE, g, ExtensionConfig(k=2, l=0.3, one_sided=False))
    a, b = rng.standard_normal(g.shape), rng.standard_normal(g.shape)
    lhs = ext(2.0 * a - 3.0 * b)
    rhs = 2.0 * ext(a) - 3.0 * ext(b)
    assert np.max(np.abs(lhs - rhs)) <= 1e-9 * max(1.0, np.max(np.abs(lhs)))


def test_cfg_deeper_than_data_rejected():
    g = PeriodicGrid(1, 128)
    bd = boundary_normal_derivatives(sfield(g, g.coords()), INTERVAL, 1, l=0.6)
    with pytest.raises(ValueError):
        build_extension_scalar(bd, ExtensionConfig(k=2, l=0.6), g)


def test_vector_zero_data():
    g = PeriodicGrid(2, 64)
    zero = ScalarField(g, np.zeros(g.shape))
    out = build_extension_vector(VectorField2D(zero, zero), (0.0, 0.0), CIRCLE,
                                 ExtensionConfig(k=1, G="auto"))
    assert np.all(out.x_component.values == 0.0) and np.all(out.y_component.values == 0.0)


def test_vector_rigid_data_sets_G():
    g = PeriodicGrid(2, 128)
    zero = ScalarField(g, np.zeros(g.shape))
    out = build_extension_vector(VectorField2D(zero, zero), (10.0, -1.0), CIRCLE,
                                 ExtensionConfig(k=0, l=0.3, G="auto"))
    phi = phi_on_grid(CIRCLE, g)
    solid = phi >= 0
    assert np.allclose(out.x_component.values[solid], 10.0, atol=1e-12)
    assert np.allclose(out.y_component.values[solid], -1.0, atol=1e-12)


def test_vector_manufactured_normal_derivative():
    # with g = G = 0 and l fixed, gt / (l B1) isolates u_n for each component
    g = PeriodicGrid(2, 256)
    X, Y = g.coords()
    ux, uy = np.cos(X) * np.sin(Y), -np.sin(X) * np.cos(Y)
    u = VectorField2D(ScalarField(g, ux), ScalarField(g, uy))
    cfg = ExtensionConfig(k=1, l=0.3, G=0.0)
    out = build_extension_vector(u, (0.0, 0.0), CIRCLE, cfg)
    st = extension_stencil(CIRCLE, g, 0.3, "compact", False)
    sel = st.basis[1] > 0.2
    xx, xy = st.xi[sel, 0], st.xi[sel, 1]
    nx, ny = st.normal[sel, 0], st.normal[sel, 1]
    dx = nx * (-np.sin(xx) * np.sin(xy)) + ny * (np.cos(xx) * np.cos(xy))
    dy = nx * (-np.cos(xx) * np.cos(xy)) + ny * (np.sin(xx) * np.sin(xy))
    scale = 0.3 * st.basis[1][sel]
    gx = out.x_component.values.ravel()[st.tube[sel]] / scale
    gy = out.y_component.values.ravel()[st.tube[sel]] / scale
    assert np.max(np.abs(gx - dx)) <= 10 * g.h ** 2
    assert np.max(np.abs(gy - dy)) <= 10 * g.h ** 2


def test_boundary_average():
    assert boundary_average(lambda x, y: np.ones_like(x), CIRCLE) == pytest.approx(1.0)
    assert boundary_average(lambda x, y: x - PI, CIRCLE) == pytest.approx(0.0, abs=1e-12)
    assert boundary_average(3.0, CIRCLE) == 3.0


def test_feedback_radius_bounded_for_mms_settings():
    rho = feedback_radius(CIRCLE, PeriodicGrid(2, 64), ExtensionConfig(k=1, l=0.45))
    assert 0.0 < rho < 1.0


def test_k0_has_no_feedback():
    assert feedback_radius(INTERVAL, PeriodicGrid(1, 128), ExtensionConfig(k=0, l=0.6)) == 0.0


def test_grid_too_coarse():
    with pytest.raises(GridTooCoarse):
        extension_stencil(Circle(PI, PI, 0.1), PeriodicGrid(2, 32), 0.05)
    with pytest.raises(GridTooCoarse):
        extension_stencil(Circle(PI, PI, 1.5), PeriodicGrid(2, 64), 0.5)


def test_stencil_cached_and_read_only():
    g = PeriodicGrid(2, 64)
    a = extension_stencil(CIRCLE, g, 0.4)
    assert extension_stencil(CIRCLE, g, 0.4) is a
    with pytest.raises(ValueError):
        a.s[0] = 1.0
