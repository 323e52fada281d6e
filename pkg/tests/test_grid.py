import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from activepenalty.grid import (EmptyRegion, GridMismatch, PeriodicGrid, ScalarField,
                                VectorField2D, dump_field, fd_derivative, integrate, laplacian,
                                load_field, masked_norm, poisson_solve_array,
                                spectral_divergence_array, spectral_gradient,
                                spectral_gradient_array, spectral_poisson_solve)


def field(grid, fn):
    c = grid.coords()
    return ScalarField(grid, fn(c) if grid.dim == 1 else fn(*c))


def test_grid_validation():
    with pytest.raises(ValueError):
        PeriodicGrid(3, 16)
    with pytest.raises(ValueError):
        PeriodicGrid(1, 4)
    g = PeriodicGrid(2, 32)
    assert g.h == pytest.approx(2 * math.pi / 32)
    assert g.shape == (32, 32)


def test_field_rejects_wrong_shape_and_nan():
    g = PeriodicGrid(1, 16)
    with pytest.raises(GridMismatch):
        ScalarField(g, np.zeros(15))
    with pytest.raises(ValueError):
        ScalarField(g, np.full(16, np.nan))


def test_vector_components_share_grid():
    a, b = PeriodicGrid(2, 16), PeriodicGrid(2, 32)
    with pytest.raises(GridMismatch):
        VectorField2D(ScalarField(a, np.zeros(a.shape)), ScalarField(b, np.zeros(b.shape)))


@pytest.mark.parametrize("order", [1, 2])
@pytest.mark.parametrize("acc", [2, 4])
def test_derivatives_annihilate_constants(order, acc):
    for dim in (1, 2):
        g = PeriodicGrid(dim, 32)
        f = ScalarField(g, np.full(g.shape, 3.7))
        for axis in range(dim):
            assert np.max(np.abs(fd_derivative(f, axis, order, acc).values)) <= 1e-12
        assert np.max(np.abs(laplacian(f, acc).values)) <= 1e-12


def test_bad_axis():
    g = PeriodicGrid(1, 16)
    with pytest.raises(ValueError):
        fd_derivative(ScalarField(g, np.zeros(16)), 1)


def _order(errors, Ns):
    return np.polyfit(np.log(Ns), np.log(errors), 1)[0] * -1


@pytest.mark.parametrize("acc", [2, 4])
def test_first_derivative_order_on_fourier_mode(acc):
    Ns = [32, 64, 128]
    errs = []
    for N in Ns:
        g = PeriodicGrid(1, N)
        d = fd_derivative(field(g, np.sin), 0, 1, acc)
        errs.append(np.max(np.abs(d.values - np.cos(g.coords()))))
    assert _order(errs, Ns) >= acc - 0.2


def test_second_derivative_of_exp_sin():
    Ns = [32, 64, 128]
    errs = []
    for N in Ns:
        g = PeriodicGrid(1, N)
        x = g.coords()
        d = fd_derivative(field(g, lambda x: np.exp(np.sin(x))), 0, 2, 4)
        exact = np.exp(np.sin(x)) * (np.cos(x) ** 2 - np.sin(x))
        errs.append(np.max(np.abs(d.values - exact)))
    assert _order(errs, Ns) == pytest.approx(4.0, abs=0.3)


def test_three_point_laplacian_eigenfunction():
    g = PeriodicGrid(1, 64)
    h = g.h
    lap = laplacian(field(g, np.sin), 2).values
    expected = -(2 - 2 * math.cos(h)) / h ** 2 * np.sin(g.coords())
    assert np.max(np.abs(lap - expected)) <= 1e-11


def test_2d_laplacian_second_order():
    errs = []
    Ns = [32, 64, 128]
    for N in Ns:
        g = PeriodicGrid(2, N)
        f = field(g, lambda x, y: np.sin(x) * np.cos(y))
        lap = laplacian(f, 2).values
        errs.append(np.max(np.abs(lap + 2 * f.values)))
    assert _order(errs, Ns) == pytest.approx(2.0, abs=0.1)


def test_poisson_single_mode():
    g = PeriodicGrid(2, 32)
    rhs = field(g, lambda x, y: -2 * np.sin(x) * np.sin(y))
    p = spectral_poisson_solve(rhs)
    X, Y = g.coords()
    assert np.max(np.abs(p.values - np.sin(X) * np.sin(Y))) <= 1e-12


def test_poisson_zero_rhs():
    g = PeriodicGrid(2, 16)
    assert np.all(spectral_poisson_solve(ScalarField(g, np.zeros(g.shape))).values == 0.0)


def _smooth_random(grid, rng, modes=6):
    X, Y = grid.coords()
    out = np.zeros(grid.shape)
    for _ in range(modes):
        kx, ky = rng.integers(-5, 6, size=2)
        a, phase = rng.standard_normal(), rng.uniform(0, 2 * math.pi)
        out += a * np.cos(kx * X + ky * Y + phase)
    return out + rng.standard_normal()


def test_poisson_round_trip_twenty_rhs():
    g = PeriodicGrid(2, 64)
    rng = np.random.default_rng(3)
    ksq = g.wavenumbers()[:, None] ** 2 + g.wavenumbers()[None, :] ** 2
    for _ in range(20):
        rhs = _smooth_random(g, rng)
        p = poisson_solve_array(rhs, g)
        back = np.fft.ifft2(-ksq * np.fft.fft2(p)).real
        assert np.max(np.abs(back - (rhs - rhs.mean()))) <= 1e-10
        assert abs(p.mean()) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 31 - 1))
def test_poisson_mean_zero_property(seed):
    g = PeriodicGrid(2, 16)
    rhs = np.random.default_rng(seed).standard_normal(g.shape)
    assert abs(poisson_solve_array(rhs, g).mean()) <= 1e-12


def test_spectral_gradient_and_divergence():
    g = PeriodicGrid(2, 32)
    X, Y = g.coords()
    px, py = spectral_gradient_array(np.sin(X) * np.cos(2 * Y), g)
    assert np.max(np.abs(px - np.cos(X) * np.cos(2 * Y))) <= 1e-12
    assert np.max(np.abs(py + 2 * np.sin(X) * np.sin(2 * Y))) <= 1e-12
    div = spectral_divergence_array(np.sin(X), np.cos(Y), g)
    assert np.max(np.abs(div - (np.cos(X) - np.sin(Y)))) <= 1e-12


def test_spectral_gradient_drops_nyquist():
    g = PeriodicGrid(1, 16)
    nyq = np.cos(8 * g.coords())  # the alternating mode
    assert np.max(np.abs(spectral_gradient(ScalarField(g, nyq)).values)) <= 1e-12


def test_integrate():
    g = PeriodicGrid(2, 32)
    assert integrate(ScalarField(g, np.ones(g.shape))) == pytest.approx((2 * math.pi) ** 2)
    g1 = PeriodicGrid(1, 32)
    assert abs(integrate(field(g1, np.sin))) <= 1e-14


def test_integrate_circle_area_first_order():
    from activepenalty.geometry import Circle, mask_chi

    errs = []
    Ns = [64, 128, 256, 512]
    for N in Ns:
        g = PeriodicGrid(2, N)
        chi = mask_chi(Circle(math.pi, math.pi, 0.5), g)
        errs.append(abs(integrate(chi) - math.pi / 4))
    assert max(errs) < 0.05
    # each error is bounded by a perimeter-sized strip of cells
    for N, e in zip(Ns, errs):
        assert e <= math.pi * (2 * math.pi / N)


def test_integrate_weight_grid_mismatch():
    a, b = PeriodicGrid(1, 16), PeriodicGrid(1, 32)
    with pytest.raises(GridMismatch):
        integrate(ScalarField(a, np.ones(16)), ScalarField(b, np.ones(32)))


def test_masked_norm():
    g = PeriodicGrid(1, 64)
    x = g.coords()
    mask = ScalarField(g, (x < math.pi).astype(float))
    assert masked_norm(ScalarField(g, np.full(64, 2.0)), mask) == 2.0
    assert masked_norm(ScalarField(g, x), mask) == x[x < math.pi].max()
    zero = ScalarField(g, np.zeros(64))
    assert masked_norm(zero, mask, "L2") == 0.0
    assert masked_norm(zero, mask, "Linf") == 0.0
    with pytest.raises(EmptyRegion, match="empty region"):
        masked_norm(zero, ScalarField(g, np.zeros(64)))


def test_masked_l2_volume_weight():
    g = PeriodicGrid(2, 16)
    one = ScalarField(g, np.ones(g.shape))
    assert masked_norm(one, one, "L2") == pytest.approx(2 * math.pi)


def test_field_dump_round_trip(tmp_path):
    g = PeriodicGrid(2, 16)
    f = field(g, lambda x, y: np.sin(x) * np.exp(np.cos(y)))
    path = tmp_path / "f.dat"
    dump_field(path, f)
    assert path.read_text().splitlines()[0] == f"# scalar nx=16 ny=16 h={g.h!r}"
    back = load_field(path)
    assert np.array_equal(back.values, f.values)
    assert back.grid.n == 16 and back.grid.h == pytest.approx(g.h)
