import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from covest import spectral, states
from covest.errors import GridError, GridTooNarrowError, ParameterError
from covest.spectral import _triangle_integral


def direct_transform(samples, grid, sign, target):
    phase = np.exp(sign * 1j * np.outer(target.nodes, grid.nodes))
    return phase @ (grid.weights * samples)


@settings(max_examples=20, deadline=None)
@given(st.integers(4, 8), st.integers(4, 8), st.floats(-3, 3), st.floats(0.5, 6), st.sampled_from([1, -1]))
def test_fourier_transform_matches_direct_sum(log_n, log_m, x0, span, sign):
    grid = states.GridSpec(-2.0, 3.0, 2 ** log_n)
    target = states.GridSpec(x0, x0 + span, 2 ** log_m)
    rng = np.random.default_rng(log_n * 31 + log_m)
    samples = rng.normal(size=grid.n_points) + 1j * rng.normal(size=grid.n_points)
    np.testing.assert_allclose(spectral.fourier_transform(samples, grid, sign, target),
                               direct_transform(samples, grid, sign, target), atol=1e-11)


def test_fourier_transform_of_zero():
    grid = states.GridSpec.symmetric(4.0, 64)
    assert not np.any(spectral.fourier_transform(np.zeros(64), grid, 1, grid))


def test_fourier_transform_narrow_gaussian_becomes_wide():
    sigma = 0.1
    grid = states.GridSpec.symmetric(1.0, 1024)
    target = states.GridSpec.symmetric(60.0, 1024)
    samples = np.exp(-0.5 * (grid.nodes / sigma) ** 2)
    out = spectral.fourier_transform(samples, grid, -1, target)
    exact = sigma * math.sqrt(2 * math.pi) * np.exp(-0.5 * (sigma * target.nodes) ** 2)
    np.testing.assert_allclose(out.real, exact, atol=1e-12)


def test_fourier_round_trip(gaussian):
    grid = gaussian.grid
    x_grid = states.GridSpec.symmetric(40.0, 4096)
    forward = spectral.fourier_transform(gaussian.amplitudes, grid, -1, x_grid)
    back = spectral.fourier_transform(forward, x_grid, 1, grid) / (2 * math.pi)
    np.testing.assert_allclose(back, gaussian.amplitudes, atol=1e-7)


def test_fourier_rejects_bad_sign():
    grid = states.GridSpec.symmetric(1.0, 16)
    with pytest.raises(ParameterError):
        spectral.fourier_transform(np.ones(16), grid, 2, grid)
    with pytest.raises(GridError):
        spectral.fourier_transform(np.ones(8), grid, 1, grid)


def test_char_fn_sinc_triangle(sinc):
    x_grid = states.GridSpec.symmetric(3.0, 64)
    charf = spectral.char_fn(states.density(sinc), x_grid)
    np.testing.assert_allclose(charf.values.real, np.clip(1 - np.abs(x_grid.nodes) / 2, 0, None), atol=1e-15)
    assert spectral.triangular_char_fn(1.0, 1.0) == pytest.approx(0.5, abs=1e-6)


def test_char_fn_gaussian(gaussian):
    x_grid = states.GridSpec(-1.0, 1.0, 64)
    charf = spectral.char_fn(states.density(gaussian), x_grid)
    assert charf.values[-1].real == pytest.approx(math.exp(-0.5), abs=1e-10)
    np.testing.assert_allclose(charf.values.real, np.exp(-0.5 * x_grid.nodes ** 2), atol=1e-10)


@pytest.mark.parametrize("fixture", ["gaussian", "mixture_raw", "skewed_mixture"])
def test_char_fn_normalization_and_hermitian(fixture, request):
    dens = states.density(request.getfixturevalue(fixture))
    x_grid = states.GridSpec.symmetric(3.0, 65536 // 64)
    charf = spectral.char_fn(dens, x_grid)
    assert np.max(np.abs(charf.values)) <= 1 + 1e-9
    at0 = spectral.char_fn(dens, states.GridSpec(0.0, 1.0, 16)).values[0]
    assert abs(at0 - 1) < 1e-8
    np.testing.assert_allclose(charf.values[::-1], np.conj(charf.values), atol=1e-8)


@pytest.mark.parametrize("kappa", [0.0, 0.3, 5.0, 39.0, 41.0, 300.0, 5000.0])
@pytest.mark.parametrize("copies", [1, 2, 7, 20, 80, 256])
def test_triangle_integral_against_quad(kappa, copies):
    exact = integrate.quad(lambda node: (1 - node) ** copies, 0, 1, weight="cos", wvar=kappa,
                           epsabs=1e-15, epsrel=1e-13)[0]
    assert _triangle_integral(np.array([kappa]), copies)[0] == pytest.approx(exact, abs=1e-13, rel=1e-9)


def test_conv_power_identity(gaussian):
    dens = states.density(gaussian)
    assert spectral.conv_power(dens, 1) is dens


def test_conv_power_gaussian_variance(gaussian):
    p4 = spectral.conv_power(states.density(gaussian), 4)
    exact = np.exp(-p4.nodes ** 2 / 8) / math.sqrt(8 * math.pi)
    assert np.max(np.abs(p4.values - exact)) < 1e-6
    assert states.moments(p4).variance == pytest.approx(4.0, abs=1e-6)


def test_conv_power_sinc_square_at_origin(sinc):
    p2 = spectral.conv_power(states.density(sinc), 2)
    oracle = integrate.quad(lambda pos: (1 - abs(pos) / 2) ** 2, -2, 2)[0] / (2 * math.pi)
    assert oracle == pytest.approx(2 / (3 * math.pi), rel=1e-12)
    assert spectral.sinc_power_values(1.0, 2, np.array([0.0]))[0] == pytest.approx(oracle, rel=1e-12)
    # the +-800 grid truncates the 1/(pi l^2) tail; undo the renormalization
    np.testing.assert_allclose(p2.values / p2.renorm_factor, spectral.sinc_power_values(1.0, 2, p2.nodes),
                               rtol=1e-12, atol=1e-18)


def test_sinc_power_closed_form_matches_generic_path():
    for copies in (3, 10):
        lam = np.linspace(-5, 5, 11)
        closed = spectral.sinc_power_values(1.0, copies, lam)
        brute = [integrate.quad(lambda pos: math.cos(node * pos) * (1 - abs(pos) / 2) ** copies, -2, 2)[0] / (2 * math.pi)
                 for node in lam]
        np.testing.assert_allclose(closed, brute, atol=1e-13)


def test_semigroup(mixture):
    dens = states.density(mixture)
    x_grid = states.GridSpec.symmetric(2.0, 256)
    f2 = spectral.char_fn(spectral.conv_power(dens, 2), x_grid).values
    f3 = spectral.char_fn(spectral.conv_power(dens, 3), x_grid).values
    f5 = spectral.char_fn(spectral.conv_power(dens, 5), x_grid).values
    np.testing.assert_allclose(f5, f2 * f3, atol=1e-9)
    p5 = spectral.conv_power(dens, 5)
    f1 = spectral.char_fn(dens, x_grid).values
    np.testing.assert_allclose(f5, f1 ** 5, atol=1e-9)
    # density domain: compare on the common output grid
    again = spectral.conv_power(spectral.conv_power(dens, 1), 5, p5.grid)
    assert p5.grid.integrate(np.abs(again.values - p5.values)) < 1e-6


@pytest.mark.parametrize("copies", [2, 4, 16])
def test_mean_and_variance_additivity(mixture_raw, copies):
    dens = states.density(mixture_raw)
    stats = states.moments(dens)
    mn = states.moments(spectral.conv_power(dens, copies))
    assert mn.mean == pytest.approx(copies * stats.mean, abs=1e-6)
    assert mn.variance == pytest.approx(copies * stats.variance, rel=1e-5)


def test_conv_power_nonnegative_and_normalized(skewed_mixture):
    pn = spectral.conv_power(states.density(skewed_mixture), 7)
    assert np.all(pn.values >= 0) and pn.clipped_mass < 1e-6
    assert pn.grid.integrate(pn.values) == pytest.approx(1.0, abs=1e-12)


def test_narrow_output_grid_flags_aliasing(gaussian):
    with pytest.raises(GridTooNarrowError):
        spectral.conv_power(states.density(gaussian), 4, states.GridSpec.symmetric(2.0, 256))


def test_conv_power_derivative_matches_closed_form(gaussian):
    grid = states.GridSpec.symmetric(12.0, 1024)
    deriv = spectral.conv_power_derivative(states.density(gaussian), 2, grid)
    lam = grid.nodes
    exact = -lam / 2 * np.exp(-lam ** 2 / 4) / math.sqrt(4 * math.pi)
    np.testing.assert_allclose(deriv, exact, atol=1e-10)


def test_conv_power_rejects_bad_n(gaussian):
    with pytest.raises(ParameterError):
        spectral.conv_power(states.density(gaussian), 0)
