"""Fourier engine: characteristic functions and convolution powers.

Transforms between uniform grids are evaluated as direct trapezoid sums
using Bluestein's chirp-z algorithm, so input and output grids can have
unrelated spacings and offsets at O((N + M) log(N + M)) cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import GridError, GridTooNarrowError, ParameterError
from .states import DensityGrid, GridSpec, moments

CLIP_TOL = 1e-6
ALIAS_MASS_TOL = 1e-4
ALIAS_EDGE_FRACTION = 1.0 / 32
CHAR_FN_CUTOFF = 1e-18
PROBE_POINTS = 2048

# sinc closed form: mu-grid half-width in units of 1/a, and node count
SINC_HALF_WIDTH = 400.0
SINC_POINTS = 2 ** 16
_SERIES_MAX_TERMS = 60
_GL_NODES = 200


def _next_pow2(count: int) -> int:
    return 1 << max(4, math.ceil(math.log2(max(count, 2))))


def fourier_transform(samples, grid: GridSpec, sign: int, target: GridSpec) -> np.ndarray:
    """Trapezoid approximation of  sum_k w_k g(l_k) exp(sign * i * l_k * x_j).

    ``grid`` holds the input nodes l_k and ``target`` the output nodes x_j.
    Both must be GridSpec instances (uniform by construction).
    """
    if sign not in (1, -1):
        raise ParameterError("sign must be +1 or -1")
    if not isinstance(grid, GridSpec) or not isinstance(target, GridSpec):
        raise GridError("fourier_transform needs uniform GridSpec grids")
    vals = np.asarray(samples, dtype=complex)
    if vals.shape != (grid.n_points,):
        raise GridError("samples must have one value per input node")
    n_in, n_out = grid.n_points, target.n_points
    l0, step_in = grid.lambda_min, grid.spacing
    x0, step_out = target.lambda_min, target.spacing

    # l_k x_j = l0 x0 + l0 d j + h x0 k + h d k j, and k j = (k^2 + j^2 - (j - k)^2) / 2
    alpha = sign * step_in * step_out
    idx_in = np.arange(n_in, dtype=np.int64)
    idx_out = np.arange(n_out, dtype=np.int64)
    premod = vals * grid.weights * np.exp(
        1j * (sign * step_in * x0 * idx_in + 0.5 * alpha * (idx_in * idx_in)))

    size = _next_pow2(n_in + n_out - 1)
    lags = np.arange(-(n_in - 1), n_out, dtype=np.int64)
    chirp = np.exp(-0.5j * alpha * (lags * lags))
    kernel = np.zeros(size, dtype=complex)
    kernel[:n_out] = chirp[n_in - 1:]
    kernel[size - (n_in - 1):] = chirp[:n_in - 1]
    conv = np.fft.ifft(np.fft.fft(premod, size) * np.fft.fft(kernel))[:n_out]
    phase = sign * (l0 * x0 + l0 * step_out * idx_out) + 0.5 * alpha * (idx_out * idx_out)
    return conv * np.exp(1j * phase)


@dataclass(frozen=True)
class CharFunctionGrid:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.n_points,):
            raise GridError("values must have one entry per x node")

    @property
    def x_min(self) -> float:
        return self.grid.lambda_min

    @property
    def x_max(self) -> float:
        return self.grid.lambda_max

    @property
    def n_points(self) -> int:
        return self.grid.n_points

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def rows(self):
        return [(float(node), float(val.real), float(val.imag)) for node, val in zip(self.nodes, self.values)]


CHAR_FN_COLUMNS = ("x", "re_f", "im_f")


def triangular_char_fn(half_width: float, points, copies: int = 1) -> np.ndarray:
    """(1 - |x| / 2a)_+ ** n, the characteristic function of the n-th sinc power."""
    return np.clip(1.0 - np.abs(np.asarray(points, dtype=float)) / (2.0 * half_width), 0.0, None) ** copies


def _sinc_power_index(dens: DensityGrid):
    """(a, n) when p is a sinc density or one of its convolution powers."""
    if dens.source == "sinc":
        return dens.params[0], 1
    if dens.source == "sinc_power":
        return dens.params[0], int(dens.params[1])
    return None


def char_fn(dens: DensityGrid, x_grid: GridSpec) -> CharFunctionGrid:
    """f(x) = integral of exp(-i lambda x) p(lambda).

    Densities built from the sinc preset use the exact triangular form, so
    grid truncation of their slowly decaying tails does not enter.
    """
    sinc = _sinc_power_index(dens)
    if sinc is not None:
        half_width, copies = sinc
        return CharFunctionGrid(x_grid, triangular_char_fn(half_width, x_grid.nodes, copies).astype(complex))
    return CharFunctionGrid(x_grid, fourier_transform(dens.values, dens.grid, -1, x_grid))


# --------------------------------------------------------------------------
# convolution powers

def finalize_density(grid: GridSpec, raw: np.ndarray, **meta) -> DensityGrid:
    """Clip negative lobes, check for aliasing, renormalize."""
    negative = np.clip(raw, None, 0.0)
    clipped = -grid.integrate(negative)
    if clipped > CLIP_TOL:
        raise GridTooNarrowError(f"inverse transform has negative mass {clipped:.3g}")
    values = np.clip(raw, 0.0, None)
    edge = max(2, int(grid.n_points * ALIAS_EDGE_FRACTION))
    step = grid.spacing
    total = grid.integrate(values)
    for strip in (values[:edge], values[-edge:]):
        if step * float(np.sum(strip)) > ALIAS_MASS_TOL * total:
            raise GridTooNarrowError("mass piles up at the output grid boundary")
    return DensityGrid.normalized(grid, values, clipped_mass=clipped, **meta)


def default_power_grid(dens: DensityGrid, copies: int) -> GridSpec:
    """Output grid for p^{*n}: n*mean +- 8 sqrt(n var), or the input scaled by n."""
    stats = moments(dens)
    if stats.finite:
        half = 8.0 * math.sqrt(copies * stats.variance)
        return GridSpec(copies * stats.mean - half, copies * stats.mean + half, dens.grid.n_points)
    return dens.grid.scaled(copies)


def _power_x_grid(dens: DensityGrid, copies: int, out_grid: GridSpec) -> GridSpec:
    """x-grid on which f^n is sampled for the inverse transform."""
    nyquist = math.pi / dens.grid.spacing
    probe = GridSpec(0.0, nyquist, PROBE_POINTS)
    mag = np.abs(fourier_transform(dens.values, dens.grid, -1, probe))
    with np.errstate(divide="ignore"):
        above = np.flatnonzero(copies * np.log(np.maximum(mag, 1e-300)) > math.log(CHAR_FN_CUTOFF))
    last = int(above[-1]) if above.size else 0
    x_max = probe.nodes[min(last + 1, PROBE_POINTS - 1)]
    # the periodization period 2 pi / dx must be twice the span covering both
    # the output grid and the bulk of p^{*n}, so no image lands on the output
    natural = default_power_grid(dens, copies)
    span = max(out_grid.lambda_max, natural.lambda_max) - min(out_grid.lambda_min, natural.lambda_min)
    dx = math.pi / span
    count = _next_pow2(int(math.ceil(2.0 * x_max / dx)) + 1)
    return GridSpec.symmetric(x_max, count)


def _generic_power(dens: DensityGrid, copies: int, out_grid: GridSpec, derivative: bool):
    x_grid = _power_x_grid(dens, copies, out_grid)
    charf = fourier_transform(dens.values, dens.grid, -1, x_grid)
    fn = charf ** copies
    if derivative:
        fn = 1j * x_grid.nodes * fn
    return fourier_transform(fn, x_grid, 1, out_grid).real / (2.0 * math.pi)


def _triangle_integral(kappa: np.ndarray, copies: int) -> np.ndarray:
    """I(kappa) = int_0^1 cos(kappa t) (1 - t)^n dt for kappa >= 0."""
    kappa = np.asarray(kappa, dtype=float)
    out = np.empty_like(kappa)
    far = kappa >= 2.0 * copies
    if np.any(far):
        # terminating integration-by-parts expansion; term ratio (n - k)/kappa <= 1/2
        ik = 1j * kappa[far]
        term = 1.0 / ik
        total = -term
        for order in range(min(copies, _SERIES_MAX_TERMS)):
            term = term * (copies - order) / ik
            total = total - term
        if copies <= _SERIES_MAX_TERMS:
            total = total + term * np.exp(ik)
        out[far] = total.real
    near = ~far
    if np.any(near):
        upper = min(1.0, 45.0 / copies)
        nodes, weights = leggauss(_GL_NODES)
        nodes = 0.5 * upper * (nodes + 1.0)
        weights = 0.5 * upper * weights
        out[near] = np.cos(np.outer(kappa[near], nodes)) @ (weights * (1.0 - nodes) ** copies)
    return out


def sinc_power_values(half_width: float, copies: int, lam) -> np.ndarray:
    """Exact p^{*n}(lambda) for the sinc density, from the triangular f^n."""
    kappa = 2.0 * half_width * np.abs(np.asarray(lam, dtype=float))
    return (2.0 * half_width / math.pi) * _triangle_integral(kappa, copies)


def default_sinc_power_grid(half_width: float, copies: int) -> GridSpec:
    return GridSpec.symmetric(SINC_HALF_WIDTH * copies / half_width, SINC_POINTS)


def sinc_power_density(half_width: float, copies: int, grid: GridSpec | None = None) -> DensityGrid:
    """n-th convolution power of the sinc density, on an n-scaled grid by default."""
    grid = grid or default_sinc_power_grid(half_width, copies)
    values = sinc_power_values(half_width, copies, grid.nodes)
    return finalize_density(grid, values, source="sinc_power", params=(half_width, copies),
                            truncated_mass=max(0.0, 1.0 - grid.integrate(values)))


def conv_power(dens: DensityGrid, copies: int, out_grid: GridSpec | None = None) -> DensityGrid:
    """n-fold convolution power p^{*n}, via the n-th power of the characteristic function."""
    if not isinstance(copies, (int, np.integer)) or isinstance(copies, bool) or copies < 1:
        raise ParameterError("n must be a positive integer")
    copies = int(copies)
    sinc = _sinc_power_index(dens)
    if sinc is not None:
        half_width, base_power = sinc
        if copies == 1 and out_grid is None:
            return dens
        return sinc_power_density(half_width, base_power * copies, out_grid)
    if copies == 1 and out_grid is None:
        return dens
    grid = out_grid or default_power_grid(dens, copies)
    return finalize_density(grid, _generic_power(dens, copies, grid, derivative=False),
                            source="power", params=(copies,))


def conv_power_derivative(dens: DensityGrid, copies: int, out_grid: GridSpec | None = None) -> np.ndarray:
    """Derivative of p^{*n} on ``out_grid``, by the transform of i x f(x)^n."""
    if not isinstance(copies, (int, np.integer)) or copies < 1:
        raise ParameterError("n must be a positive integer")
    grid = out_grid or default_power_grid(dens, copies)
    return _generic_power(dens, copies, grid, derivative=True)
