"""Gridded pure-state spectral profiles and the densities derived from them.

A state is represented by its spectral amplitude psi(lambda) sampled on a
uniform grid.  Only scalar amplitudes are supported: every quantity computed
downstream depends on the state through |psi(lambda)| or psi itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.special import ndtr

from .errors import GridError, GridTooNarrowError, NotCenterableError, ParameterError
from .special import trapezoid_weights

NORM_TOL = 1e-9
DENSITY_NORM_TOL = 1e-8
GAUSSIAN_TAIL_TOL = 1e-10
MOMENT_DOUBLING_RTOL = 0.05

PRESETS = ("gaussian", "sinc", "gaussian_mixture", "custom")
_ALIASES = {"g": "gaussian", "mixture": "gaussian_mixture"}


def canonical_preset(name: str) -> str:
    key = _ALIASES.get(name, name)
    if key not in PRESETS:
        raise ParameterError(f"unknown preset {name!r}")
    return key


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid with both endpoints included.

    The same type is used for the spectral axis and for position axes.
    """

    lambda_min: float
    lambda_max: float
    n_points: int

    def __post_init__(self):
        count = self.n_points
        if not isinstance(count, (int, np.integer)) or count < 16 or count & (count - 1):
            raise GridError(f"n_points must be a power of two >= 16, got {count!r}")
        if not (math.isfinite(self.lambda_min) and math.isfinite(self.lambda_max)):
            raise GridError("grid bounds must be finite")
        if not self.lambda_min < self.lambda_max:
            raise GridError("lambda_min must be below lambda_max")
        if not (self.spacing > 0 and math.isfinite(self.spacing)):
            raise GridError("grid spacing must be positive and finite")

    @classmethod
    def symmetric(cls, half_width: float, n_points: int) -> GridSpec:
        return cls(-float(half_width), float(half_width), int(n_points))

    @property
    def spacing(self) -> float:
        return (self.lambda_max - self.lambda_min) / (self.n_points - 1)

    @property
    def width(self) -> float:
        return self.lambda_max - self.lambda_min

    @cached_property
    def nodes(self) -> np.ndarray:
        points = self.lambda_min + self.spacing * np.arange(self.n_points)
        points.flags.writeable = False
        return points

    @cached_property
    def weights(self) -> np.ndarray:
        weights = trapezoid_weights(self.n_points, self.spacing)
        weights.flags.writeable = False
        return weights

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def shifted(self, delta: float) -> GridSpec:
        return GridSpec(self.lambda_min + delta, self.lambda_max + delta, self.n_points)

    def scaled(self, factor: float) -> GridSpec:
        return GridSpec(self.lambda_min * factor, self.lambda_max * factor, self.n_points)

    def coarsened(self) -> GridSpec:
        """Every other node (the last node is dropped)."""
        count = self.n_points // 2
        return GridSpec(self.lambda_min, self.lambda_min + 2 * self.spacing * (count - 1), count)

    def refined(self) -> GridSpec:
        return GridSpec(self.lambda_min, self.lambda_max, 2 * self.n_points)


def _frozen(data, dtype) -> np.ndarray:
    arr = np.array(data, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class WavefunctionGrid:
    grid: GridSpec
    amplitudes: np.ndarray
    preset: str = "custom"
    params: tuple = ()
    renorm_factor: float = 1.0
    truncated_mass: float = 0.0

    def __post_init__(self):
        amp = _frozen(self.amplitudes, complex)
        object.__setattr__(self, "amplitudes", amp)
        if amp.shape != (self.grid.n_points,):
            raise GridError("amplitudes must have one value per grid node")
        if not np.all(np.isfinite(amp)):
            raise ParameterError("amplitudes must be finite")
        norm = self.grid.integrate(np.abs(amp) ** 2)
        if abs(norm - 1.0) > NORM_TOL:
            raise ParameterError(f"state is not normalized (norm {norm:.12g})")

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.amplitudes)

    def with_phase(self, alpha) -> WavefunctionGrid:
        """Multiply amplitudes by exp(i * alpha(lambda))."""
        phase = alpha(self.grid.nodes) if callable(alpha) else np.asarray(alpha)
        return WavefunctionGrid(self.grid, self.amplitudes * np.exp(1j * phase),
                                self.preset, self.params, self.renorm_factor, self.truncated_mass)


@dataclass(frozen=True)
class DensityGrid:
    """Nonnegative density on a uniform grid, normalized by the trapezoid rule.

    ``source``/``params`` record where the density came from (a state preset,
    a convolution power, ...), which lets downstream code pick closed forms.
    """

    grid: GridSpec
    values: np.ndarray
    source: str = "custom"
    params: tuple = ()
    renorm_factor: float = 1.0
    clipped_mass: float = 0.0
    truncated_mass: float = 0.0

    def __post_init__(self):
        vals = _frozen(self.values, float)
        object.__setattr__(self, "values", vals)
        if vals.shape != (self.grid.n_points,):
            raise GridError("density must have one value per grid node")
        if not np.all(np.isfinite(vals)) or np.any(vals < 0):
            raise ParameterError("density values must be finite and nonnegative")
        mass = self.grid.integrate(vals)
        if abs(mass - 1.0) > DENSITY_NORM_TOL:
            raise ParameterError(f"density is not normalized (mass {mass:.12g})")

    @classmethod
    def normalized(cls, grid: GridSpec, values, **meta) -> DensityGrid:
        vals = np.clip(np.asarray(values, dtype=float), 0.0, None)
        mass = grid.integrate(vals)
        if not mass > 0:
            raise ParameterError("density has no mass on the grid")
        factor = 1.0 / mass
        meta.setdefault("renorm_factor", factor)
        return cls(grid, vals * factor, **meta)

    @property
    def nodes(self) -> np.ndarray:
        return self.grid.nodes

    def coarsened(self) -> DensityGrid:
        return DensityGrid.normalized(self.grid.coarsened(), self.values[::2],
                                      source=self.source, params=self.params)

    def relabeled(self, grid: GridSpec, scale: float = 1.0) -> DensityGrid:
        """Same node values on another grid, multiplied by ``scale``."""
        return DensityGrid.normalized(grid, self.values * scale, source=self.source, params=self.params)

    def interpolate(self, points) -> np.ndarray:
        """Piecewise-linear interpolant, zero outside the grid."""
        return np.interp(points, self.grid.nodes, self.values, left=0.0, right=0.0)

    def cdf(self) -> np.ndarray:
        step = self.grid.spacing
        cumulative = np.concatenate(([0.0], np.cumsum(0.5 * step * (self.values[1:] + self.values[:-1]))))
        return cumulative / cumulative[-1]


@dataclass(frozen=True)
class MomentReport:
    mean: float
    variance: float
    finite: bool
    mean_defined: bool = True


# --------------------------------------------------------------------------
# construction

def _gaussian_pdf(points, mu, sigma):
    return np.exp(-0.5 * ((points - mu) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))


def _parse_params(preset: str, params) -> tuple:
    params = tuple(float(vals) for vals in params)
    if preset == "gaussian":
        if len(params) != 1:
            raise ParameterError("gaussian takes one parameter (sigma)")
        if not params[0] > 0:
            raise ParameterError("sigma must be positive")
    elif preset == "sinc":
        if len(params) != 1:
            raise ParameterError("sinc takes one parameter (a)")
        if not params[0] > 0:
            raise ParameterError("a must be positive")
    elif preset == "gaussian_mixture":
        if len(params) == 3:
            params = params + (1.0,)
        if len(params) != 4:
            raise ParameterError("gaussian_mixture takes (mu1, mu2, w[, sigma])")
        mu1, mu2, weight, sigma = params
        if not 0 < weight < 1:
            raise ParameterError("mixture weight w must lie in (0, 1)")
        if not sigma > 0:
            raise ParameterError("sigma must be positive")
    return params


def default_grid(preset: str, params) -> GridSpec:
    """Grid defaults: +-8 sigma around Gaussian components; +-200/a for sinc."""
    preset = canonical_preset(preset)
    params = _parse_params(preset, params)
    if preset == "gaussian":
        return GridSpec.symmetric(8.0 * params[0], 4096)
    if preset == "sinc":
        return GridSpec.symmetric(200.0 / params[0], 2 ** 16)
    if preset == "gaussian_mixture":
        mu1, mu2, _, sigma = params
        return GridSpec(min(mu1, mu2) - 8.0 * sigma, max(mu1, mu2) + 8.0 * sigma, 4096)
    raise ParameterError("custom states need an explicit grid")


def _tail_mass(components, grid: GridSpec) -> float:
    lo, hi = grid.lambda_min, grid.lambda_max
    return sum(weight * (ndtr((lo - mu) / sigma_k) + ndtr(-(hi - mu) / sigma_k))
               for weight, mu, sigma_k in components)


def make_state(preset: str, params, grid: GridSpec | None = None) -> WavefunctionGrid:
    """Build a normalized state from a named preset.

    Presets: ``gaussian`` (sigma), ``sinc`` (a) and ``gaussian_mixture``
    (mu1, mu2, w[, sigma]); the mixture is a mixture of densities and its
    amplitude is the square root of that density.
    """
    preset = canonical_preset(preset)
    if preset == "custom":
        raise ParameterError("use custom_state() for user-supplied amplitudes")
    params = _parse_params(preset, params)
    if grid is None:
        grid = default_grid(preset, params)
    lam = grid.nodes

    if preset == "sinc":
        (half_width,) = params
        # sin(a l)/l == a * sinc(a l / pi), finite at l = 0
        amp = half_width * np.sinc(half_width * lam / math.pi) / math.sqrt(math.pi * half_width)
        raw_mass = grid.integrate(amp ** 2)
        truncated = 1.0 - raw_mass
    else:
        if preset == "gaussian":
            comps = [(1.0, 0.0, params[0])]
        else:
            mu1, mu2, weight, sigma = params
            comps = [(weight, mu1, sigma), (1.0 - weight, mu2, sigma)]
        truncated = _tail_mass(comps, grid)
        if truncated > GAUSSIAN_TAIL_TOL:
            raise GridTooNarrowError(f"grid truncates mass {truncated:.3g} > {GAUSSIAN_TAIL_TOL:g}")
        dens = sum(weight * _gaussian_pdf(lam, mu, sigma_k) for weight, mu, sigma_k in comps)
        amp = np.sqrt(dens)
        raw_mass = grid.integrate(dens)

    factor = 1.0 / math.sqrt(raw_mass)
    return WavefunctionGrid(grid, amp * factor, preset, params, factor ** 2, truncated)


def custom_state(amplitudes, grid: GridSpec) -> WavefunctionGrid:
    amp = np.asarray(amplitudes, dtype=complex)
    if amp.shape != (grid.n_points,):
        raise GridError("amplitudes must have one value per grid node")
    mass = grid.integrate(np.abs(amp) ** 2)
    if not mass > 0:
        raise ParameterError("amplitudes vanish on the grid")
    return WavefunctionGrid(grid, amp / math.sqrt(mass), "custom", (), 1.0 / mass)


def density(psi: WavefunctionGrid) -> DensityGrid:
    """p(lambda) = |psi(lambda)|^2, renormalized by the trapezoid rule."""
    dens = np.abs(psi.amplitudes) ** 2
    mass = psi.grid.integrate(dens)
    factor = 1.0 / mass
    # carry the state's own normalization factor unless this step changed things
    renorm = factor if abs(factor - 1.0) > NORM_TOL else psi.renorm_factor
    return DensityGrid(psi.grid, dens * factor, source=psi.preset, params=psi.params,
                       renorm_factor=renorm, truncated_mass=psi.truncated_mass)


# --------------------------------------------------------------------------
# moments

TAIL_WINDOW_IQR = 10.0


def _central_half(dens: DensityGrid) -> slice:
    """Nodes within max(width/4, 10 IQR) of the median.

    A quarter of the grid width is the literal central half; the IQR floor
    keeps light-tailed densities whose bulk fills the grid from being clipped.
    """
    grid = dens.grid
    cdf = dens.cdf()
    q1, median, q3 = np.interp([0.25, 0.5, 0.75], cdf, grid.nodes)
    radius = max(0.25 * grid.width, TAIL_WINDOW_IQR * (q3 - q1))
    lo = int(np.searchsorted(grid.nodes, median - radius))
    hi = int(np.searchsorted(grid.nodes, median + radius, side="right"))
    return slice(lo, hi)


def moments(dens: DensityGrid) -> MomentReport:
    """Mean and variance by trapezoid quadrature.

    Tail tests compare the full domain with its central half (half the width,
    centered on the median, widened to 10 IQR when that is larger).  The variance is declared infinite when the two
    second central moments differ by more than 5%.  The mean is reported when
    the two first moments agree within 5% of |mean| plus the central spread,
    so symmetric heavy tails (whose odd parts cancel) still have a mean.
    """
    lam = dens.grid.nodes
    weights = dens.grid.weights
    half = _central_half(dens)
    w_half = trapezoid_weights(lam[half].size, dens.grid.spacing)
    mass_half = float(np.dot(w_half, dens.values[half]))

    m_full = float(np.dot(weights, lam * dens.values))
    m_half = float(np.dot(w_half, lam[half] * dens.values[half])) / mass_half

    centered = lam - m_full
    v_full = float(np.dot(weights, centered * centered * dens.values))
    v_half = float(np.dot(w_half, centered[half] ** 2 * dens.values[half]))
    finite = abs(v_full - v_half) <= MOMENT_DOUBLING_RTOL * abs(v_full)
    spread = math.sqrt(v_half / mass_half)
    mean_defined = abs(m_full - m_half) <= MOMENT_DOUBLING_RTOL * (abs(m_full) + spread)
    mean = m_full if mean_defined else math.nan
    return MomentReport(mean, v_full if finite else math.inf, finite, mean_defined)


def center(psi: WavefunctionGrid) -> WavefunctionGrid:
    """Translate the state so that the mean of |psi|^2 is zero.

    The amplitudes are kept and the grid is relabeled by the mean, which is
    an exact translation with no interpolation.
    """
    stats = moments(density(psi))
    if not stats.mean_defined:
        raise NotCenterableError("first moment is infinite or undefined")
    if stats.mean == 0.0:
        return psi
    return WavefunctionGrid(psi.grid.shifted(-stats.mean), psi.amplitudes, psi.preset, psi.params,
                            psi.renorm_factor, psi.truncated_mass)


def state_rows(psi: WavefunctionGrid):
    """CSV rows ``lambda, re_psi, im_psi, p``."""
    dens = density(psi).values
    lam = psi.grid.nodes
    amp = psi.amplitudes
    return [(float(node), float(val.real), float(val.imag), float(prob))
            for node, val, prob in zip(lam, amp, dens)]


STATE_COLUMNS = ("lambda", "re_psi", "im_psi", "p")
