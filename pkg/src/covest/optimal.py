"""Statistics of the minimum-variance covariant measurement of a shift.

For a state with spectral amplitude psi the optimal measurement has
characteristic function equal to the autocorrelation of |psi|, minimum
variance D* = int ((sqrt p)')^2, and outcome density given by the squared
transform of sqrt p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParameterError, RangeError
from .special import QuadratureResult, quad, relative_change, sqrt_density_derivative
from .spectral import finalize_density, fourier_transform
from .states import DensityGrid, GridSpec, WavefunctionGrid, density, moments

INFINITE_UNCERTAINTY_FLOOR = 1e-6
DIVERGENCE_RTOL = 0.05
PRODUCT_FLOOR = 0.25
_CHUNK = 64


# --------------------------------------------------------------------------
# characteristic function and uncertainty functional

def _modulus_power_spectrum(psi: WavefunctionGrid):
    """x nodes, trapezoid weights and |M(x)|^2 / 2pi, normalized to unit integral.

    M is the transform of |psi| over exactly one period 2pi/h, sampled finely
    enough that the trapezoid rule integrates |M|^2 e^{i lambda x} exactly for
    every shift up to the grid width.
    """
    grid = psi.grid
    x_grid = GridSpec.symmetric(math.pi / grid.spacing, 2 * grid.n_points)
    spec = np.abs(fourier_transform(psi.modulus, grid, -1, x_grid)) ** 2
    weights = x_grid.weights * spec
    return x_grid.nodes, weights / weights.sum()


def _deficits(psi: WavefunctionGrid, lams: np.ndarray) -> np.ndarray:
    """1 - phi*(lambda), evaluated without cancellation."""
    freqs, weights = _modulus_power_spectrum(psi)
    out = np.empty(lams.size)
    for start in range(0, lams.size, _CHUNK):
        block = lams[start:start + _CHUNK]
        out[start:start + _CHUNK] = 2.0 * (np.sin(0.5 * np.outer(block, freqs)) ** 2) @ weights
    return out


def _check_shifts(psi: WavefunctionGrid, lams: np.ndarray):
    if np.any(~np.isfinite(lams)) or np.any(np.abs(lams) > psi.grid.width):
        raise RangeError("shift exceeds the width of the spectral grid")


def optimal_char_fn(psi: WavefunctionGrid, lam):
    """phi*(lambda) = int |psi(l)| |psi(l + lambda)| dl.

    Accepts a scalar or an array of shifts.  Shifts between grid nodes are
    handled by trigonometric interpolation of the discrete autocorrelation.
    """
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    _check_shifts(psi, lams)
    phi = 1.0 - _deficits(psi, lams)
    return float(phi[0]) if np.ndim(lam) == 0 else phi


def _delta_from_deficit(lams, deficit):
    phi = 1.0 - deficit
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = deficit * (2.0 - deficit) / (lams ** 2 * phi ** 2)
    return np.where(phi < INFINITE_UNCERTAINTY_FLOOR, math.inf, delta)


def delta_star(psi: WavefunctionGrid, lam):
    """lambda^-2 (phi*(lambda)^-2 - 1); +inf where phi* < 1e-6."""
    lams = np.atleast_1d(np.asarray(lam, dtype=float))
    if np.any(lams == 0.0):
        raise DomainError("uncertainty functional is undefined at lambda = 0")
    _check_shifts(psi, lams)
    delta = _delta_from_deficit(lams, _deficits(psi, lams))
    return float(delta[0]) if np.ndim(lam) == 0 else delta


# --------------------------------------------------------------------------
# minimum variance

@dataclass(frozen=True)
class DStarResult:
    value: float
    fine: QuadratureResult
    coarse_value: float
    diverged: bool


def d_star_detail(dens: DensityGrid) -> DStarResult:
    """D* on the density's grid and on the grid with every other node."""
    fine = quad(sqrt_density_derivative(dens) ** 2, dens.grid)
    coarse_p = dens.coarsened()
    coarse = quad(sqrt_density_derivative(coarse_p) ** 2, coarse_p.grid).value
    diverged = not math.isfinite(fine.value) or relative_change(fine.value, coarse) > DIVERGENCE_RTOL
    return DStarResult(math.inf if diverged else fine.value, fine, coarse, diverged)


def d_star(dens: DensityGrid) -> float:
    """Minimum covariant variance int ((sqrt p)')^2; +inf when the grids disagree by > 5%."""
    return d_star_detail(dens).value


# --------------------------------------------------------------------------
# outcome density

def default_outcome_grid(dens: DensityGrid, theta: float = 0.0, n_points: int = 4096) -> GridSpec:
    spread = d_star(dens)
    limit = 0.9 * math.pi / dens.grid.spacing
    half = limit if not math.isfinite(spread) else min(16.0 * math.sqrt(spread), limit)
    return GridSpec(theta - half, theta + half, n_points)


def optimal_density(dens: DensityGrid, theta: float = 0.0, x_grid: GridSpec | None = None) -> DensityGrid:
    """p*_theta(x) = (1/2pi) |int exp(i lambda (x - theta)) sqrt(p) dlambda|^2.

    The transform is evaluated at the nodes of ``x_grid`` shifted by -theta,
    so shifting theta shifts the density exactly.
    """
    if x_grid is None:
        x_grid = default_outcome_grid(dens, theta)
    amp = fourier_transform(np.sqrt(dens.values), dens.grid, 1, x_grid.shifted(-theta))
    values = np.abs(amp) ** 2 / (2.0 * math.pi)
    return finalize_density(x_grid, values, source="optimal", params=(theta,))


# --------------------------------------------------------------------------
# risk

RISK_KINDS = ("squared", "absolute", "one_minus_cos")


@dataclass(frozen=True)
class RiskSpec:
    """Deviation function W; ``one_minus_cos`` is 1 - cos(scale * x)."""

    kind: str = "squared"
    scale: float = 1.0

    def __post_init__(self):
        if self.kind not in RISK_KINDS:
            raise ParameterError(f"unknown deviation function {self.kind!r}")
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ParameterError("scale must be positive")

    def __call__(self, deviation):
        deviation = np.asarray(deviation, dtype=float)
        if self.kind == "squared":
            return deviation * deviation
        if self.kind == "absolute":
            return np.abs(deviation)
        return 1.0 - np.cos(self.scale * deviation)


def risk(outcome_density: DensityGrid, theta: float, spec: RiskSpec) -> float:
    """int W(x - theta) p(x) dx; +inf for squared loss when the tail test fails."""
    grid = outcome_density.grid
    integrand = spec(grid.nodes - theta) * outcome_density.values
    value = grid.integrate(integrand)
    if spec.kind == "squared":
        count = grid.n_points
        half = slice(count // 4, count - count // 4)
        central = quad(integrand[half], grid).value
        if relative_change(value, central) > DIVERGENCE_RTOL:
            return math.inf
    return value


# --------------------------------------------------------------------------
# report

@dataclass(frozen=True)
class UncertaintyReport:
    lambda_values: tuple
    phi_star: tuple
    delta_star: tuple
    d_star: float
    generator_variance: float
    products: tuple
    heisenberg_product: float
    preset: str = "custom"
    params: tuple = ()

    @property
    def violations(self) -> list:
        """Shifts (or 'heisenberg') whose product falls below 1/4 - 1e-9."""
        bad = [lam for lam, prod in zip(self.lambda_values, self.products)
               if prod < PRODUCT_FLOOR - 1e-9]
        if self.heisenberg_product < PRODUCT_FLOOR - 1e-9:
            bad.append("heisenberg")
        return bad

    def rows(self):
        return [(lam, phi, delta, prod) for lam, phi, delta, prod
                in zip(self.lambda_values, self.phi_star, self.delta_star, self.products)]


REPORT_COLUMNS = ("lambda", "phi_star", "delta_star", "product")


def uncertainty_report(psi: WavefunctionGrid, lambda_values) -> UncertaintyReport:
    """phi*, Delta*, D* and the uncertainty products against the generator variance.

    At lambda = 0 the uncertainty functional is reported as its limit D*.
    """
    lams = np.asarray(lambda_values, dtype=float)
    _check_shifts(psi, lams)
    dens = density(psi)
    dstar = d_star(dens)
    variance = moments(dens).variance
    deficit = _deficits(psi, lams)
    phi = 1.0 - deficit
    nonzero = lams != 0.0
    delta = np.full(lams.size, dstar)
    delta[nonzero] = _delta_from_deficit(lams[nonzero], deficit[nonzero])
    products = tuple(_product(spread, variance) for spread in delta)
    return UncertaintyReport(
        tuple(float(val) for val in lams), tuple(float(val) for val in phi), tuple(float(val) for val in delta),
        dstar, variance, products, _product(dstar, variance), psi.preset, psi.params,
    )


def _product(first: float, second: float) -> float:
    return math.inf if math.isinf(first) or math.isinf(second) else float(first * second)
