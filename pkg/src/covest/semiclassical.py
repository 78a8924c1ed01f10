"""The per-copy (unentangled) baseline.

Each copy is measured with the optimal single-copy observable, and the n
outcomes are combined classically.  This module provides the position-space
wavefunction built from |psi|, the Fisher information of the resulting
outcome density, the split of the generator's second moment into a modulus
part and a phase part, sampling, Pitman estimators, and a seeded Monte Carlo
harness.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePosteriorError, GridTooNarrowError, ParameterError
from .optimal import default_outcome_grid, optimal_density
from .special import DENSITY_FLOOR, central_derivative, relative_change
from .spectral import ALIAS_EDGE_FRACTION, ALIAS_MASS_TOL, finalize_density, fourier_transform
from .states import DensityGrid, GridSpec, WavefunctionGrid, density, moments

MODULUS_FLOOR = 1e-8
UNDEFINED_RTOL = 0.05
VANISHING_RUN = 4
BULK_FRACTION = 1e-6
PITMAN_TOL = 1e-7
PITMAN_MAX_REFINEMENTS = 8
_LOG_WINDOW = 60.0

ESTIMATORS = ("pitman_numeric", "pitman_midrange", "sample_mean")


# --------------------------------------------------------------------------
# position space

@dataclass(frozen=True)
class PositionWavefunction:
    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        vals = np.array(self.values, dtype=complex)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def norm(self) -> float:
        """(1/2pi) int |psi(x)|^2 dx."""
        return self.grid.integrate(self.modulus ** 2) / (2.0 * math.pi)

    @property
    def phase(self) -> np.ndarray:
        """Unwrapped arg psi(x); nodes with |psi| < 1e-8 carry the last valid value."""
        raw = np.angle(self.values)
        keep = self.modulus >= MODULUS_FLOOR
        out = np.zeros_like(raw)
        if np.any(keep):
            idx = np.flatnonzero(keep)
            out[idx] = np.unwrap(raw[idx])
            fill = np.maximum.accumulate(np.where(keep, np.arange(raw.size), 0))
            out = out[fill]
            out[: idx[0]] = out[idx[0]]
        return out

    @property
    def phase_derivative(self) -> np.ndarray:
        """beta'(x) = Im(conj(psi) psi') / |psi|^2, zero where |psi| < 1e-8."""
        deriv = central_derivative(self.values, self.grid.spacing)
        mod2 = self.modulus ** 2
        keep = self.modulus >= MODULUS_FLOOR
        out = np.zeros(mod2.size)
        out[keep] = (np.conj(self.values[keep]) * deriv[keep]).imag / mod2[keep]
        return out


def _check_edges(grid: GridSpec, weights: np.ndarray):
    edge = max(2, int(grid.n_points * ALIAS_EDGE_FRACTION))
    total = grid.integrate(weights)
    step = grid.spacing
    if step * max(weights[:edge].sum(), weights[-edge:].sum()) > ALIAS_MASS_TOL * total:
        raise GridTooNarrowError("mass piles up at the edge of the position grid")


def position_wavefunction(psi: WavefunctionGrid, x_grid: GridSpec | None = None) -> PositionWavefunction:
    """psi(x) = int exp(i lambda x) |psi(lambda)| dlambda."""
    if x_grid is None:
        x_grid = default_outcome_grid(density(psi))
    values = fourier_transform(psi.modulus, psi.grid, 1, x_grid)
    _check_edges(x_grid, np.abs(values) ** 2)
    return PositionWavefunction(x_grid, values)


def position_density(psi: WavefunctionGrid, theta: float = 0.0, x_grid: GridSpec | None = None) -> DensityGrid:
    """Density of the plain position observable, (1/2pi)|int exp(i lambda (x - theta)) psi|^2.

    Unlike ``position_wavefunction`` this keeps the phase of psi.
    """
    if x_grid is None:
        x_grid = default_outcome_grid(density(psi), theta)
    amp = fourier_transform(psi.amplitudes, psi.grid, 1, x_grid.shifted(-theta))
    return finalize_density(x_grid, np.abs(amp) ** 2 / (2.0 * math.pi), source="position", params=(theta,))


def uniform_density(half_width: float = 1.0, n_points: int = 1024,
                    grid_half_width: float | None = None) -> DensityGrid:
    """Rectangular density 1/(2a) on [-half_width, half_width].

    By default the grid ends exactly on the jumps, so the density and its
    cumulative distribution are exact.  With ``grid_half_width`` > a the grid
    extends past the support and the jumps are sampled.
    """
    if not half_width > 0:
        raise ParameterError("half-width must be positive")
    if grid_half_width is None:
        grid = GridSpec(-half_width, half_width, n_points)
        values = np.full(n_points, 0.5 / half_width)
        return DensityGrid(grid, values, source="uniform", params=(half_width,))
    grid = GridSpec.symmetric(grid_half_width, n_points)
    values = np.where(np.abs(grid.nodes) <= half_width, 0.5 / half_width, 0.0)
    return DensityGrid.normalized(grid, values, source="uniform", params=(half_width,))


# --------------------------------------------------------------------------
# Fisher information and the phase split

@dataclass(frozen=True)
class FisherResult:
    value: float
    coarse_value: float
    defined: bool


def _fisher_raw(dens: DensityGrid) -> float:
    step = dens.grid.spacing
    deriv = central_derivative(dens.values, step)
    keep = dens.values > DENSITY_FLOOR
    # below the floor use the limit 2 p'' of p'^2/p at a double zero (flat zeros give 0)
    integrand = 2.0 * np.clip(central_derivative(deriv, step), 0.0, None)
    integrand[keep] = deriv[keep] ** 2 / dens.values[keep]
    return dens.grid.integrate(integrand)


def fisher_detail(p_tilde: DensityGrid) -> FisherResult:
    fine = _fisher_raw(p_tilde)
    coarse = _fisher_raw(p_tilde.coarsened())
    defined = math.isfinite(fine) and relative_change(fine, coarse) <= UNDEFINED_RTOL
    return FisherResult(fine, coarse, defined)


def fisher_information(p_tilde: DensityGrid) -> float:
    """int p'^2 / p, with nodes below 1e-12 treated as zeros of p.

    Returns nan (undefined) when halving the resolution moves the value by
    more than 5%, as happens for densities with jumps.
    """
    fisher = fisher_detail(p_tilde)
    return fisher.value if fisher.defined else math.nan


@dataclass(frozen=True)
class PhaseDecomposition:
    modulus_term: float
    phase_penalty: float
    total: float
    excluded_mass: float
    defined: bool = True

    def __iter__(self):
        return iter((self.modulus_term, self.phase_penalty, self.total))


def _has_interior_gap(modulus: np.ndarray) -> bool:
    """True when |psi| vanishes on a run of nodes inside the bulk of |psi|."""
    bulk = np.flatnonzero(modulus >= BULK_FRACTION * modulus.max())
    if bulk.size == 0:
        return True
    inner = modulus[bulk[0]: bulk[-1] + 1] < MODULUS_FLOOR
    run = 0
    for flag in inner:
        run = run + 1 if flag else 0
        if run >= VANISHING_RUN:
            return True
    return False


def phase_decomposition(psi_x: PositionWavefunction) -> PhaseDecomposition:
    """Split (1/2pi) int |psi'|^2 into (1/2pi) int (|psi|')^2 + (1/2pi) int beta'^2 |psi|^2.

    Uses |psi| |psi|' = Re(conj(psi) psi') and |psi|^2 beta' = Im(conj(psi) psi'),
    so sign changes of a real psi (jumps of pi in the phase) add nothing to
    the penalty.  Nodes with |psi| < 1e-8 go entirely into the modulus term.
    """
    vals = psi_x.values
    grid = psi_x.grid
    deriv = central_derivative(vals, grid.spacing)
    mod2 = np.abs(vals) ** 2
    keep = np.sqrt(mod2) >= MODULUS_FLOOR
    cross = np.conj(vals) * deriv
    modulus_integrand = np.abs(deriv) ** 2
    penalty_integrand = np.zeros_like(mod2)
    modulus_integrand[keep] = cross[keep].real ** 2 / mod2[keep]
    penalty_integrand[keep] = cross[keep].imag ** 2 / mod2[keep]
    scale = 1.0 / (2.0 * math.pi)
    modulus_term = scale * grid.integrate(modulus_integrand)
    excluded = scale * grid.integrate(np.where(keep, 0.0, mod2))
    if _has_interior_gap(np.sqrt(mod2)):
        return PhaseDecomposition(modulus_term, math.nan, math.nan, excluded, defined=False)
    penalty = scale * grid.integrate(penalty_integrand)
    return PhaseDecomposition(modulus_term, penalty, modulus_term + penalty, excluded)


@dataclass(frozen=True)
class SemiclassicalComparison:
    generator_variance: float
    fisher_information: float
    cramer_rao_bound: float
    quantum_asymptote: float
    phase_penalty: float
    modulus_term: float
    gap: float


def semiclassical_comparison(psi: WavefunctionGrid, x_grid: GridSpec | None = None) -> SemiclassicalComparison:
    """Per-copy Cramer-Rao bound 1/I against the entangled asymptote 1/(4D).

    Both are variances per copy, i.e. multiplied by n.  ``gap`` is their
    difference; it is positive exactly when the phase penalty is.
    """
    dens = density(psi)
    variance = moments(dens).variance
    outcome = optimal_density(dens, 0.0, x_grid)
    info = fisher_information(outcome)
    decomposition = phase_decomposition(position_wavefunction(psi, outcome.grid))
    crb = 1.0 / info if info > 0 else math.inf
    asymptote = 1.0 / (4.0 * variance) if variance > 0 else math.inf
    return SemiclassicalComparison(variance, info, crb, asymptote, decomposition.phase_penalty,
                                   decomposition.modulus_term, crb - asymptote)


# --------------------------------------------------------------------------
# sampling

@dataclass(frozen=True)
class SampleSet:
    values: np.ndarray
    copies: int
    seed: int
    source: str
    trial: int = 0

    def __post_init__(self):
        vals = np.array(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        if vals.size != self.copies:
            raise ParameterError("sample count does not match n")


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial, independent of all other trial indices."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(trial,))))


class _InverseCdf:
    def __init__(self, dens: DensityGrid):
        self.cdf = dens.cdf()
        self.nodes = dens.grid.nodes

    def __call__(self, uniforms: np.ndarray) -> np.ndarray:
        return np.interp(uniforms, self.cdf, self.nodes)


def sample(dens: DensityGrid, copies: int, seed: int, trial: int = 0) -> SampleSet:
    """n draws by inverse-CDF sampling on the piecewise-linear cumulative trapezoid."""
    if copies < 1:
        raise ParameterError("n must be at least 1")
    uniforms = trial_generator(seed, trial).random(copies)
    return SampleSet(_InverseCdf(dens)(uniforms), copies, seed, dens.source, trial)


# --------------------------------------------------------------------------
# estimators

def pitman_midrange(samples) -> float:
    sample_vals = np.asarray(getattr(samples, "values", samples), dtype=float)
    return 0.5 * (float(sample_vals.min()) + float(sample_vals.max()))


def _log_likelihood(sample_vals: np.ndarray, dens: DensityGrid, thetas: np.ndarray) -> np.ndarray:
    ll = np.zeros(thetas.size)
    with np.errstate(divide="ignore"):
        for xi in sample_vals:
            ll += np.log(dens.interpolate(xi - thetas))
    return ll


def _theta_grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = max(3, int(math.ceil((hi - lo) / step)) + 1)
    return lo + (hi - lo) / (count - 1) * np.arange(count)


def _posterior_mean(sample_vals, dens, lo, hi, step) -> float:
    thetas = _theta_grid(lo, hi, step)
    ll = _log_likelihood(sample_vals, dens, thetas)
    top = ll.max()
    if not np.isfinite(top):
        raise DegeneratePosteriorError("samples have zero likelihood for every shift")
    weight = np.exp(ll - top)
    return float(np.trapezoid(thetas * weight, thetas) / np.trapezoid(weight, thetas))


def pitman_numeric(samples, p_tilde: DensityGrid) -> float:
    """Posterior mean of the shift under a flat prior (the Pitman estimator).

    The shift grid starts at 1/8 of the density spacing and is halved until
    the estimate moves by less than 1e-7.
    """
    sample_vals = np.asarray(getattr(samples, "values", samples), dtype=float)
    if sample_vals.size == 0:
        raise ParameterError("need at least one sample")
    grid = p_tilde.grid
    lo, hi = float(sample_vals.max()) - grid.lambda_max, float(sample_vals.min()) - grid.lambda_min
    if not lo < hi:
        raise DegeneratePosteriorError("samples are spread wider than the density support")
    # locate the bulk of the posterior on a coarse pass
    coarse = _theta_grid(lo, hi, grid.spacing)
    ll = _log_likelihood(sample_vals, p_tilde, coarse)
    if not np.isfinite(ll.max()):
        raise DegeneratePosteriorError("samples have zero likelihood for every shift")
    bulk = np.flatnonzero(ll > ll.max() - _LOG_WINDOW)
    lo = max(lo, coarse[bulk[0]] - grid.spacing)
    hi = min(hi, coarse[bulk[-1]] + grid.spacing)

    step = grid.spacing / 8.0
    estimate = _posterior_mean(sample_vals, p_tilde, lo, hi, step)
    for _ in range(PITMAN_MAX_REFINEMENTS):
        step /= 2.0
        refined = _posterior_mean(sample_vals, p_tilde, lo, hi, step)
        if abs(refined - estimate) < PITMAN_TOL:
            return refined
        estimate = refined
    return estimate


@dataclass(frozen=True)
class EstimatorReport:
    estimator: str
    copies: int
    trials: int
    mean: float
    variance: float
    stderr_of_variance: float
    seed: int

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _estimator(name: str, dens: DensityGrid):
    if name == "pitman_midrange":
        return pitman_midrange
    if name == "sample_mean":
        return lambda draws: float(np.mean(draws.values))
    if name == "pitman_numeric":
        return lambda draws: pitman_numeric(draws, dens)
    raise ParameterError(f"unknown estimator {name!r}")


def mc_variance(estimator: str, dens: DensityGrid, copies: int, trials: int, seed: int) -> EstimatorReport:
    """Monte Carlo spread of an estimator at true shift 0.

    Trial t draws from its own substream (seed, t), so the result does not
    depend on the order in which trials are evaluated.
    """
    if trials < 100:
        raise ParameterError("trials must be at least 100")
    if copies < 1:
        raise ParameterError("n must be at least 1")
    estimate = _estimator(estimator, dens)
    inverse = _InverseCdf(dens)
    values = np.empty(trials)
    for trial_index in range(trials):
        uniforms = trial_generator(seed, trial_index).random(copies)
        draws = SampleSet(inverse(uniforms), copies, seed, dens.source, trial_index)
        values[trial_index] = estimate(draws)
    mean = math.fsum(values) / trials
    variance = math.fsum((values - mean) ** 2) / (trials - 1)
    stderr = variance * math.sqrt(2.0 / (trials - 1))
    return EstimatorReport(estimator, copies, trials, mean, variance, stderr, seed)
