"""Special functions and grid primitives shared by the other modules.

Contents: the Macdonald function K0, finite-difference derivatives on uniform
grids (including the regularized derivative of a square-root density), and a
composite trapezoid rule that reports its own refinement error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from numpy.polynomial import chebyshev

from .errors import DomainError, GridError

if TYPE_CHECKING:
    from .states import DensityGrid

EULER_GAMMA = 0.57721566490153286061

# Density values below this are treated as zeros of p.
DENSITY_FLOOR = 1e-12

K0_CROSSOVER = 2.0

# Chebyshev coefficients of exp(x) * sqrt(x) * K0(x) in t = 4/x - 1, x >= 2.
# Generated at 40 digits; truncation error of the series is below 1e-19.
_K0_SCALED_CHEB = np.array([
    1.2201515410329777, -3.1448101311964501e-2, 1.5698838857300534e-3,
    -1.2849549581627803e-4, 1.3949813718876499e-5, -1.8317555227191195e-6,
    2.7668136394450151e-7, -4.6604898976879477e-8, 8.5740340174142261e-9,
    -1.6975345093890615e-9, 3.5773972814003284e-10, -7.957489244477397e-11,
    1.8559491149549266e-11, -4.5145978833745192e-12, 1.1403405882073442e-12,
    -2.9800969231481784e-13, 8.0328907750683744e-14, -2.2275133267462964e-14,
    6.340076476276646e-15, -1.8485933779209072e-15, 5.5120559994043334e-16,
    -1.6782311257549006e-16, 5.2103917776435541e-17, -1.6475805939842633e-17,
    5.3004337711773358e-18, -1.7331712005821e-18, 5.7551092028827294e-19,
    -1.9390956053183555e-19, 6.624610534536147e-20, -2.2932197170560118e-20,
])

_SERIES_TERMS = 30


def _k0_series(arg):
    # K0 = -(ln(x/2) + gamma) I0(x) + sum_k H_k (x^2/4)^k / (k!)^2
    quarter_sq = 0.25 * arg * arg
    term = np.ones_like(arg)
    i0 = np.ones_like(arg)
    tail = np.zeros_like(arg)
    harmonic = 0.0
    for order in range(1, _SERIES_TERMS):
        term = term * quarter_sq / (order * order)
        harmonic += 1.0 / order
        i0 = i0 + term
        tail = tail + harmonic * term
    return -(np.log(0.5 * arg) + EULER_GAMMA) * i0 + tail


def _k0_scaled_asymptotic(arg):
    """exp(x) * sqrt(x) * K0(x) for x >= 2."""
    return chebyshev.chebval(4.0 / arg - 1.0, _K0_SCALED_CHEB)


def k0(arg):
    """Modified Bessel function of the second kind, order zero.

    Uses the logarithmic power series up to 2 and a Chebyshev
    expansion of the exponentially scaled function above that.  Relative
    accuracy is about 1e-15 on both branches.

    Raises
    ------
    DomainError
        If any argument is ``<= 0``.
    """
    arr = np.asarray(arg, dtype=float)
    if np.any(~(arr > 0)):
        raise DomainError("k0 is defined for x > 0 only")
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    out = np.empty_like(arr)
    small = arr <= K0_CROSSOVER
    if np.any(small):
        out[small] = _k0_series(arr[small])
    large = ~small
    if np.any(large):
        xl = arr[large]
        out[large] = np.exp(-xl) / np.sqrt(xl) * _k0_scaled_asymptotic(xl)
    return float(out[0]) if scalar else out


def k0_branch_values(arg: float) -> tuple[float, float]:
    """Both branch formulas evaluated at the same point (seam diagnostics)."""
    xa = np.array([float(arg)])
    series = float(_k0_series(xa)[0])
    asym = float((np.exp(-xa) / np.sqrt(xa) * _k0_scaled_asymptotic(xa))[0])
    return series, asym


def trapezoid_weights(count: int, step: float) -> np.ndarray:
    weights = np.full(count, step)
    weights[0] = weights[-1] = 0.5 * step
    return weights


def central_derivative(values: np.ndarray, step: float) -> np.ndarray:
    """First derivative on a uniform grid.

    Fourth-order central stencil in the interior, second-order central one
    node in from each end, second-order one-sided at the ends.
    """
    vals = np.asarray(values)
    if vals.size < 5:
        raise GridError("need at least 5 nodes for the derivative stencil")
    deriv = np.empty_like(vals)
    deriv[2:-2] = (vals[:-4] - 8.0 * vals[1:-3] + 8.0 * vals[3:-1] - vals[4:]) / (12.0 * step)
    deriv[1] = (vals[2] - vals[0]) / (2.0 * step)
    deriv[-2] = (vals[-1] - vals[-3]) / (2.0 * step)
    deriv[0] = (-3.0 * vals[0] + 4.0 * vals[1] - vals[2]) / (2.0 * step)
    deriv[-1] = (3.0 * vals[-1] - 4.0 * vals[-2] + vals[-3]) / (2.0 * step)
    return deriv


def sqrt_density_derivative(dens: DensityGrid, floor: float = DENSITY_FLOOR) -> np.ndarray:
    """Derivative of sqrt(p) on the density's grid.

    Central differences of sqrt(p) everywhere the density exceeds ``floor``.
    At nodes below the floor the larger of the two one-sided slopes is used,
    which stays bounded at corner zeros such as those of |sin(x)|/x.
    """
    return sqrt_derivative_values(dens.values, dens.grid.spacing, floor)


def sqrt_derivative_values(values, step: float, floor: float = DENSITY_FLOOR) -> np.ndarray:
    """``sqrt_density_derivative`` for raw nonnegative samples at the given spacing."""
    values = np.asarray(values, dtype=float)
    root = np.sqrt(np.clip(values, 0.0, None))
    deriv = central_derivative(root, step)
    low = np.flatnonzero(values < floor)
    low = low[(low > 0) & (low < root.size - 1)]
    if low.size:
        fwd = (root[low + 1] - root[low]) / step
        bwd = (root[low] - root[low - 1]) / step
        deriv[low] = np.where(np.abs(fwd) >= np.abs(bwd), fwd, bwd)
    return deriv


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    refinement_delta: float
    converged: bool


def quad(values: np.ndarray, grid, rtol: float = 1e-6, atol: float = 1e-12) -> QuadratureResult:
    """Composite trapezoid rule with a refinement estimate.

    ``grid`` is a GridSpec or a bare node spacing.  The estimate compares
    against the same rule applied to every other node (a grid twice as coarse;
    with an even node count the final interval keeps the fine spacing).
    """
    step = float(getattr(grid, "spacing", grid))
    vals = np.asarray(values, dtype=float)
    if vals.size < 3:
        raise GridError("quadrature needs at least 3 nodes")
    fine = float(np.dot(trapezoid_weights(vals.size, step), vals))
    if vals.size % 2:
        coarse_vals, tail = vals[::2], 0.0
    else:  # the last interval has no coarse counterpart; keep it at the fine spacing
        coarse_vals, tail = vals[:-1:2], 0.5 * step * (vals[-2] + vals[-1])
    coarse = float(np.dot(trapezoid_weights(coarse_vals.size, 2.0 * step), coarse_vals)) + tail
    delta = abs(fine - coarse)
    return QuadratureResult(fine, delta, delta <= rtol * abs(fine) + atol)


def relative_change(first: float, second: float) -> float:
    scale = max(abs(first), abs(second))
    if scale == 0.0:
        return 0.0
    if math.isinf(scale):
        return math.inf
    return abs(first - second) / scale
