"""Large-n behaviour of the optimal n-copy estimate.

Regular states: n * D*_n approaches 1/(4 D) and the rescaled convolution
power approaches a Gaussian.  The sinc state: n^2 * D*_n approaches a^2/2
and the rescaled outcome density approaches K0(|x|/2a)^2 / (pi^2 a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InapplicableError, ParameterError, WindowError
from .optimal import d_star_detail
from .special import DENSITY_FLOOR, central_derivative, k0
from .spectral import (
    conv_power,
    conv_power_derivative,
    default_sinc_power_grid,
    fourier_transform,
    sinc_power_density,
)
from .states import DensityGrid, GridSpec, WavefunctionGrid, density, moments


@dataclass(frozen=True)
class SweepRow:
    copies: int
    raw: float
    scaled: float
    limit_target: float
    flag: str = ""
    companion: float = math.nan

    def as_tuple(self):
        return (self.copies, self.raw, self.scaled, self.limit_target, self.flag)


SWEEP_COLUMNS = ("n", "raw", "scaled", "limit_target", "flag")


def _check_n_list(n_list):
    ns = [int(copies) for copies in n_list]
    if not ns or any(copies < 1 for copies in ns):
        raise ParameterError("n_list must be a nonempty list of positive integers")
    return sorted(set(ns))


# --------------------------------------------------------------------------
# regular case

def theorem3_sweep(psi: WavefunctionGrid, n_list) -> list[SweepRow]:
    """Rows (n, D*_n, n D*_n, 1/(4D)).  The target is 0 when D is infinite."""
    dens = density(psi)
    stats = moments(dens)
    target = 1.0 / (4.0 * stats.variance) if stats.finite else 0.0
    rows = []
    for copies in _check_n_list(n_list):
        detail = d_star_detail(conv_power(dens, copies))
        flag = "diverged" if detail.diverged else ""
        rows.append(SweepRow(copies, detail.value, copies * detail.value, target, flag))
    return rows


def approaches_monotonically(rows: list[SweepRow]) -> bool:
    """True when |scaled - limit_target| does not increase along the sweep (up to 1e-9)."""
    gaps = [abs(row.scaled - row.limit_target) for row in rows]
    return all(later <= earlier * (1 + 1e-9) + 1e-9 for earlier, later in zip(gaps, gaps[1:]))


def _standard_normal(points):
    return np.exp(-0.5 * points * points) / math.sqrt(2.0 * math.pi)


CLT_HALF_WIDTH = 10.0
CLT_POINTS = 4096


def clt_l1(dens: DensityGrid, copies: int) -> float:
    """L1 distance between the standardized p^{*n} and the standard normal density.

    p^{*n} is evaluated directly at n mean + sqrt(n) sigma u on a fixed u-grid.
    """
    stats = moments(dens)
    if not (stats.finite and stats.variance > 0):
        raise InapplicableError("the local limit theorem needs a finite positive variance")
    scale = math.sqrt(copies * stats.variance)
    unit_grid = GridSpec.symmetric(CLT_HALF_WIDTH, CLT_POINTS)
    grid = unit_grid.scaled(scale).shifted(copies * stats.mean)
    scaled_dens = conv_power(dens, copies, out_grid=grid) if copies > 1 else dens
    values = scaled_dens.values if copies > 1 else scaled_dens.interpolate(grid.nodes)
    return unit_grid.integrate(np.abs(scale * values - _standard_normal(unit_grid.nodes)))


# --------------------------------------------------------------------------
# score identity for two copies

def bump(points, radius: float = 1.0):
    """exp(-1 / (1 - (x/r)^2)) inside |x| < r, zero outside."""
    reduced = np.asarray(points, dtype=float) / radius
    out = np.zeros_like(reduced)
    inside = np.abs(reduced) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - reduced[inside] ** 2))
    return out


WEIGHTS = {"bump": bump}


@dataclass(frozen=True)
class ScoreCheckReport:
    weight: str
    lambda_window: tuple
    residual_f: float
    residual_identity: float
    inner_at_center: float


def score_decomposition_check(dens: DensityGrid, weight: str = "bump", window=(-1.0, 1.0)) -> ScoreCheckReport:
    """Check (p*p)' = int 1/2 [p'(t) p(l - t) + p(t) p'(l - t)] dt on a window.

    The left side is the spectral derivative of the convolution square; the
    right side is a direct convolution sum of finite-difference derivatives.
    ``residual_identity`` is the largest mismatch relative to max |(p*p)'|,
    ``residual_f`` the mismatch integrated against c(l)^2 / (p*p)(l) with c
    the named weight centered on the window.
    """
    if weight not in WEIGHTS:
        raise ParameterError(f"unknown weight {weight!r}")
    lo, hi = (float(val) for val in window)
    if not lo < hi:
        raise WindowError("window must have lo < hi")
    grid = dens.grid
    step = grid.spacing
    start = 2.0 * grid.lambda_min
    total = 2 * grid.n_points - 1
    m0 = max(0, math.ceil((lo - start) / step - 1e-9))
    m1 = min(total - 1, math.floor((hi - start) / step + 1e-9))
    count = m1 - m0 + 1
    if count < 5:
        raise WindowError("window holds too few grid nodes")
    size = 1 << max(4, math.ceil(math.log2(count)))
    if m0 + size > total:
        raise WindowError("window reaches the edge of the convolution range")
    target = GridSpec(start + m0 * step, start + (m0 + size - 1) * step, size)
    lam = target.nodes[:count]

    lhs = conv_power_derivative(dens, 2, target)[:count]
    dp = central_derivative(dens.values, step)
    rhs_full = 0.5 * step * (np.convolve(dp, dens.values) + np.convolve(dens.values, dp))
    p2 = step * np.convolve(dens.values, dens.values)[m0:m1 + 1]
    rhs = rhs_full[m0:m1 + 1]
    if np.any(p2 < DENSITY_FLOOR):
        raise WindowError("two-copy density falls below the floor inside the window")

    inner = lhs - rhs
    residual_identity = float(np.max(np.abs(inner)) / np.max(np.abs(lhs)))
    mid, radius = 0.5 * (lo + hi), 0.5 * (hi - lo)
    weight_vals = WEIGHTS[weight](lam - mid, radius)
    integrand = weight_vals ** 2 / p2 * inner
    residual_f = abs(float(np.trapezoid(integrand, lam)))
    center = int(np.argmin(np.abs(lam - mid)))
    return ScoreCheckReport(weight, (lo, hi), residual_f, residual_identity, float(inner[center]))


# --------------------------------------------------------------------------
# sinc case

def pitman_midrange_variance(half_width: float, copies: int) -> float:
    """Exact variance 2a^2 / ((n+1)(n+2)) of the sample midrange for U(-a, a)."""
    return 2.0 * half_width * half_width / ((copies + 1) * (copies + 2))


def irregular_sweep(half_width: float, n_list) -> list[SweepRow]:
    """Rows (n, D*_n, n^2 D*_n, a^2/2); ``companion`` is Pitman variance / D*_n."""
    if not half_width > 0:
        raise ParameterError("a must be positive")
    rows = []
    for copies in _check_n_list(n_list):
        detail = d_star_detail(sinc_power_density(half_width, copies))
        flag = "diverged" if detail.diverged else ""
        ratio = pitman_midrange_variance(half_width, copies) / detail.value if detail.value > 0 else math.inf
        target = 0.5 * half_width * half_width
        rows.append(SweepRow(copies, detail.value, copies * copies * detail.value, target, flag, ratio))
    return rows


def limit_density(half_width: float, points) -> np.ndarray:
    """K0(|x|/2a)^2 / (pi^2 a), the normalized limit of the rescaled outcome density."""
    return k0(np.abs(np.asarray(points, dtype=float)) / (2.0 * half_width)) ** 2 / (math.pi ** 2 * half_width)


def limit_density_mass(half_width: float) -> float:
    """Integral of ``limit_density`` by trapezoid in log(x) (exponentially convergent)."""
    log_grid = GridSpec(-40.0, math.log(60.0), 4096)
    reduced = np.exp(log_grid.nodes)  # |x| / 2a
    integrand = limit_density(half_width, 2.0 * half_width * reduced) * reduced
    return 2.0 * 2.0 * half_width * log_grid.integrate(integrand)


LIMIT_HALF_WIDTH = 40.0
LIMIT_POINTS = 2 ** 15


def limit_law_l1(half_width: float, copies: int) -> float:
    """L1 distance between (1/n) p*_n(x/n) and the K0^2 limit density.

    With q(mu) = n p^{*n}(n mu), the rescaled outcome density is
    (1/2pi)|int exp(i mu x) sqrt(q)|^2.  Writing sqrt(q) = sqrt(p0) + r with
    p0 the Cauchy limit, the transform of sqrt(p0) is 2 K0(|x|/2a)/sqrt(2 pi a)
    exactly and only the fast-decaying remainder r is transformed numerically.
    """
    if not half_width > 0:
        raise ParameterError("a must be positive")
    mu = default_sinc_power_grid(half_width, 1)
    scaled_dens = sinc_power_density(half_width, copies, mu.scaled(copies)).values * copies
    b2 = 1.0 / (4.0 * half_width * half_width)
    sqrt_p0 = 1.0 / np.sqrt(2.0 * math.pi * half_width * (mu.nodes ** 2 + b2))
    points = GridSpec.symmetric(LIMIT_HALF_WIDTH * half_width, LIMIT_POINTS)
    exact = 2.0 * k0(np.abs(points.nodes) / (2.0 * half_width)) / math.sqrt(2.0 * math.pi * half_width)
    remainder = fourier_transform(np.sqrt(scaled_dens) - sqrt_p0, mu, 1, points).real
    return points.integrate(np.abs(remainder * (2.0 * exact + remainder))) / (2.0 * math.pi)


@dataclass(frozen=True)
class TailRow:
    distance: float
    limit: float
    laplace: float
    ratio: float


def tail_comparison(half_width: float, x_list) -> list[TailRow]:
    """K0^2 limit tail against the Laplace tail (1/2a) exp(-|x|/a) of the midrange."""
    xs = [float(val) for val in x_list]
    if any(val < 4.0 * half_width for val in xs):
        raise DomainError("tail comparison needs x >= 4a")
    rows = []
    for val in xs:
        lim = float(limit_density(half_width, val))
        lap = math.exp(-val / half_width) / (2.0 * half_width)
        rows.append(TailRow(val, lim, lap, lim / lap))
    return rows


def tail_claim_holds(rows: list[TailRow]) -> bool:
    ordered = sorted(rows, key=lambda row: row.distance)
    return all(row.ratio < 1.0 for row in ordered) and all(
        later.ratio < earlier.ratio for earlier, later in zip(ordered, ordered[1:]))


# --------------------------------------------------------------------------
# Fourier-side bounds

@dataclass(frozen=True)
class AppendixReport:
    copies: int
    l1_delta_f: float
    sup_delta_p: float
    eps_n: float
    tail_bound_ok: bool
    min_delta_f: float
    probes: tuple = ()


PROBE_LAMBDAS = (1.0, 2.0, 5.0)
APPENDIX_STEPS_PER_A = 400


def delta_f(half_width: float, copies: int, points) -> np.ndarray:
    """exp(-|x|/2a) - (1 - |x|/(2an))_+^n."""
    dist = np.abs(np.asarray(points, dtype=float))
    product_form = np.clip(1.0 - dist / (2.0 * half_width * copies), 0.0, None) ** copies
    return np.exp(-dist / (2.0 * half_width)) - product_form


def appendix_bounds(half_width: float, copies: int, probes=PROBE_LAMBDAS) -> AppendixReport:
    """l1 norm of delta f_n, sup of delta p_n, eps_n = int |delta f_n''| and the tail bound.

    Works on x >= 0 (delta f_n is even).  The second derivative is taken by
    second differences on a grid with nodes at 0 and at the support edge 2an;
    the two nodes at those points are excluded and the jumps of delta f_n'
    across them are added explicitly.
    """
    if not half_width > 0:
        raise ParameterError("a must be positive")
    if copies < 2:
        raise ParameterError("n must be at least 2")
    edge = 2.0 * half_width * copies
    per_unit = APPENDIX_STEPS_PER_A / half_width
    step = edge / math.ceil(edge * per_unit)
    x_max = max(edge + 10.0 * half_width, 80.0 * half_width)
    k_max = math.ceil(x_max / step)
    points = step * np.arange(k_max + 1)
    k_edge = int(round(edge / step))
    df = delta_f(half_width, copies, points)
    weights = np.full(points.size, step)
    weights[0] = weights[-1] = 0.5 * step

    l1 = 2.0 * float(np.dot(weights, np.abs(df)))

    second = (df[2:] - 2.0 * df[1:-1] + df[:-2]) / (step * step)
    interior = np.ones(second.size, dtype=bool)
    interior[k_edge - 1] = False  # node at x = 2an
    wi = np.full(second.size, step)
    eps = 2.0 * float(np.dot(wi[interior], np.abs(second[interior])))
    # one-sided derivatives of delta f_n' at 0 and at the support edge
    jump0 = 2.0 * abs((-3 * df[0] + 4 * df[1] - df[2]) / (2 * step))
    left = (3 * df[k_edge] - 4 * df[k_edge - 1] + df[k_edge - 2]) / (2 * step)
    right = (-3 * df[k_edge] + 4 * df[k_edge + 1] - df[k_edge + 2]) / (2 * step)
    eps += jump0 + 2.0 * abs(right - left)

    # delta p_n(lambda) = (1/pi) int_0^inf cos(lambda x) delta f_n(x) dx
    lam_grid = GridSpec(0.0, 10.0, 1024)
    dp_grid = _cosine_transform(points, weights * df, lam_grid.nodes)
    sup = float(np.max(np.abs(dp_grid)))
    probe_values = _cosine_transform(points, weights * df, np.asarray(probes, dtype=float))
    ok = all(abs(val) <= eps / lam ** 2 for val, lam in zip(probe_values, probes))
    return AppendixReport(copies, l1, sup, float(eps), bool(ok), float(df.min()),
                          tuple((float(lam), float(val)) for lam, val in zip(probes, probe_values)))


def _cosine_transform(points, weighted, lams) -> np.ndarray:
    out = np.empty(len(lams))
    for index, lam in enumerate(lams):
        out[index] = np.dot(np.cos(lam * points), weighted) / math.pi
    return out
