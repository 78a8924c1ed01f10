"""Bundled invariant checks, run by ``covest verify --suite core``.

Each check returns (passed, detail).  The suite is meant to run in well
under a minute; Monte Carlo checks use small trial counts and fixed seeds.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import asymptotics, optimal, semiclassical, special, spectral, states


@dataclass(frozen=True)
class CheckResult:
    name: str
    module: str
    passed: bool
    detail: str
    seconds: float


def _gaussian(sigma=1.0, grid=None):
    return states.make_state("gaussian", [sigma], grid)


def _mixture(weight=0.5, grid=None):
    return states.center(states.make_state("gaussian_mixture", [-1.0, 2.0, weight], grid))


# --------------------------------------------------------------------------
# states

def check_normalization():
    worst = 0.0
    for psi in (_gaussian(), _gaussian(2.0), _mixture(), states.make_state("sinc", [1.0])):
        dens = states.density(psi)
        worst = max(worst, abs(dens.grid.integrate(dens.values) - 1.0))
        if np.any(dens.values < 0):
            return False, f"negative density for {psi.preset}"
    return worst <= 1e-8, f"max |mass - 1| = {worst:.2e}"


def check_phase_invariance():
    psi = _mixture()
    twisted = psi.with_phase(lambda lam: 0.7 * lam ** 2 - np.sin(3 * lam))
    diff = float(np.max(np.abs(states.density(psi).values - states.density(twisted).values)))
    return diff <= 1e-14, f"max density change {diff:.2e}"


def check_centering():
    mean = states.moments(states.density(_mixture())).mean
    return abs(mean) <= 1e-8, f"mean after centering {mean:.2e}"


def check_variance_doubling():
    narrow = states.moments(states.density(_gaussian(1.0, states.GridSpec.symmetric(8, 4096)))).variance
    wide = states.moments(states.density(_gaussian(1.0, states.GridSpec.symmetric(16, 8192)))).variance
    rel = abs(narrow - wide) / wide
    return rel <= 1e-6, f"relative change {rel:.2e}"


# --------------------------------------------------------------------------
# spectral

def check_char_fn_bounds():
    dens = states.density(_mixture())
    points = states.GridSpec.symmetric(6.0, 1024)
    charf = spectral.char_fn(dens, points).values
    herm = float(np.max(np.abs(charf - np.conj(charf[::-1]))))
    sup = float(np.max(np.abs(charf)))
    f0 = spectral.char_fn(dens, states.GridSpec(0.0, 1.0, 16)).values[0]
    ok = herm <= 1e-8 and sup <= 1 + 1e-8 and abs(f0 - 1) <= 1e-8
    return ok, f"hermitian {herm:.1e}, sup|f| {sup:.12f}, |f(0) - 1| {abs(f0 - 1):.1e}"


def check_semigroup():
    dens = states.density(_mixture())
    points = states.GridSpec.symmetric(2.0, 256)
    f2, f3, f5 = (spectral.char_fn(spectral.conv_power(dens, copies), points).values for copies in (2, 3, 5))
    f_dom = float(np.max(np.abs(f5 - f2 * f3)))
    q4 = spectral.conv_power(dens, 4)
    twice = spectral.conv_power(spectral.conv_power(dens, 2), 2, out_grid=q4.grid)
    l1 = q4.grid.integrate(np.abs(q4.values - twice.values))
    return f_dom <= 1e-9 and l1 <= 1e-6, f"|f^5 - f^2 f^3| {f_dom:.1e}, L1(p*4, (p*2)*2) {l1:.1e}"


def check_mean_additivity():
    dens = states.density(states.make_state("gaussian_mixture", [-1.0, 2.0, 0.5]))
    power = spectral.conv_power(dens, 4)
    stats = states.moments(power)
    ok = abs(stats.mean - 2.0) <= 1e-6 and abs(stats.variance / 13.0 - 1) <= 1e-5
    return ok, f"mean {stats.mean:.9f} (2), variance {stats.variance:.9f} (13)"


# --------------------------------------------------------------------------
# optimal

def check_uncertainty_relations():
    lams = [-2, -1, -0.5, -0.1, 0.1, 0.5, 1, 2]
    details = []
    ok = True
    for label, psi in (("gaussian 1", _gaussian()), ("gaussian 2", _gaussian(2.0)), ("mixture", _mixture())):
        report = optimal.uncertainty_report(psi, lams)
        ok &= not report.violations
        details.append(f"{label}: min product {min(report.products):.6f}, D*D {report.heisenberg_product:.6f}")
    return ok, "; ".join(details)


def check_heisenberg_equality():
    gauss_product = optimal.uncertainty_report(_gaussian(), [1.0]).heisenberg_product
    mix_product = optimal.uncertainty_report(_mixture(), [1.0]).heisenberg_product
    ok = abs(gauss_product - 0.25) <= 1e-4 and mix_product > 0.25 + 1e-4
    return ok, f"gaussian {gauss_product:.8f}, mixture {mix_product:.6f}"


def check_small_lambda_limit():
    worst = 0.0
    for psi in (_gaussian(), _gaussian(2.0), _mixture()):
        dstar_val = optimal.d_star(states.density(psi))
        worst = max(worst, abs(optimal.delta_star(psi, 1e-3) - dstar_val))
    return worst < 1e-3, f"max |Delta*(1e-3) - D*| {worst:.2e}"


def check_risk_variance():
    dens = states.density(_mixture())
    out = optimal.optimal_density(dens)
    stats = states.moments(out)
    risk = optimal.risk(out, stats.mean, optimal.RiskSpec("squared"))
    return abs(risk - stats.variance) <= 1e-5, f"risk {risk:.9f}, variance {stats.variance:.9f}"


def check_phi_phase_invariance():
    psi = _mixture()
    twisted = psi.with_phase(lambda lam: np.cos(lam) * 4)
    lams = np.array([0.3, 1.0, 2.5])
    diff = float(np.max(np.abs(optimal.optimal_char_fn(psi, lams) - optimal.optimal_char_fn(twisted, lams))))
    return diff <= 1e-12, f"max change {diff:.1e}"


# --------------------------------------------------------------------------
# semiclassical

def check_phase_additivity():
    worst = 0.0
    for psi in (_gaussian(), _mixture(), _mixture(0.3)):
        dec = semiclassical.phase_decomposition(semiclassical.position_wavefunction(psi))
        second = states.moments(states.density(psi))
        target = second.variance + second.mean ** 2
        worst = max(worst, abs(dec.total - target) / target)
    return worst <= 1e-3, f"max relative mismatch {worst:.2e}"


def check_semiclassical_gap():
    gauss = semiclassical.semiclassical_comparison(_gaussian())
    skewed = semiclassical.semiclassical_comparison(_mixture(0.3))
    ok = (abs(gauss.gap) < 1e-6 and gauss.phase_penalty < 1e-8
          and skewed.phase_penalty > 1e-3 and skewed.gap > 1e-4)
    return ok, (f"gaussian gap {gauss.gap:.1e} penalty {gauss.phase_penalty:.1e}; "
                f"mixture w=0.3 gap {skewed.gap:.5f} penalty {skewed.phase_penalty:.5f}")


def check_pitman_reductions():
    rng = np.random.default_rng(2024)
    uni = semiclassical.uniform_density(1.0)
    gauss = states.density(_gaussian())
    worst_u = worst_g = 0.0
    for _ in range(100):
        xs = rng.uniform(-1, 1, size=rng.integers(1, 6))
        worst_u = max(worst_u, abs(semiclassical.pitman_numeric(xs, uni) - semiclassical.pitman_midrange(xs)))
    for _ in range(100):
        xs = rng.normal(size=rng.integers(1, 6))
        worst_g = max(worst_g, abs(semiclassical.pitman_numeric(xs, gauss) - xs.mean()))
    ok = worst_u <= 1e-6 and worst_g <= 1e-6
    return ok, f"uniform vs midrange {worst_u:.1e}, gaussian vs mean {worst_g:.1e}"


def check_cramer_rao_ordering():
    psi = _mixture(0.3)
    p_tilde = optimal.optimal_density(states.density(psi))
    info = semiclassical.fisher_information(p_tilde)
    copies = 4
    rep = semiclassical.mc_variance("pitman_numeric", p_tilde, copies, 300, seed=7)
    bound = 1.0 / (copies * info)
    return rep.variance >= bound - 3 * rep.stderr_of_variance, (
        f"variance {rep.variance:.5f} +- {rep.stderr_of_variance:.5f}, bound {bound:.5f}")


# --------------------------------------------------------------------------
# asymptotics

def check_theorem3_lower_bound():
    rows = asymptotics.theorem3_sweep(_mixture(), [1, 2, 4, 8, 16, 64])
    worst = min(row.scaled - row.limit_target for row in rows)
    return worst >= -1e-6, f"min n D*_n - 1/(4D) = {worst:.2e}"


def check_gaussian_fixed_point():
    rows = asymptotics.theorem3_sweep(_gaussian(), [1, 2, 4, 8, 16])
    spread = max(row.scaled for row in rows) - min(row.scaled for row in rows)
    return spread <= 1e-4, f"spread of n D*_n {spread:.1e}"


def check_irregular_cauchy():
    rows = asymptotics.irregular_sweep(1.0, [128, 256, 512])
    changes = [abs(later.scaled - earlier.scaled) / earlier.scaled for earlier, later in zip(rows, rows[1:])]
    return max(changes) <= 0.05, "relative changes " + ", ".join(f"{change:.4f}" for change in changes)


def check_score_refinement():
    ratios = []
    cases = (("gaussian", [1.0], lambda grid: _gaussian(1.0, grid), (-0.5, 1.5)),
             ("gaussian_mixture", [-1.0, 2.0, 0.5], lambda grid: _mixture(0.5, grid), (-1.0, 2.5)))
    for preset, params, make, window in cases:
        base = states.default_grid(preset, params)
        fine = base.refined()
        coarse = asymptotics.score_decomposition_check(states.density(make(base)), "bump", window)
        refined = asymptotics.score_decomposition_check(states.density(make(fine)), "bump", window)
        ratios += [coarse.residual_f / refined.residual_f,
                   coarse.residual_identity / refined.residual_identity]
    return min(ratios) >= 2.0, "shrink factors " + ", ".join(f"{ratio:.1f}" for ratio in ratios)


def check_appendix_decrease():
    reps = [asymptotics.appendix_bounds(1.0, copies) for copies in (10, 30, 100)]
    sups = [row.sup_delta_p for row in reps]
    decreasing = all(later < earlier for earlier, later in zip(sups, sups[1:]))
    ok = decreasing and all(row.min_delta_f >= 0 for row in reps)
    return ok, "sup |Delta p_n| " + ", ".join(f"{sup:.5f}" for sup in sups)


# --------------------------------------------------------------------------
# special

def check_k0_seam():
    series, asym = special.k0_branch_values(special.K0_CROSSOVER)
    jump = abs(series - asym) / abs(asym)
    return jump < 1e-10, f"relative jump {jump:.1e}"


def check_k0_monotone():
    points = np.geomspace(1e-3, 50, 200)
    vals = special.k0(points)
    return bool(np.all(vals > 0) and np.all(np.diff(vals) < 0)), "positive and decreasing on [1e-3, 50]"


def check_sqrt_derivative_scaling():
    dens = states.density(_mixture())
    step = dens.grid.spacing
    base = special.sqrt_derivative_values(dens.values, step)
    scaled = special.sqrt_derivative_values(4.0 * dens.values, step, 4.0 * special.DENSITY_FLOOR)
    diff = float(np.max(np.abs(scaled - 2.0 * base)))
    return diff <= 1e-10, f"max |d sqrt(4p) - 2 d sqrt(p)| {diff:.1e}"


CORE = [
    ("states", check_normalization), ("states", check_phase_invariance), ("states", check_centering),
    ("states", check_variance_doubling),
    ("spectral", check_char_fn_bounds), ("spectral", check_semigroup), ("spectral", check_mean_additivity),
    ("optimal", check_uncertainty_relations), ("optimal", check_heisenberg_equality),
    ("optimal", check_small_lambda_limit), ("optimal", check_risk_variance),
    ("optimal", check_phi_phase_invariance),
    ("semiclassical", check_phase_additivity), ("semiclassical", check_semiclassical_gap),
    ("semiclassical", check_pitman_reductions), ("semiclassical", check_cramer_rao_ordering),
    ("asymptotics", check_theorem3_lower_bound), ("asymptotics", check_gaussian_fixed_point),
    ("asymptotics", check_irregular_cauchy), ("asymptotics", check_score_refinement),
    ("asymptotics", check_appendix_decrease),
    ("special", check_k0_seam), ("special", check_k0_monotone), ("special", check_sqrt_derivative_scaling),
]

SUITES = {"core": CORE}


def run_suite(name: str = "core") -> list[CheckResult]:
    results = []
    for module, check in SUITES[name]:
        start = time.perf_counter()
        try:
            passed, detail = check()
        except Exception as exc:  # a crashing check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(check.__name__.removeprefix("check_"), module, bool(passed), detail,
                                   round(time.perf_counter() - start, 3)))
    return results
