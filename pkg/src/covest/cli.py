"""Command-line front end: ``covest <command> [flags]``.

Every artifact carries the effective configuration and the library version
in its metadata.  Numeric bodies are reproducible bit-for-bit; the only
varying field is the timestamp, dropped by ``--no-meta``.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field

from . import __version__, asymptotics, io, optimal, semiclassical, states, verify
from .errors import CovestError

COMMANDS = ("state", "optimal", "theorem3", "compare", "pitman-mc", "limitlaw", "appendix", "verify")
SWEEP_COMMANDS = ("theorem3", "pitman-mc", "limitlaw", "appendix")
FORMATS = ("csv", "json")

PRESET_DEFAULTS = {
    "gaussian": {"sigma": 1.0},
    "sinc": {"a": 1.0},
    "gaussian_mixture": {"mu1": -1.0, "mu2": 2.0, "w": 0.5},
}
DEFAULT_PRESET = {"compare": "mixture", "pitman-mc": "sinc", "limitlaw": "sinc", "appendix": "sinc"}
DEFAULT_N = {
    "theorem3": (1, 2, 4, 8, 16),
    "pitman-mc": (1, 2, 5, 10),
    "limitlaw": (16, 64, 256),
    "appendix": (10, 30, 100),
}
DEFAULT_TRIALS = {"pitman-mc": 10_000}
DEFAULT_LAMBDAS = (-2.0, -1.0, -0.5, -0.1, 0.1, 0.5, 1.0, 2.0)

# config keys and the type each must have in a JSON config file
CONFIG_KEYS = {
    "command": str, "preset": str, "sigma": float, "a": float, "mu1": float, "mu2": float, "w": float,
    "grid": list, "n": list, "trials": int, "seed": int, "out": str, "format": str, "no_meta": bool,
    "lambdas": list, "suite": str,
}


class ConfigError(CovestError):
    """Invalid configuration; the message names the offending key."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


@dataclass
class RunConfig:
    command: str
    preset: str = "gaussian"
    params: dict = field(default_factory=dict)
    grid: tuple | None = None
    n_list: tuple = ()
    trials: int = 0
    seed: int | None = None
    out: str | None = None
    format: str = "csv"
    no_meta: bool = False
    lambdas: tuple = DEFAULT_LAMBDAS
    suite: str = "core"

    def echo(self) -> dict:
        """The effective configuration as embedded in artifacts (output path excluded)."""
        return {
            "command": self.command, "preset": self.preset, "params": dict(self.params),
            "grid": list(self.grid) if self.grid else None, "n": list(self.n_list),
            "trials": self.trials, "seed": self.seed, "format": self.format,
            "lambdas": list(self.lambdas) if self.command == "optimal" else None,
            "suite": self.suite if self.command == "verify" else None,
        }


# --------------------------------------------------------------------------
# parsing

def _float_list(text: str) -> list[float]:
    return [float(val) for val in text.split(",") if val.strip()]


def _int_list(text: str) -> list[int]:
    return [int(val) for val in text.split(",") if val.strip()]


def _grid_arg(text: str) -> list:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected MIN,MAX,N")
    return [float(parts[0]), float(parts[1]), int(parts[2])]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="covest", description="Optimal covariant shift estimation experiments.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--preset", help="g|gaussian, sinc or mixture")
    parser.add_argument("--sigma", type=float)
    parser.add_argument("--a", type=float)
    parser.add_argument("--mu1", type=float)
    parser.add_argument("--mu2", type=float)
    parser.add_argument("--w", type=float)
    parser.add_argument("--grid", type=_grid_arg, metavar="MIN,MAX,N")
    parser.add_argument("--n", type=_int_list, metavar="LIST")
    parser.add_argument("--trials", type=int)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--out", metavar="PATH")
    parser.add_argument("--format", choices=FORMATS)
    parser.add_argument("--config", metavar="PATH")
    parser.add_argument("--no-meta", dest="no_meta", action="store_const", const=True,
                        help="omit the timestamp from artifact metadata")
    parser.add_argument("--lambdas", type=_float_list, metavar="LIST", help="shifts for the optimal command")
    parser.add_argument("--suite", choices=sorted(verify.SUITES))
    return parser


def _read_config_file(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config", "top level must be a JSON object")
    for key, value in data.items():
        expected = CONFIG_KEYS.get(key)
        if expected is None:
            raise ConfigError(key, "unknown configuration key")
        ok = isinstance(value, expected) and not (expected is int and isinstance(value, bool))
        if expected is float:
            ok = isinstance(value, (int, float)) and not isinstance(value, bool)
        if not ok:
            raise ConfigError(key, f"expected {expected.__name__}, got {type(value).__name__}")
    return data


def load_config(args: argparse.Namespace) -> RunConfig:
    """Merge the JSON config file (if any) with flags; flags win."""
    merged = _read_config_file(args.config) if args.config else {}
    if "command" in merged and merged["command"] != args.command:
        raise ConfigError("command", f"config file is for {merged['command']!r}, not {args.command!r}")
    for key in CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value

    command = args.command
    try:
        preset = states.canonical_preset(merged.get("preset", DEFAULT_PRESET.get(command, "gaussian")))
    except CovestError as exc:
        raise ConfigError("preset", str(exc)) from exc
    if preset == "custom":
        raise ConfigError("preset", "custom states are not available from the command line")

    params = dict(PRESET_DEFAULTS[preset])
    for key in params:
        if key in merged:
            params[key] = float(merged[key])
    for key, value in params.items():
        if not math.isfinite(value):
            raise ConfigError(key, "must be finite")

    grid = merged.get("grid")
    if grid is not None:
        if len(grid) != 3:
            raise ConfigError("grid", "expected [min, max, n_points]")
        grid = (float(grid[0]), float(grid[1]), int(grid[2]))

    n_list = tuple(int(val) for val in merged.get("n", DEFAULT_N.get(command, ())))
    if command in SWEEP_COMMANDS and not n_list:
        raise ConfigError("n", "sweep commands need a nonempty n list")
    if any(val < 1 for val in n_list):
        raise ConfigError("n", "entries must be positive integers")

    trials = int(merged.get("trials", DEFAULT_TRIALS.get(command, 0)))
    if trials < 0:
        raise ConfigError("trials", "must be nonnegative")
    seed = merged.get("seed")
    if trials > 0 and seed is None:
        raise ConfigError("seed", "a seed is required whenever trials > 0")

    default_format = "json" if command in ("appendix", "verify") else "csv"
    fmt = merged.get("format", default_format)
    if fmt not in FORMATS:
        raise ConfigError("format", f"expected one of {', '.join(FORMATS)}")

    lambdas = tuple(float(val) for val in merged.get("lambdas", DEFAULT_LAMBDAS))
    if command == "optimal" and not lambdas:
        raise ConfigError("lambdas", "need at least one shift")

    suite = merged.get("suite", "core")
    if suite not in verify.SUITES:
        raise ConfigError("suite", f"unknown suite {suite!r}")

    return RunConfig(command, preset, params, grid, n_list, trials, None if seed is None else int(seed),
                     merged.get("out"), fmt, bool(merged.get("no_meta", False)), lambdas, suite)


# --------------------------------------------------------------------------
# commands

def _state(cfg: RunConfig):
    order = {"gaussian": ("sigma",), "sinc": ("a",), "gaussian_mixture": ("mu1", "mu2", "w")}[cfg.preset]
    grid = states.GridSpec(*cfg.grid) if cfg.grid else None
    psi = states.make_state(cfg.preset, [cfg.params[key] for key in order], grid)
    # the mixture is centered so its generator has mean zero
    return states.center(psi) if cfg.preset == "gaussian_mixture" else psi


def _cmd_state(cfg):
    psi = _state(cfg)
    extra = {"renorm_factor": psi.renorm_factor, "truncated_mass": psi.truncated_mass}
    return states.STATE_COLUMNS, states.state_rows(psi), extra


def _cmd_optimal(cfg):
    report = optimal.uncertainty_report(_state(cfg), cfg.lambdas)
    extra = {"d_star": report.d_star, "generator_variance": report.generator_variance,
             "heisenberg_product": report.heisenberg_product, "violations": report.violations}
    return optimal.REPORT_COLUMNS, report.rows(), extra


def _cmd_theorem3(cfg):
    rows = asymptotics.theorem3_sweep(_state(cfg), cfg.n_list)
    extra = {"monotone": asymptotics.approaches_monotonically(rows)}
    return asymptotics.SWEEP_COLUMNS, [row.as_tuple() for row in rows], extra


COMPARE_COLUMNS = ("preset", "generator_variance", "fisher_information", "cramer_rao_bound",
                   "quantum_asymptote", "phase_penalty", "modulus_term", "gap")


def _cmd_compare(cfg):
    comp = semiclassical.semiclassical_comparison(_state(cfg))
    row = (cfg.preset, comp.generator_variance, comp.fisher_information, comp.cramer_rao_bound,
           comp.quantum_asymptote, comp.phase_penalty, comp.modulus_term, comp.gap)
    return COMPARE_COLUMNS, [row], {}


PITMAN_COLUMNS = ("n", "estimator", "trials", "mean", "variance", "stderr_of_variance", "reference")


def _cmd_pitman_mc(cfg):
    """Midrange on U(-a, a) for sinc (reference: exact variance); otherwise the
    numeric Pitman estimator on the optimal outcome density (reference: 1/(nI))."""
    if cfg.preset == "sinc":
        half_width = cfg.params["a"]
        dens = semiclassical.uniform_density(half_width)
        estimator = "pitman_midrange"

        def reference(copies):
            return asymptotics.pitman_midrange_variance(half_width, copies)
    else:
        dens = optimal.optimal_density(states.density(_state(cfg)))
        info = semiclassical.fisher_information(dens)
        estimator = "pitman_numeric"

        def reference(copies):
            return 1.0 / (copies * info) if info > 0 else math.nan
    rows = []
    for copies in cfg.n_list:
        rep = semiclassical.mc_variance(estimator, dens, copies, cfg.trials, cfg.seed)
        rows.append((copies, estimator, rep.trials, rep.mean, rep.variance, rep.stderr_of_variance,
                     reference(copies)))
    return PITMAN_COLUMNS, rows, {}


LIMITLAW_COLUMNS = asymptotics.SWEEP_COLUMNS + ("pitman_ratio", "l1_limit_law")


def _cmd_limitlaw(cfg):
    if cfg.preset != "sinc":
        raise ConfigError("preset", "limitlaw applies to the sinc preset only")
    half_width = cfg.params["a"]
    rows = [row.as_tuple() + (row.companion, asymptotics.limit_law_l1(half_width, row.copies))
            for row in asymptotics.irregular_sweep(half_width, cfg.n_list)]
    return LIMITLAW_COLUMNS, rows, {"limit_mass": asymptotics.limit_density_mass(half_width)}


APPENDIX_COLUMNS = ("n", "l1_delta_f", "sup_delta_p", "eps_n", "tail_bound_ok", "min_delta_f", "probes")


def _cmd_appendix(cfg):
    if cfg.preset != "sinc":
        raise ConfigError("preset", "appendix applies to the sinc preset only")
    half_width = cfg.params["a"]
    rows = []
    for copies in cfg.n_list:
        if copies < 2:
            raise ConfigError("n", "appendix bounds need n >= 2")
        row = asymptotics.appendix_bounds(half_width, copies)
        probes = [list(pair) for pair in row.probes]
        rows.append((row.copies, row.l1_delta_f, row.sup_delta_p, row.eps_n, row.tail_bound_ok,
                     row.min_delta_f, probes))
    return APPENDIX_COLUMNS, rows, {}


VERIFY_COLUMNS = ("name", "module", "passed", "detail", "seconds")


def _cmd_verify(cfg):
    results = verify.run_suite(cfg.suite)
    rows = [(row.name, row.module, row.passed, row.detail, row.seconds) for row in results]
    failed = sum(not row.passed for row in results)
    return VERIFY_COLUMNS, rows, {"checks": len(results), "failed": failed}


DISPATCH = {
    "state": _cmd_state, "optimal": _cmd_optimal, "theorem3": _cmd_theorem3, "compare": _cmd_compare,
    "pitman-mc": _cmd_pitman_mc, "limitlaw": _cmd_limitlaw, "appendix": _cmd_appendix, "verify": _cmd_verify,
}


def _csv_rows(rows):
    # nested values (appendix probes) become compact JSON inside a quoted field
    out = []
    for row in rows:
        cells = []
        for val in row:
            if isinstance(val, (list, tuple)):
                val = '"' + json.dumps(val, separators=(",", ":")).replace('"', '""') + '"'
            elif isinstance(val, str) and ("," in val or '"' in val):
                val = '"' + val.replace('"', '""') + '"'
            cells.append(val)
        out.append(cells)
    return out


def execute(cfg: RunConfig) -> tuple[str, int]:
    """Run one command and return (rendered artifact, exit code)."""
    columns, rows, extra = DISPATCH[cfg.command](cfg)
    meta = io.build_meta(cfg.echo(), __version__, extra, timestamp=not cfg.no_meta)
    if cfg.format == "csv":
        rows = _csv_rows(rows)
    text = io.render(cfg.format, columns, rows, meta)
    code = 1 if cfg.command == "verify" and extra["failed"] else 0
    return text, code


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with exit status 2
        return int(exc.code or 0)
    try:
        cfg = load_config(args)
        text, code = execute(cfg)
        io.write_text(text, cfg.out, stdout)
    except ConfigError as exc:
        parser.print_usage(stderr)
        print(f"covest: config error: {exc}", file=stderr)
        return 2
    except (CovestError, OSError) as exc:
        print(f"covest: error: {exc}", file=stderr)
        return 2
    return code


def main() -> None:
    sys.exit(run())
