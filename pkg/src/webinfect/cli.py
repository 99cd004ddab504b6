"""Command-line front end: analytic reports, ensembles and parameter sweeps.

Settings come from built-in defaults, then an optional flat ``key = value``
config file, then command-line flags. Every command writes plot-ready
tables (CSV or JSON) to stdout or ``--out``.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import analytics, engine
from .errors import ModelError
from .model import ModelParams
from .popularity import Population, PopularitySpec, load_weights

DEFAULT_BETAS = (0, 1, 2, 5, 10, 15, 20, 30, 40, 50)
DEFAULT_SIGMAS = (0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0)
DEFAULT_FS = (0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
DEFAULT_NEW_BETAS = tuple(range(0, 21))
FIG8_SIGMA = 0.8


@dataclass
class ExperimentConfig:
    scenario: str = "default"
    rho: float = 0.01
    gamma: float = 0.1
    f: float = 0.0
    beta: int = 0
    sigma: float = 1.0
    n: int = 1000
    steps: int = 75
    runs: int = 1000
    burn_in: int | None = None
    seed: int = 0
    popularity_kind: str = "uniform"
    popularity_alpha: float = 1.4
    popularity_xmin: float = 1.0
    popularity_xmax: float | None = None
    popularity_file: str | None = None
    resample_per_run: bool = False
    intervention: str = "depreference"
    workers: int = 1
    betas: tuple = DEFAULT_BETAS
    sigmas: tuple = DEFAULT_SIGMAS
    fs: tuple = DEFAULT_FS
    new_betas: tuple = DEFAULT_NEW_BETAS
    new_sigmas: tuple = DEFAULT_SIGMAS
    explicit: set = field(default_factory=set, repr=False)

    def model_params(self, **changes) -> ModelParams:
        values = dict(rho=self.rho, gamma=self.gamma, f=self.f, beta=self.beta, sigma=self.sigma)
        values.update(changes)
        if self.intervention == "blacklist":
            # blacklisting removes traffic outright, which the closed forms express as sigma = 0
            values["sigma"] = 0.0
        return ModelParams(**values)

    def population(self) -> Population | PopularitySpec:
        if self.popularity_file:
            return load_weights(self.popularity_file)
        if self.popularity_kind == "uniform":
            return PopularitySpec.uniform(self.n)
        return PopularitySpec.powerlaw(
            self.n, self.popularity_alpha, self.popularity_xmin, self.popularity_xmax
        )

    def sim_config(self, params: ModelParams | None = None) -> engine.SimConfig:
        burn_in = self.burn_in if self.burn_in is not None else min(50, self.steps - 1)
        return engine.SimConfig(
            params=params if params is not None else self.model_params(),
            population=self.population(),
            steps=self.steps,
            runs=self.runs,
            burn_in=burn_in,
            seed=self.seed,
            resample_population_per_run=self.resample_per_run,
            intervention=self.intervention,
        )


# config-file key -> (ExperimentConfig attribute, parser)
def _floats(text: str) -> tuple:
    return tuple(float(v) for v in text.replace(",", " ").split())


def _ints(text: str) -> tuple:
    return tuple(int(v) for v in text.replace(",", " ").split())


def _bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


CONFIG_KEYS = {
    "scenario": ("scenario", str),
    "rho": ("rho", float),
    "gamma": ("gamma", float),
    "f": ("f", float),
    "beta": ("beta", int),
    "sigma": ("sigma", float),
    "n": ("n", int),
    "steps": ("steps", int),
    "runs": ("runs", int),
    "burn_in": ("burn_in", int),
    "seed": ("seed", int),
    "popularity.kind": ("popularity_kind", str),
    "popularity.alpha": ("popularity_alpha", float),
    "popularity.xmin": ("popularity_xmin", float),
    "popularity.xmax": ("popularity_xmax", float),
    "popularity.file": ("popularity_file", str),
    "resample_per_run": ("resample_per_run", _bool),
    "intervention": ("intervention", str),
    "workers": ("workers", int),
    "betas": ("betas", _ints),
    "sigmas": ("sigmas", _floats),
    "fs": ("fs", _floats),
    "new_betas": ("new_betas", _ints),
    "new_sigmas": ("new_sigmas", _floats),
}


class ConfigError(ModelError):
    pass


def read_config_file(path: str | Path) -> dict:
    text = Path(path).read_text()
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string("[experiment]\n" + text, source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    values = {}
    for key, raw in parser["experiment"].items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}: unknown key {key!r}")
        attr, convert = CONFIG_KEYS[key]
        try:
            values[attr] = convert(raw.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {key}: {exc}") from None
    return values


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if args.config:
        values.update(read_config_file(args.config))
    for item in fields(ExperimentConfig):
        if item.name == "explicit":
            continue
        flag = getattr(args, item.name, None)
        if flag is not None:
            values[item.name] = flag
    config = ExperimentConfig(**values)
    config.explicit = set(values)
    if config.popularity_kind not in ("uniform", "powerlaw"):
        raise ConfigError(f"popularity.kind must be uniform or powerlaw, got {config.popularity_kind!r}")
    return config


# --- output ---------------------------------------------------------------


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.15g}"
    return str(value)


def _json_value(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return float(f"{value:.15g}") if math.isfinite(value) else None
    return value


@dataclass
class Table:
    columns: list[str]
    rows: list[list]

    def to_csv(self) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_format(v) for v in row])
        return buffer.getvalue()

    def records(self) -> list[dict]:
        return [{c: _json_value(v) for c, v in zip(self.columns, row)} for row in self.rows]


def emit(tables: dict[str, Table], fmt: str, out: str | None, scenario: str) -> None:
    """Write named tables; the first is the primary one."""
    if fmt == "json":
        payload = {"scenario": scenario}
        payload.update({name: table.records() for name, table in tables.items()})
        text = json.dumps(payload, indent=2, allow_nan=False) + "\n"
        _write(out, text)
        return
    names = list(tables)
    if out is None:
        sys.stdout.write("\n".join(tables[name].to_csv() for name in names))
        return
    path = Path(out)
    _write(path, tables[names[0]].to_csv())
    for name in names[1:]:
        _write(path.with_name(f"{path.stem}.{name}{path.suffix or '.csv'}"), tables[name].to_csv())


def _write(path, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n") as handle:
        handle.write(text)


# --- commands -------------------------------------------------------------


def cmd_analytic(config: ExperimentConfig) -> dict[str, Table]:
    params = config.model_params()
    population = engine.fixed_population(config.sim_config(params))
    ratio = population.tail_ratio if population is not None else 1.0
    report = analytics.analyze(params, ratio)
    stationary = report.stationary
    columns = [
        "rho", "gamma", "f", "beta", "sigma", "tail_ratio",
        "p_infected", "p_clean", "p_flagged",
        "expected_exposure", "expected_loss", "var_exposure", "var_loss",
    ]
    row = [
        params.rho, params.gamma, params.f, params.beta, params.sigma, ratio,
        stationary.infected, stationary.clean, stationary.flagged,
        report.expected_exposure, report.expected_loss, report.var_exposure, report.var_loss,
    ]
    return {"analytic": Table(columns, [row])}


def cmd_simulate(config: ExperimentConfig) -> dict[str, Table]:
    sim = config.sim_config()
    summary = engine.ensemble(sim, workers=config.workers)
    ex = analytics.expected_exposure(sim.params)
    el = analytics.expected_loss(sim.params)
    series = Table(
        ["t", "mean_X", "var_X", "mean_L", "var_L", "analytic_EX", "analytic_EL"],
        [
            [t, summary.mean_exposure_t[t], summary.var_exposure_t[t],
             summary.mean_loss_t[t], summary.var_loss_t[t], ex, el]
            for t in range(sim.steps)
        ],
    )
    runs = Table(
        ["run", "steady_X", "steady_L"],
        [
            [k, summary.per_run_steady_exposure[k], summary.per_run_steady_loss[k]]
            for k in range(summary.runs)
        ],
    )
    return {"series": series, "runs": runs}


def _exposure_sweep(config, label, values, make_params, simulate) -> Table:
    rows = []
    for value in values:
        params = make_params(value)
        row = [value, analytics.expected_exposure(params)]
        if simulate:
            summary = engine.ensemble(config.sim_config(params), workers=config.workers)
            steady = summary.per_run_steady_exposure
            row += [summary.steady_exposure, engine.standard_error(steady), _var(steady)]
        rows.append(row)
    columns = [label, "analytic_EX"]
    if simulate:
        columns += ["sim_mean_X", "sim_se_X", "sim_var_X"]
    return Table(columns, rows)


def _var(values: np.ndarray) -> float:
    return float(values.var(ddof=1)) if values.size > 1 else 0.0


def cmd_sweep_beta(config: ExperimentConfig, simulate: bool = True) -> dict[str, Table]:
    _require_axis("betas", config.betas)
    table = _exposure_sweep(
        config, "beta", config.betas, lambda b: config.model_params(beta=b, sigma=0.0), simulate
    )
    return {"sweep_beta": table}


def cmd_sweep_sigma(config: ExperimentConfig, simulate: bool = True) -> dict[str, Table]:
    _require_axis("sigmas", config.sigmas)
    table = _exposure_sweep(
        config, "sigma", config.sigmas, lambda s: config.model_params(beta=0, sigma=s), simulate
    )
    return {"sweep_sigma": table}


def cmd_sweep_f(config: ExperimentConfig, simulate: bool = True) -> dict[str, Table]:
    _require_axis("fs", config.fs)
    sigma = config.sigma if "sigma" in config.explicit else FIG8_SIGMA
    rows = []
    for f in config.fs:
        params = config.model_params(f=f, sigma=sigma)
        row = [f, analytics.expected_loss(params)]
        if simulate:
            summary = engine.ensemble(config.sim_config(params), workers=config.workers)
            steady = summary.per_run_steady_loss
            row += [summary.steady_loss, _var(steady), engine.standard_error(steady)]
        rows.append(row)
    columns = ["f", "analytic_EL"]
    if simulate:
        columns += ["sim_mean_L", "sim_var_L", "sim_se_L"]
    return {"sweep_f": Table(columns, rows)}


def cmd_heatmap(config: ExperimentConfig, mode: str = "grid") -> dict[str, Table]:
    """Changes relative to the base ``(beta, sigma)``; deltas are new minus base."""
    _require_axis("new_betas", config.new_betas)
    base = config.model_params()
    base_x = analytics.expected_exposure(base)
    base_l = analytics.expected_loss(base)
    if mode == "grid":
        _require_axis("new_sigmas", config.new_sigmas)
        rows = []
        for new_beta in config.new_betas:
            for new_sigma in config.new_sigmas:
                moved = base.replace(beta=new_beta, sigma=new_sigma)
                rows.append([
                    new_beta, new_sigma,
                    analytics.expected_exposure(moved) - base_x,
                    analytics.expected_loss(moved) - base_l,
                ])
        return {"heatmap": Table(["new_beta", "new_sigma", "delta_EX", "delta_EL"], rows)}
    if mode == "critical":
        rows = []
        for new_beta in config.new_betas:
            crit_x = analytics.critical_sigma_exposure(base, new_beta)
            crit_l = analytics.critical_sigma_loss(base, new_beta)
            rows.append([new_beta, crit_x.sigma, crit_x.feasible, crit_l.sigma, crit_l.feasible])
        columns = ["new_beta", "sigma_X", "feasible_X", "sigma_L", "feasible_L"]
        return {"critical": Table(columns, rows)}
    if mode == "tradeoff":
        _require_axis("fs", config.fs)
        rows = []
        for new_beta in config.new_betas:
            crit = analytics.critical_sigma_exposure(base, new_beta)
            for f in config.fs:
                params = base.replace(f=f)
                delta = math.nan
                if crit.feasible:
                    moved = params.replace(beta=new_beta, sigma=crit.sigma)
                    delta = analytics.expected_loss(moved) - analytics.expected_loss(params)
                rows.append([new_beta, f, crit.sigma, crit.feasible, delta])
        columns = ["new_beta", "f", "sigma_X", "feasible", "delta_EL"]
        return {"tradeoff": Table(columns, rows)}
    raise ConfigError(f"unknown heatmap mode {mode!r}")


def _require_axis(name: str, values) -> None:
    if not values:
        raise ConfigError(f"sweep axis {name} must not be empty")


# --- argument parsing -----------------------------------------------------


def _list_of(convert):
    def parse(text: str) -> tuple:
        try:
            return convert(text)
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None

    return parse


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="flat key = value config file")
    common.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--scenario")
    common.add_argument("--seed", type=int)
    common.add_argument("--rho", type=float)
    common.add_argument("--gamma", type=float)
    common.add_argument("--f", type=float)
    common.add_argument("--beta", type=int)
    common.add_argument("--sigma", type=float)
    common.add_argument("--n", type=int)
    common.add_argument("--runs", type=int)
    common.add_argument("--steps", type=int)
    common.add_argument("--burn-in", dest="burn_in", type=int)
    common.add_argument("--popularity", dest="popularity_kind", choices=("uniform", "powerlaw"))
    common.add_argument("--alpha", dest="popularity_alpha", type=float, help="power-law exponent magnitude")
    common.add_argument("--xmin", dest="popularity_xmin", type=float)
    common.add_argument("--xmax", dest="popularity_xmax", type=float)
    common.add_argument("--popularity-file", dest="popularity_file", metavar="PATH",
                        help="one weight per line; overrides --popularity")
    common.add_argument("--resample-per-run", dest="resample_per_run", action="store_const", const=True)
    common.add_argument("--intervention", choices=("depreference", "blacklist"))
    common.add_argument("--workers", type=int)

    parser = argparse.ArgumentParser(
        prog="webinfect", description="Website infection exposure and false-positive loss under search interventions."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="closed-form moments for one scenario")
    sub.add_parser("simulate", parents=[common], help="Monte Carlo ensemble time series")
    for name, axis, convert in (
        ("sweep-beta", "betas", _ints),
        ("sweep-sigma", "sigmas", _floats),
        ("sweep-f", "fs", _floats),
    ):
        p = sub.add_parser(name, parents=[common], help=f"outcomes across {axis.rstrip('s')} values")
        p.add_argument(f"--{axis}", dest=axis, type=_list_of(convert), help="comma-separated values")
        p.add_argument("--analytic-only", action="store_true", help="skip the simulated columns")
    heat = sub.add_parser("heatmap", parents=[common], help="outcome changes around a base (beta, sigma)")
    heat.add_argument("--mode", choices=("grid", "critical", "tradeoff"), default="grid")
    heat.add_argument("--new-betas", dest="new_betas", type=_list_of(_ints))
    heat.add_argument("--new-sigmas", dest="new_sigmas", type=_list_of(_floats))
    heat.add_argument("--fs", dest="fs", type=_list_of(_floats))
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        if args.command == "analytic":
            tables = cmd_analytic(config)
        elif args.command == "simulate":
            tables = cmd_simulate(config)
        elif args.command == "sweep-beta":
            tables = cmd_sweep_beta(config, simulate=not args.analytic_only)
        elif args.command == "sweep-sigma":
            tables = cmd_sweep_sigma(config, simulate=not args.analytic_only)
        elif args.command == "sweep-f":
            tables = cmd_sweep_f(config, simulate=not args.analytic_only)
        else:
            tables = cmd_heatmap(config, args.mode)
        emit(tables, args.format, args.out, config.scenario)
    except (ValueError, OSError) as exc:
        print(f"webinfect: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
