"""Command-line interface: config loading, CSV ingestion and the
`heatbid` commands (plan, simulate, compare, generate-data, export-mps,
forecast).

Configuration is one JSON document with a versioned schema; hourly CSVs
use `timestamp,price` and `timestamp,heat_mwh` columns with ISO-8601
hour stamps. A built-in demo portfolio (two back-pressure CHP engines, a
gas boiler, a wood-chip boiler and a tank storage) is available as
`"system": "demo"`.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from datetime import datetime, timedelta
from pathlib import Path

import click
import numpy as np
import pandas as pd

from . import baselines, datagen, harness
from .exceptions import ConfigError, HeatbidError, InfeasibleProblem, NotOptimal
from .forecast import MIN_HISTORY, fit_sarima
from .hurb import generate_bids, replacement_iterations
from .model import (
    DemandSeries,
    Horizon,
    Mode,
    PriceSeries,
    StorageSpec,
    SystemConfig,
    Unit,
    UnitKind,
    build_operational_milp,
)
from .solver import write_mps

SCHEMA_VERSION = 1
EXIT_INPUT = 2
EXIT_INFEASIBLE = 3
EXIT_INTERNAL = 4
DEFAULT_START_YEAR = 2021


def demo_system() -> SystemConfig:
    """The bundled demo portfolio: two identical back-pressure CHP
    engines feeding a tank storage, a large grid-connected gas boiler
    and a small storage-connected wood-chip boiler."""
    units = (
        Unit("chp1", UnitKind.CHP, cost_heat=610.84, q_max=2.95, p_min=2.5,
             p_max=2.5, phi=1.18, connected_storage=True),
        Unit("chp2", UnitKind.CHP, cost_heat=610.84, q_max=2.95, p_min=2.5,
             p_max=2.5, phi=1.18, connected_storage=True),
        Unit("gb", UnitKind.HEAT_ONLY, cost_heat=404.02, q_max=19.0,
             connected_dh=True),
        Unit("wcb", UnitKind.HEAT_ONLY, cost_heat=211.45, q_max=0.95,
             connected_storage=True),
    )
    storage = StorageSpec(s_max=46.93, s_min=0.0, flow_max=46.93, s_initial=10.0)
    return SystemConfig(units, storage)


# -- configuration -------------------------------------------------------

_KINDS = {"chp": UnitKind.CHP, "heat_only": UnitKind.HEAT_ONLY}
_MODES = {"full_load": Mode.FULL_LOAD, "partial_load": Mode.PARTIAL_LOAD}


def _parse_unit(d: dict) -> Unit:
    try:
        kind = _KINDS[d["kind"]]
    except KeyError as exc:
        raise ConfigError(f"unit kind must be one of {sorted(_KINDS)}") from exc
    return Unit(
        id=d["id"], kind=kind, cost_heat=float(d["cost_heat"]),
        q_max=float(d["q_max"]), p_min=float(d.get("p_min", 0.0)),
        p_max=float(d.get("p_max", 0.0)), phi=float(d.get("phi", 0.0)),
        connected_dh=bool(d.get("connected_dh", False)),
        connected_storage=bool(d.get("connected_storage", False)),
    )


def parse_system(d) -> SystemConfig:
    if d == "demo":
        return demo_system()
    if not isinstance(d, dict):
        raise ConfigError('system must be "demo" or an object')
    storage = d.get("storage")
    if storage is None:
        raise ConfigError("system.storage is required")
    return SystemConfig(
        units=tuple(_parse_unit(u) for u in d.get("units", [])),
        storage=StorageSpec(
            s_max=float(storage["s_max"]), s_min=float(storage.get("s_min", 0.0)),
            flow_max=float(storage["flow_max"]),
            s_initial=float(storage.get("s_initial", 0.0)),
        ),
        mode=_MODES.get(d.get("mode", "full_load"))
        or (_ for _ in ()).throw(ConfigError(
            f"mode must be one of {sorted(_MODES)}")),
    )


@dataclass
class RunConfig:
    system: SystemConfig
    prices_csv: str | None
    demand_csv: str | None
    method: str
    rh_days: int
    seed: int
    out_dir: str
    refit_window_days: int
    k_max: int
    refine: int

    @classmethod
    def load(cls, path: str) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})")
        if "system" not in doc:
            raise ConfigError("config needs a 'system' entry")
        data = doc.get("data", {})
        fc = doc.get("forecast", {})
        method = doc.get("method", "hurb")
        if method not in harness.METHODS:
            raise ConfigError(f"method must be one of {harness.METHODS}")
        rh = int(doc.get("rh_days", 3))
        if not 1 <= rh <= 15:
            raise ConfigError("rh_days must be in 1..15")
        cfg = cls(
            system=parse_system(doc["system"]),
            prices_csv=data.get("prices_csv"),
            demand_csv=data.get("demand_csv"),
            method=method,
            rh_days=rh,
            seed=int(doc.get("seed", 0)),
            out_dir=doc.get("out_dir", "."),
            refit_window_days=int(fc.get("refit_window_days",
                                         harness.DEFAULT_REFIT_WINDOW_DAYS)),
            k_max=int(fc.get("k_max", harness.DEFAULT_K_MAX)),
            refine=int(fc.get("refine", harness.DEFAULT_REFINE)),
        )
        for p in (cfg.prices_csv, cfg.demand_csv):
            if p is not None and not Path(p).exists():
                raise ConfigError(f"referenced data file does not exist: {p}")
        return cfg


# -- hourly CSV ingestion ------------------------------------------------


@dataclass
class TimeAxis:
    """Maps absolute hour indices to timestamps; hour 0 is midnight,
    1 January of the anchor year."""

    anchor: datetime

    def to_hour(self, ts: datetime) -> int:
        return int((ts - self.anchor) / timedelta(hours=1))

    def to_timestamp(self, hour: int) -> datetime:
        return self.anchor + timedelta(hours=hour)


def _load_hourly_csv(path: str, value_column: str):
    try:
        df = pd.read_csv(path)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except pd.errors.ParserError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    expected = ["timestamp", value_column]
    if list(df.columns) != expected:
        raise ConfigError(f"{path}: expected columns {expected}, got {list(df.columns)}")
    if len(df) == 0:
        raise ConfigError(f"{path}: empty series")
    try:
        stamps = pd.to_datetime(df["timestamp"], format="ISO8601")
    except ValueError as exc:
        raise ConfigError(f"{path}: bad timestamp: {exc}") from exc
    deltas = stamps.diff().dropna()
    if not (deltas == pd.Timedelta(hours=1)).all():
        raise ConfigError(f"{path}: timestamps must be consecutive hours")
    first = stamps.iloc[0].to_pydatetime()
    axis = TimeAxis(datetime(first.year if first.month <= 6 else first.year + 1, 1, 1))
    values = df[value_column].to_numpy(dtype=float)
    if not np.isfinite(values).all():
        raise ConfigError(f"{path}: non-finite values")
    return PriceSeries(values, axis.to_hour(first)), axis


def load_prices(path: str) -> tuple[PriceSeries, TimeAxis]:
    return _load_hourly_csv(path, "price")


def load_demand(path: str) -> tuple[DemandSeries, TimeAxis]:
    return _load_hourly_csv(path, "heat_mwh")


def _write_hourly_csv(path: Path, series, axis: TimeAxis, value_column: str):
    with open(path, "w") as fh:
        fh.write(f"timestamp,{value_column}\n")
        for i, v in enumerate(series.values):
            ts = axis.to_timestamp(series.start_hour + i)
            fh.write(f"{ts.isoformat()},{v:.6f}\n")


def _load_market_data(cfg: RunConfig) -> tuple[PriceSeries, DemandSeries, TimeAxis]:
    if not cfg.prices_csv or not cfg.demand_csv:
        raise ConfigError("config needs data.prices_csv and data.demand_csv")
    prices, axis = load_prices(cfg.prices_csv)
    demand, daxis = load_demand(cfg.demand_csv)
    if daxis.anchor != axis.anchor or demand.start_hour != prices.start_hour \
            or len(demand) != len(prices):
        raise ConfigError("price and demand series do not cover the same hours")
    return prices, demand, axis


def _day_offset(series, axis: TimeAxis, date: datetime) -> int:
    """Index into the series of the first hour of `date`."""
    off = axis.to_hour(date) - series.start_hour
    if off < 0 or off + 24 > len(series):
        raise ConfigError(f"date {date.date()} not covered by the data")
    return off


def _fit_for_day(cfg: RunConfig, prices: PriceSeries, off: int):
    window = min(cfg.refit_window_days * 24, off)
    if window < MIN_HISTORY:
        raise ConfigError(
            f"need {MIN_HISTORY} hours of price history before the date, "
            f"have {window}")
    return fit_sarima(prices.slice(off - window, window),
                      k_max=cfg.k_max, refine=cfg.refine)


def _dispatch_csv(plan, demand: DemandSeries) -> str:
    cols = plan.unit_ids
    lines = ["hour," + ",".join(f"q_{u}" for u in cols)
             + ",storage_level,storage_out,demand"]
    for t in range(plan.n_periods):
        vals = [f"{plan.q[u][t]:.6f}" for u in cols]
        lines.append(f"{t + 1}," + ",".join(vals)
                     + f",{plan.s_level[t]:.6f},{plan.s_out[t]:.6f}"
                     + f",{demand.values[t]:.6f}")
    return "\n".join(lines) + "\n"


def _build_day_offers(cfg: RunConfig, system, horizon, model, forecast,
                      demand, s0):
    return harness._build_offers(cfg.method, system, horizon, model, forecast,
                                 demand, s0, {"seed": cfg.seed})


# -- commands ------------------------------------------------------------


class _Fail(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


def _guarded(fn):
    def wrapper(*args, **kwargs):
        try:
            fn(*args, **kwargs)
        except (InfeasibleProblem, NotOptimal) as exc:
            raise _Fail(str(exc), EXIT_INFEASIBLE)
        except (ConfigError, OSError) as exc:
            raise _Fail(str(exc), EXIT_INPUT)
        except HeatbidError as exc:
            raise _Fail(str(exc), EXIT_INTERNAL)
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


@click.group()
def main():
    """District-heating dispatch, day-ahead bidding and evaluation."""


_config_opt = click.option("--config", "config_path", required=True,
                           type=click.Path(), help="JSON run configuration.")
_date_opt = click.option("--date", required=True, type=click.DateTime(["%Y-%m-%d"]),
                         help="Delivery day (YYYY-MM-DD).")
_out_opt = click.option("--out", "out", default=None,
                        type=click.Path(), help="Output directory.")


def _outdir(cfg: RunConfig, out: str | None) -> Path:
    d = Path(out or cfg.out_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


@main.command()
@_config_opt
@_date_opt
@_out_opt
@_guarded
def plan(config_path, date, out):
    """Build one day's offers; writes offers.csv and the dispatch plans."""
    cfg = RunConfig.load(config_path)
    prices, demand, axis = _load_market_data(cfg)
    off = _day_offset(prices, axis, date)
    n = cfg.rh_days * 24
    if off + n > len(prices):
        raise ConfigError(
            f"planning horizon of {cfg.rh_days} days runs past the data")
    model = _fit_for_day(cfg, prices, off)
    horizon = Horizon(n)
    forecast = model.predict(n)
    demand_d = demand.slice(off, n)
    s0 = cfg.system.storage.s_initial
    outdir = _outdir(cfg, out)
    if cfg.method == "hurb":
        offers = generate_bids(cfg.system, horizon, forecast, demand_d, s0)
        _, iterations = replacement_iterations(cfg.system, horizon, forecast,
                                               demand_d, s0)
        for it in iterations:
            (outdir / f"iteration_{it.index}_dispatch.csv").write_text(
                _dispatch_csv(it.plan, demand_d))
    else:
        offers = _build_day_offers(cfg, cfg.system, horizon, model, forecast,
                                   demand_d, s0)
    (outdir / "offers.csv").write_text(offers.to_csv())
    click.echo(f"{len(offers)} offers written to {outdir / 'offers.csv'}")


@main.command()
@_config_opt
@click.option("--window", type=int, required=True, help="Days to simulate.")
@click.option("--method", default=None, help="Override the config method.")
@click.option("--rh", type=int, default=None, help="Override rh_days.")
@click.option("--seed", type=int, default=None, help="Override the seed.")
@_out_opt
@_guarded
def simulate(config_path, window, method, rh, seed, out):
    """Rolling day-by-day simulation; writes report.csv."""
    cfg = RunConfig.load(config_path)
    if method is not None:
        if method not in harness.METHODS:
            raise ConfigError(f"method must be one of {harness.METHODS}")
        cfg.method = method
    if rh is not None:
        cfg.rh_days = rh
    if seed is not None:
        cfg.seed = seed
    prices, demand, axis = _load_market_data(cfg)
    history = max(cfg.refit_window_days * 24, MIN_HISTORY)
    data = harness.MarketData(prices, demand, window, history)

    def show(rec):
        click.echo(f"day {rec.day}: cost {rec.cost:.2f}", err=True)

    rep = harness.run_rolling(
        cfg.system, data, cfg.method, cfg.rh_days,
        refit_window_days=cfg.refit_window_days, k_max=cfg.k_max,
        refine=cfg.refine, method_params={"seed": cfg.seed}, progress=show)
    outdir = _outdir(cfg, out)
    (outdir / "report.csv").write_text(rep.to_csv())
    click.echo(f"total cost {rep.total_cost:.2f}; report at {outdir / 'report.csv'}")


@main.command()
@_config_opt
@click.option("--window", type=int, required=True, help="Days to simulate.")
@click.option("--rh", "rh_list", default="1,3,5",
              help="Comma-separated planning horizons in days.")
@click.option("--method", "methods", default=",".join(harness.METHODS),
              help="Comma-separated methods to compare.")
@_out_opt
@_guarded
def compare(config_path, window, rh_list, methods, out):
    """Run several methods and horizons; writes comparison.csv."""
    cfg = RunConfig.load(config_path)
    prices, demand, axis = _load_market_data(cfg)
    history = max(cfg.refit_window_days * 24, MIN_HISTORY)
    data = harness.MarketData(prices, demand, window, history)
    try:
        rhs = tuple(int(x) for x in rh_list.split(","))
        meths = tuple(m.strip() for m in methods.split(","))
    except ValueError as exc:
        raise ConfigError(f"bad --rh list: {exc}") from exc
    for m in meths:
        if m not in harness.METHODS:
            raise ConfigError(f"method must be one of {harness.METHODS}")
    table = harness.compare_methods(
        cfg.system, [data], meths, rhs,
        refit_window_days=cfg.refit_window_days, k_max=cfg.k_max,
        refine=cfg.refine, method_params={"seed": cfg.seed})
    outdir = _outdir(cfg, out)
    (outdir / "comparison.csv").write_text(table.to_csv())
    for method, stats in table.summary().items():
        click.echo(f"{method}: best {stats['best']:.2f} "
                   f"avg {stats['average']:.2f} worst {stats['worst']:.2f}")


@main.command("generate-data")
@click.option("--seed", type=int, default=0)
@click.option("--start-year", type=int, default=DEFAULT_START_YEAR)
@click.option("--warmup-days", type=int, default=49)
@click.option("--tail-days", type=int, default=15)
@click.option("--annual-mwh", type=float, default=datagen.ANNUAL_HEAT_MWH)
@click.option("--base-share", type=float, default=datagen.BASE_SHARE)
@click.option("--out", "out", default=".", type=click.Path())
@_guarded
def generate_data(seed, start_year, warmup_days, tail_days, annual_mwh,
                  base_share, out):
    """Write synthetic prices.csv and demand.csv for one year plus margins."""
    if not 0.0 <= base_share <= 1.0:
        raise ConfigError("base share must be in [0, 1]")
    n = (warmup_days + 365 + tail_days) * 24
    start = -warmup_days * 24
    prices = datagen.synthetic_prices(n, seed, start)
    demand = datagen.synthetic_demand(n, start, annual_mwh, base_share)
    axis = TimeAxis(datetime(start_year, 1, 1))
    outdir = Path(out)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_hourly_csv(outdir / "prices.csv", prices, axis, "price")
    _write_hourly_csv(outdir / "demand.csv", demand, axis, "heat_mwh")
    click.echo(f"wrote {outdir / 'prices.csv'} and {outdir / 'demand.csv'}")


@main.command("export-mps")
@_config_opt
@_date_opt
@click.option("--out", "out", default="problem.mps", type=click.Path())
@_guarded
def export_mps(config_path, date, out):
    """Write the day's operational MILP in MPS format."""
    cfg = RunConfig.load(config_path)
    prices, demand, axis = _load_market_data(cfg)
    off = _day_offset(prices, axis, date)
    n = cfg.rh_days * 24
    if off + n > len(prices):
        raise ConfigError(
            f"planning horizon of {cfg.rh_days} days runs past the data")
    model = _fit_for_day(cfg, prices, off)
    prob = build_operational_milp(
        cfg.system, Horizon(n), model.predict(n), demand.slice(off, n),
        name=f"day-{date.date()}")
    Path(out).write_text(write_mps(prob))
    click.echo(f"MPS written to {out}")


@main.command("forecast")
@_config_opt
@_date_opt
@click.option("--rh", type=int, default=None, help="Forecast days ahead.")
@_out_opt
@_guarded
def forecast_cmd(config_path, date, rh, out):
    """Fit the price model before the date and write forecast.csv."""
    cfg = RunConfig.load(config_path)
    if rh is not None:
        cfg.rh_days = rh
    prices, demand, axis = _load_market_data(cfg)
    off = _day_offset(prices, axis, date)
    model = _fit_for_day(cfg, prices, off)
    n = cfg.rh_days * 24
    point = model.predict(n)
    lo, hi = model.forecast_interval(n, 0.9)
    outdir = _outdir(cfg, out)
    with open(outdir / "forecast.csv", "w") as fh:
        fh.write("timestamp,forecast,lo90,hi90\n")
        for i in range(n):
            ts = axis.to_timestamp(point.start_hour + i)
            fh.write(f"{ts.isoformat()},{point.values[i]:.6f},"
                     f"{lo.values[i]:.6f},{hi.values[i]:.6f}\n")
    (outdir / "model.json").write_text(model.to_json())
    click.echo(f"forecast written to {outdir / 'forecast.csv'}")


if __name__ == "__main__":
    main()
