"""Experiment drivers: GA convergence, flat vs day-ahead pricing, monthly bills.

Each driver returns an :class:`ExperimentReport`, a bag of named tables
(lists of flat dict rows) plus scalar metadata. ``write`` emits one CSV per
table and a ``report.json`` holding everything, keyed by the scenario hash.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from .domain import (
    HORIZON,
    CurtailableSpec,
    HouseholdSpec,
    InterruptibleSpec,
    NonInterruptibleSpec,
    round_money,
)
from .ga import GaParams, OptimizeResult, optimize
from .harness import InProcessTransport, MeterServer, PricingEvaluator, TcpTransport, Transport
from .hems import hour_sum, solve_household
from .retailer import evaluate_pricing
from .scenario import Scenario, ScenarioConfig, generate_scenario, import_price_series

log = logging.getLogger(__name__)


class FlatPriceOutOfBounds(UserWarning):
    """The flat price needed to hit the revenue target lies outside the price bounds."""


@dataclass
class ExperimentReport:
    kind: str
    scenario_digest: str
    seed: int
    meta: dict = field(default_factory=dict)
    tables: dict[str, list[dict]] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "scenario_digest": self.scenario_digest, "seed": self.seed,
                "meta": self.meta, "tables": self.tables, "warnings": self.warnings}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1, allow_nan=True)

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = []
        for name, rows in self.tables.items():
            p = out / f"{self.kind}_{name}.csv"
            write_rows(p, rows)
            paths.append(p)
        p = out / f"{self.kind}_report.json"
        p.write_text(self.to_json())
        paths.append(p)
        return paths


def write_rows(path, rows: list[dict]) -> None:
    """CSV with a header row; floats use ``repr`` so they re-parse exactly."""
    with open(path, "w", newline="") as fh:
        if not rows:
            return
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def read_rows(path) -> list[dict]:
    """Parse a CSV written by :func:`write_rows`; numeric cells become numbers."""
    def conv(v: str):
        for t in (int, float):
            try:
                return t(v)
            except ValueError:
                pass
        return v
    with open(path, newline="") as fh:
        return [{k: conv(v) for k, v in row.items()} for row in csv.DictReader(fh)]


# -- flat baseline ---------------------------------------------------------------

def baseline_schedule(app) -> np.ndarray:
    """Price-blind behaviour: start at the window start and run flat out.

    Shiftable appliances draw ``power_max`` from the first slot of their
    window until the energy is delivered (the last slot may be partial).
    Curtailable appliances follow their ceiling profile.
    """
    x = np.zeros(HORIZON)
    if isinstance(app, CurtailableSpec):
        return np.array(app.ceiling_profile())
    if not isinstance(app, (InterruptibleSpec, NonInterruptibleSpec)):
        raise TypeError(f"unknown appliance type {type(app).__name__}")
    left = app.energy_required
    for h in app.window.slots():
        if left <= 0:
            break
        x[h - 1] = min(app.power_max, left)
        left -= x[h - 1]
    return x


def baseline_load(household: HouseholdSpec) -> np.ndarray:
    total = np.zeros(HORIZON)
    for app in household.appliances:
        total = total + baseline_schedule(app)
    return total


def baseline_bill(prices, household: HouseholdSpec) -> float:
    return float(hour_sum(np.asarray(prices) * baseline_load(household)))


def _sum_households(loads) -> np.ndarray:
    total = np.zeros(HORIZON)
    for x in loads:
        total = total + x
    return total


# -- transports --------------------------------------------------------------------

class _Meters:
    """Context manager yielding a transport for ``scenario``.

    ``tcp`` without an address starts a local meter server for the duration.
    """

    def __init__(self, scenario: Scenario, kind: str = "inproc", meters_addr=None,
                 waiting: bool = True):
        self.scenario, self.kind, self.addr, self.waiting = scenario, kind, meters_addr, waiting
        self._server = None
        self._transport: Transport | None = None

    def __enter__(self) -> Transport:
        customers = self.scenario.customers
        if self.kind == "inproc":
            self._transport = InProcessTransport(customers, waiting=self.waiting)
        elif self.kind == "tcp":
            addr = self.addr
            if addr is None:
                self._server = MeterServer(customers, waiting=self.waiting).start()
                addr = self._server.server_address
            self._transport = TcpTransport(tuple(addr), [h.id for h in customers])
        else:
            raise ValueError(f"unknown transport {self.kind!r}")
        return self._transport

    def __exit__(self, *exc):
        if self._transport is not None:
            self._transport.close()
        if self._server is not None:
            self._server.stop()


def open_transport(scenario: Scenario, kind: str = "inproc", meters_addr=None,
                   waiting: bool = True) -> _Meters:
    return _Meters(scenario, kind, meters_addr, waiting)


def run_dayahead(scenario: Scenario, revenue_cap: float | None = None,
                 ga_params: GaParams | None = None, transport: str = "inproc",
                 meters_addr=None, telemetry: Callable | None = None) -> OptimizeResult:
    """GA search for the retailer's day-ahead prices against ``scenario``."""
    cons = scenario.constraints
    if revenue_cap is not None:
        cons = cons.with_revenue_cap(revenue_cap)
    params = ga_params or scenario.ga_params
    with open_transport(scenario, transport, meters_addr) as tr:
        ev = PricingEvaluator(tr, scenario.cost_params, cons)
        return optimize(params, ev, cons, telemetry=telemetry)


# -- experiments -------------------------------------------------------------------

def _scenario_for(config, **overrides) -> Scenario:
    if isinstance(config, Scenario):
        return config
    return generate_scenario(config or ScenarioConfig(), **overrides)


def single_population(params: GaParams) -> GaParams:
    """Same total population in one island (no migration)."""
    return replace(params, num_islands=1, island_size=params.num_islands * params.island_size)


def generations_to_fraction(history, fraction: float = 0.99) -> int | None:
    """First generation whose best profit reaches ``fraction`` of the final best."""
    final = history[-1]
    if final is None or math.isnan(final):
        return None
    target = fraction * final if final >= 0 else final / fraction
    for g, v in enumerate(history):
        if not math.isnan(v) and v >= target:
            return g
    return len(history) - 1


def run_convergence(config: ScenarioConfig | Scenario | None, customer_counts=(100, 1000),
                    algorithms=("multi", "single"), transport: str = "inproc",
                    meters_addr=None) -> ExperimentReport:
    """Best profit per generation, multi- vs single-population, per customer count.

    Passing a :class:`Scenario` instead of a config runs that scenario alone.
    """
    if isinstance(config, Scenario):
        scenarios = [config]
        seed = config.seed
    else:
        config = config or ScenarioConfig()
        scenarios = (generate_scenario(config, num_customers=int(n)) for n in customer_counts)
        seed = config.seed
    rows, summary, digests = [], [], {}
    for scen in scenarios:
        n = len(scen.customers)
        digests[str(n)] = scen.digest()
        for algo in algorithms:
            params = scen.ga_params if algo == "multi" else single_population(scen.ga_params)
            res = run_dayahead(scen, ga_params=params, transport=transport,
                               meters_addr=meters_addr)
            log.info("convergence N=%s %s: best %.2f", n, algo, res.best.profit)
            for g, v in enumerate(res.history):
                rows.append({"customers": int(n), "algorithm": algo, "generation": g,
                             "best_profit": float(v)})
            summary.append({"customers": int(n), "algorithm": algo,
                            "final_best": float(res.history[-1]),
                            "gens_to_99pct": generations_to_fraction(res.history),
                            "evaluations": res.evaluations})
    first = next(iter(digests.values()), "")
    return ExperimentReport(kind="convergence", scenario_digest=first, seed=seed,
                            meta={"customer_counts": [int(n) for n in digests],
                                  "scenario_digests": digests},
                            tables={"traces": rows, "summary": summary})


@dataclass(frozen=True)
class ArmResult:
    arm: str
    revenue: float
    cost: float
    profit: float
    prices: tuple[float, ...]
    aggregate_load: tuple[float, ...]

    def row(self) -> dict:
        return {"arm": self.arm, "revenue": self.revenue, "cost": self.cost,
                "profit": self.profit}


def flat_arm(scenario: Scenario, revenue_target: float) -> tuple[ArmResult, bool]:
    """Flat price that makes the price-blind load earn ``revenue_target``.

    Returns the arm and whether the price clip was binding.
    """
    load = _sum_households(baseline_load(h) for h in scenario.customers)
    energy = float(hour_sum(load))
    lo = min(scenario.constraints.price_min)
    hi = max(scenario.constraints.price_max)
    raw = revenue_target / energy if energy > 0 else lo
    price = min(max(raw, lo), hi)
    clipped = energy > 0 and price != raw
    prices = np.full(HORIZON, price)
    cons = scenario.constraints.with_revenue_cap(max(revenue_target, 1e-9))
    ev = evaluate_pricing(prices, load, scenario.cost_params, cons)
    return ArmResult("flat", ev.revenue, ev.supply_cost, ev.profit,
                     tuple(prices), tuple(load)), clipped


def run_flat_vs_dayahead(config, revenue_target: float, transport: str = "inproc",
                         meters_addr=None, ga_params: GaParams | None = None) -> ExperimentReport:
    """Day-ahead GA pricing against a flat tariff earning the same revenue."""
    scen = _scenario_for(config)
    flat, clipped = flat_arm(scen, revenue_target)
    warnings = []
    if clipped:
        msg = "flat price clipped to the price bounds; revenues differ"
        warnings.append(f"FlatPriceOutOfBounds: {msg}")
        log.warning(msg)
    if scen.customers:
        res = run_dayahead(scen, revenue_target, ga_params=ga_params, transport=transport,
                           meters_addr=meters_addr)
        b = res.best
        day = ArmResult("day-ahead", b.revenue, b.supply_cost, b.profit,
                        tuple(b.prices), tuple(b.aggregate_load))
        feasible = b.feasible
    else:
        day = ArmResult("day-ahead", 0.0, 0.0, 0.0, (0.0,) * HORIZON, (0.0,) * HORIZON)
        feasible = True
    prices = [{"slot": h + 1, "flat": flat.prices[h], "day_ahead": day.prices[h],
               "flat_load": flat.aggregate_load[h], "day_ahead_load": day.aggregate_load[h]}
              for h in range(HORIZON)]
    return ExperimentReport(kind="compare", scenario_digest=scen.digest(), seed=scen.seed,
                            meta={"revenue_target": revenue_target,
                                  "flat_price_clipped": clipped,
                                  "day_ahead_feasible": feasible,
                                  "customers": len(scen.customers)},
                            tables={"arms": [flat.row(), day.row()], "hourly": prices},
                            warnings=warnings)


def run_monthly_bills(config, price_series_path, customer: int = 0,
                      scale: float = 1.0) -> ExperimentReport:
    """Daily bill of one customer: optimized (waiting on/off) vs price-blind."""
    scen = _scenario_for(config)
    days = import_price_series(price_series_path, scale=scale)
    by_id = {h.id: h for h in scen.customers}
    if customer not in by_id:
        raise KeyError(f"no customer {customer} in scenario")
    house = by_id[customer]
    rows = []
    for day in days:
        opt = solve_household(day.prices, house, waiting=True).bill
        nowait = solve_household(day.prices, house, waiting=False).bill
        base = baseline_bill(day.prices, house)
        rows.append({"date": day.date, "optimized": float(round_money(opt)),
                     "optimized_no_wait": float(round_money(nowait)),
                     "baseline": float(round_money(base)),
                     "waiting_saving": float(round_money(nowait - opt))})
    return ExperimentReport(kind="bills", scenario_digest=scen.digest(), seed=scen.seed,
                            meta={"customer": customer, "days": len(rows),
                                  "series": str(price_series_path)},
                            tables={"daily": rows})
