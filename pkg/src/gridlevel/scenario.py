"""Seeded customer populations and historical price import.

Clock hours are mapped onto the 8AM-anchored horizon: a window that starts
at clock hour ``a`` begins in slot ``clock_to_slot(a)``; one that ends at
clock hour ``b`` has ``clock_end_to_slot(b)`` as its last slot. So "6PM to
5AM" is the contiguous slot range 11..21.
"""

from __future__ import annotations

import csv
import datetime as dt
import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .domain import (
    HORIZON,
    CurtailableSpec,
    CurtailMode,
    HouseholdSpec,
    InterruptibleSpec,
    NonInterruptibleSpec,
    TimeWindow,
    as_price_vector,
    clock_end_to_slot,
    clock_to_slot,
    household_from_dict,
    household_to_dict,
    validate_household,
)
from .ga import GaParams
from .retailer import CostParams, RetailerConstraints


class ConfigError(ValueError):
    pass


class ParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MissingHours(ValueError):
    def __init__(self, gaps: dict[str, list[int]]):
        desc = "; ".join(f"{d}: {hrs}" for d, hrs in gaps.items())
        super().__init__(f"incomplete days ({desc})")
        self.gaps = gaps


def _check_range(name, rng, integer=False):
    lo, hi = rng
    if not lo <= hi:
        raise ConfigError(f"{name}: range ({lo}, {hi}) is not ordered")
    if integer and (int(lo) != lo or int(hi) != hi):
        raise ConfigError(f"{name}: hour ranges must be integers")


@dataclass(frozen=True)
class ShiftableDist:
    """Sampling ranges for an interruptible or non-interruptible appliance.

    ``alpha_clock`` is the range of start clock hours, ``beta_clock`` the
    range of end clock hours. ``duration=None`` uses the shortest run that
    can deliver the energy, ``ceil(E / power_max)``.
    """

    name: str
    kind: str
    energy: tuple[float, float]
    power_max: tuple[float, float]
    alpha_clock: tuple[int, int]
    beta_clock: tuple[int, int]
    power_min: float = 0.0
    duration: tuple[int, int] | None = None
    max_wait: int = 3
    thresholds: tuple[float, ...] = (10.0, 25.0, 45.0)

    def validate(self):
        if self.kind not in ("interruptible", "noninterruptible"):
            raise ConfigError(f"{self.name}: unknown kind {self.kind!r}")
        for f in ("energy", "power_max"):
            _check_range(f"{self.name}.{f}", getattr(self, f))
        for f in ("alpha_clock", "beta_clock"):
            _check_range(f"{self.name}.{f}", getattr(self, f), integer=True)
        if self.duration is not None:
            _check_range(f"{self.name}.duration", self.duration, integer=True)
        if len(self.thresholds) != self.max_wait:
            raise ConfigError(f"{self.name}: need one threshold per waiting length")

    def sample(self, rng: np.random.Generator):
        E = rng.uniform(*self.energy)
        gmax = rng.uniform(*self.power_max)
        alpha = clock_to_slot(int(rng.integers(self.alpha_clock[0], self.alpha_clock[1] + 1)))
        beta = clock_end_to_slot(int(rng.integers(self.beta_clock[0], self.beta_clock[1] + 1)))
        if self.duration is not None:
            L = int(rng.integers(self.duration[0], self.duration[1] + 1))
        else:
            L = math.ceil(E / gmax - 1e-12)
        window = TimeWindow(alpha, beta) if alpha <= beta else TimeWindow(beta, alpha)
        k = max(0, min(self.max_wait, HORIZON - window.beta))
        common = dict(energy_required=E, power_min=self.power_min, power_max=gmax,
                      window=window, max_wait=k, thresholds=self.thresholds[:k],
                      name=self.name)
        if self.kind == "interruptible":
            return InterruptibleSpec(**common)
        return NonInterruptibleSpec(duration=L, **common)

    def to_dict(self):
        return {**self.__dict__, "type": "shiftable"}


@dataclass(frozen=True)
class CurtailableDist:
    """Sampling ranges for a curtailable appliance (per-hour floor/ceiling)."""

    name: str
    floor: tuple[float, float]
    ceiling: tuple[float, float]
    alpha_clock: tuple[int, int]
    beta_clock: tuple[int, int]
    budget: tuple[float, float] | None = None
    min_total_fraction: tuple[float, float] | None = None
    mode: str = CurtailMode.MAX_CONSUMPTION.value

    def validate(self):
        CurtailMode(self.mode)
        for f in ("floor", "ceiling"):
            _check_range(f"{self.name}.{f}", getattr(self, f))
        for f in ("alpha_clock", "beta_clock"):
            _check_range(f"{self.name}.{f}", getattr(self, f), integer=True)
        if self.floor[1] > self.ceiling[0]:
            raise ConfigError(f"{self.name}: floor range overlaps ceiling range")
        if CurtailMode(self.mode) is CurtailMode.MAX_CONSUMPTION:
            if self.budget is None:
                raise ConfigError(f"{self.name}: MaxConsumption needs a budget range")
            _check_range(f"{self.name}.budget", self.budget)
        elif self.min_total_fraction is None:
            raise ConfigError(f"{self.name}: MinBill needs min_total_fraction")

    def sample(self, rng: np.random.Generator):
        alpha = clock_to_slot(int(rng.integers(self.alpha_clock[0], self.alpha_clock[1] + 1)))
        beta = clock_end_to_slot(int(rng.integers(self.beta_clock[0], self.beta_clock[1] + 1)))
        window = TimeWindow(alpha, beta) if alpha <= beta else TimeWindow(beta, alpha)
        n = len(window)
        floor = tuple(rng.uniform(*self.floor, size=n).tolist())
        ceiling = tuple(rng.uniform(*self.ceiling, size=n).tolist())
        mode = CurtailMode(self.mode)
        if mode is CurtailMode.MAX_CONSUMPTION:
            return CurtailableSpec(mode, window, floor, ceiling,
                                   budget=float(rng.uniform(*self.budget)), name=self.name)
        frac = float(rng.uniform(*self.min_total_fraction))
        lo, hi = sum(floor), sum(ceiling)
        return CurtailableSpec(mode, window, floor, ceiling,
                               min_total=lo + frac * (hi - lo), name=self.name)

    def to_dict(self):
        return {**self.__dict__, "type": "curtailable"}


DEFAULT_APPLIANCES = (
    ShiftableDist("phev", "interruptible", energy=(9.0, 11.0), power_max=(2.5, 3.3),
                  alpha_clock=(18, 21), beta_clock=(5, 8)),
    ShiftableDist("dishwasher", "noninterruptible", energy=(2.3, 2.9), power_max=(1.2, 1.7),
                  alpha_clock=(8, 11), beta_clock=(18, 21)),
    ShiftableDist("washing_machine", "noninterruptible", energy=(1.8, 2.3),
                  power_max=(1.0, 1.5), alpha_clock=(18, 21), beta_clock=(5, 8)),
    CurtailableDist("air_conditioning", floor=(0.5, 0.8), ceiling=(1.8, 2.2),
                    alpha_clock=(16, 18), beta_clock=(21, 23), budget=(70.0, 90.0)),
)


def day_night_cost(a_day=5.5e-4, a_night=4.0e-4) -> CostParams:
    """Quadratic cost with ``a_day`` for 8AM-12AM and ``a_night`` after."""
    a = [a_day if h <= 16 else a_night for h in range(1, HORIZON + 1)]
    return CostParams(a=tuple(a))


@dataclass(frozen=True)
class ScenarioConfig:
    num_customers: int = 100
    seed: int = 0
    appliances: tuple = DEFAULT_APPLIANCES
    hourly_cap: tuple[float, float] = (3.5, 4.5)
    price_min: float = 8.0
    price_max: float = 14.0
    a_day: float = 5.5e-4
    a_night: float = 4.0e-4
    revenue_cap_per_customer: float = 255.0
    supply_cap_per_customer: float = 10.0
    ga_params: GaParams = field(default_factory=GaParams)

    def validate(self):
        if self.num_customers < 0:
            raise ConfigError("num_customers must be >= 0")
        if not self.appliances:
            raise ConfigError("need at least one appliance distribution")
        for d in self.appliances:
            d.validate()
        _check_range("hourly_cap", self.hourly_cap)
        if not 0 <= self.price_min <= self.price_max:
            raise ConfigError("need 0 <= price_min <= price_max")
        if self.a_day <= 0 or self.a_night <= 0:
            raise ConfigError("cost coefficients must be positive")


@dataclass(frozen=True)
class Scenario:
    customers: tuple[HouseholdSpec, ...]
    cost_params: CostParams
    constraints: RetailerConstraints
    ga_params: GaParams
    seed: int
    resamples: int = 0

    def to_dict(self) -> dict:
        return {"customers": [household_to_dict(h) for h in self.customers],
                "cost_params": self.cost_params.to_dict(),
                "retailer_constraints": self.constraints.to_dict(),
                "ga_params": self.ga_params.to_dict(),
                "seed": self.seed,
                "resamples": self.resamples}

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        return cls(customers=tuple(household_from_dict(h) for h in d["customers"]),
                   cost_params=CostParams.from_dict(d["cost_params"]),
                   constraints=RetailerConstraints.from_dict(d["retailer_constraints"]),
                   ga_params=GaParams.from_dict(d["ga_params"]),
                   seed=int(d["seed"]), resamples=int(d.get("resamples", 0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        return cls.from_dict(json.loads(text))

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path) -> "Scenario":
        return cls.from_json(Path(path).read_text())

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()

    def replace(self, **kw) -> "Scenario":
        return replace(self, **kw)


_MAX_RESAMPLES = 1000


def sample_household(config: ScenarioConfig, n: int) -> tuple[HouseholdSpec, int]:
    """Draw customer ``n`` from its own stream; returns ``(household, resamples)``."""
    rng = np.random.default_rng(np.random.SeedSequence([config.seed, n]))
    for attempt in range(_MAX_RESAMPLES):
        apps = tuple(d.sample(rng) for d in config.appliances)
        cap = float(rng.uniform(*config.hourly_cap))
        h = HouseholdSpec(id=n, appliances=apps, hourly_cap=cap)
        if not validate_household(h, price_max=config.price_max):
            return h, attempt
    raise ConfigError(f"customer {n}: no feasible draw after {_MAX_RESAMPLES} attempts")


def generate_scenario(config: ScenarioConfig | None = None, **overrides) -> Scenario:
    config = config or ScenarioConfig()
    if overrides:
        config = replace(config, **overrides)
    config.validate()
    customers, resamples = [], 0
    for n in range(config.num_customers):
        h, r = sample_household(config, n)
        customers.append(h)
        resamples += r
    N = max(config.num_customers, 1)
    constraints = RetailerConstraints(
        price_min=(config.price_min,) * HORIZON, price_max=(config.price_max,) * HORIZON,
        hourly_supply_cap=config.supply_cap_per_customer * N,
        revenue_cap=config.revenue_cap_per_customer * N)
    ga = replace(config.ga_params, seed=config.seed)
    return Scenario(customers=tuple(customers),
                    cost_params=day_night_cost(config.a_day, config.a_night),
                    constraints=constraints, ga_params=ga, seed=config.seed,
                    resamples=resamples)


# -- price series ------------------------------------------------------------------

PRICE_HEADER = ("date", "hour", "price_pence_per_kwh")


class DailyPrices(NamedTuple):
    date: str
    prices: np.ndarray


def hour_ending_to_slot(hour: int) -> int:
    """Local hour-ending 1..24 to horizon slot (HE9 = 8-9AM = slot 1)."""
    return (hour - 9) % HORIZON + 1


def import_price_series(path, format: str = "csv", scale: float = 1.0) -> list[DailyPrices]:
    """Read ``date,hour,price_pence_per_kwh`` rows into one vector per day.

    Hours are local hour-ending 1..24; each day's hours are rotated onto the
    8AM-anchored horizon. ``scale`` multiplies every price.
    """
    if format != "csv":
        raise ValueError(f"unsupported price format {format!r}")
    days: dict[str, dict[int, float]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, "empty file") from None
        if tuple(c.strip() for c in header) != PRICE_HEADER:
            raise ParseError(1, f"expected header {','.join(PRICE_HEADER)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ParseError(lineno, f"expected 3 columns, got {len(row)}")
            date, hour, price = (c.strip() for c in row)
            try:
                dt.date.fromisoformat(date)
                h = int(hour)
                p = float(price) * scale
            except ValueError as exc:
                raise ParseError(lineno, str(exc)) from None
            if not 1 <= h <= HORIZON:
                raise ParseError(lineno, f"hour {h} outside 1..24")
            if not math.isfinite(p) or p < 0:
                raise ParseError(lineno, f"invalid price {price}")
            day = days.setdefault(date, {})
            if h in day:
                raise ParseError(lineno, f"duplicate hour {h} for {date}")
            day[h] = p
    gaps = {d: sorted(set(range(1, HORIZON + 1)) - set(hrs)) for d, hrs in days.items()
            if len(hrs) != HORIZON}
    if gaps:
        raise MissingHours(gaps)
    out = []
    for date in sorted(days):
        vec = np.zeros(HORIZON)
        for h, p in days[date].items():
            vec[hour_ending_to_slot(h) - 1] = p
        out.append(DailyPrices(date, as_price_vector(vec)))
    return out


def write_price_series(path, days) -> None:
    """Inverse of :func:`import_price_series` (horizon slots back to hour-ending)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PRICE_HEADER)
        for date, prices in days:
            by_hour = {hour: prices[hour_ending_to_slot(hour) - 1]
                       for hour in range(1, HORIZON + 1)}
            for hour in range(1, HORIZON + 1):
                w.writerow([date, hour, repr(float(by_hour[hour]))])


def synthetic_price_series(days: int = 31, start: str = "2012-01-01", seed: int = 2012,
                           base: float = 9.0) -> list[DailyPrices]:
    """Synthetic winter day-ahead prices in pence/kWh.

    A stand-in for a real hourly market series: a two-peak daily shape
    (morning and early evening), a day-to-day level drift and hourly noise,
    clipped to [5, 14] pence.
    """
    rng = np.random.default_rng(seed)
    hours = np.arange(1, HORIZON + 1)  # hour-ending
    shape = (1.0 + 0.18 * np.exp(-((hours - 9) / 2.0) ** 2)
             + 0.30 * np.exp(-((hours - 18.5) / 2.5) ** 2)
             - 0.15 * np.exp(-((hours - 4) / 3.0) ** 2))
    d0 = dt.date.fromisoformat(start)
    out = []
    level = base
    for i in range(days):
        level = 0.7 * level + 0.3 * base + rng.normal(0, 0.6)
        he = np.clip(level * shape + rng.normal(0, 0.25, HORIZON), 5.0, 14.0)
        he = np.round(he, 2)
        vec = np.zeros(HORIZON)
        for h in hours:
            vec[hour_ending_to_slot(int(h)) - 1] = he[h - 1]
        out.append(DailyPrices((d0 + dt.timedelta(days=i)).isoformat(), as_price_vector(vec)))
    return out
