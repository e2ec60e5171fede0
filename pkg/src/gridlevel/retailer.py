"""Retailer side: supply cost, profit and constraint violation of a pricing."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import HORIZON, DomainError, round_money, to_cents


@dataclass(frozen=True)
class CostParams:
    """Quadratic hourly supply cost ``a*L**2 + b*L + c``."""

    a: tuple[float, ...]
    b: tuple[float, ...] = (0.0,) * HORIZON
    c: tuple[float, ...] = (0.0,) * HORIZON

    def __post_init__(self):
        for name in ("a", "b", "c"):
            vals = tuple(float(v) for v in np.broadcast_to(getattr(self, name), (HORIZON,)))
            object.__setattr__(self, name, vals)
        if any(v <= 0 for v in self.a) or any(v < 0 for v in self.b + self.c):
            raise DomainError("need a_h > 0, b_h >= 0 and c_h >= 0")

    def to_dict(self):
        return {"a": list(self.a), "b": list(self.b), "c": list(self.c)}

    @classmethod
    def from_dict(cls, d):
        return cls(a=tuple(d["a"]), b=tuple(d.get("b", (0.0,) * HORIZON)),
                   c=tuple(d.get("c", (0.0,) * HORIZON)))


@dataclass(frozen=True)
class RetailerConstraints:
    price_min: tuple[float, ...]
    price_max: tuple[float, ...]
    hourly_supply_cap: float
    revenue_cap: float

    def __post_init__(self):
        for name in ("price_min", "price_max"):
            vals = tuple(float(v) for v in np.broadcast_to(getattr(self, name), (HORIZON,)))
            object.__setattr__(self, name, vals)
        if any(lo > hi for lo, hi in zip(self.price_min, self.price_max)):
            raise DomainError("price_min must not exceed price_max")
        if self.hourly_supply_cap <= 0 or self.revenue_cap <= 0:
            raise DomainError("supply and revenue caps must be positive")

    def with_revenue_cap(self, revenue_cap):
        return RetailerConstraints(self.price_min, self.price_max,
                                   self.hourly_supply_cap, revenue_cap)

    def to_dict(self):
        return {"p_min": list(self.price_min), "p_max": list(self.price_max),
                "E_h_max": self.hourly_supply_cap, "R_max": self.revenue_cap}

    @classmethod
    def from_dict(cls, d):
        return cls(price_min=tuple(d["p_min"]), price_max=tuple(d["p_max"]),
                   hourly_supply_cap=float(d["E_h_max"]), revenue_cap=float(d["R_max"]))


@dataclass(frozen=True)
class EvaluatedPricing:
    prices: np.ndarray
    aggregate_load: np.ndarray
    revenue: float
    supply_cost: float
    profit: float
    violation: float
    feasible: bool


def supply_cost(load, params: CostParams):
    """Total supply cost of an hourly load; accepts ``(..., 24)`` arrays."""
    load = np.asarray(load, dtype=float)
    a, b, c = (np.asarray(v) for v in (params.a, params.b, params.c))
    per_hour = a * load ** 2 + b * load + c
    acc = per_hour[..., 0].copy()
    for h in range(1, HORIZON):
        acc += per_hour[..., h]
    return acc if acc.ndim else float(acc)


def _revenue(prices, load):
    prod = prices * load
    acc = prod[..., 0].copy()
    for h in range(1, HORIZON):
        acc += prod[..., h]
    return acc


def evaluate_batch(prices, loads, params: CostParams,
                   constraints: RetailerConstraints) -> list[EvaluatedPricing]:
    """Evaluate ``B`` candidate pricings against their aggregate loads."""
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    loads = np.atleast_2d(np.asarray(loads, dtype=float))
    revenue = round_money(_revenue(prices, loads))
    cost = round_money(supply_cost(loads, params))
    profit = round_money(revenue - cost)

    pmin = np.asarray(constraints.price_min)
    pmax = np.asarray(constraints.price_max)
    p_c = to_cents(prices)
    over_c = np.maximum(0, p_c - to_cents(pmax)) / 100.0
    under_c = np.maximum(0, to_cents(pmin) - p_c) / 100.0
    cap = constraints.hourly_supply_cap
    load_over = np.maximum(0.0, loads - cap)
    rev_c = to_cents(revenue)
    rcap_c = to_cents(constraints.revenue_cap)
    violation = (_sum_rows(over_c / pmax) + _sum_rows(under_c / pmax)
                 + _sum_rows(load_over / cap)
                 + np.maximum(0, rev_c - rcap_c) / 100.0 / constraints.revenue_cap)
    feasible = violation == 0

    out = []
    for i in range(prices.shape[0]):
        p = prices[i].copy()
        load = loads[i].copy()
        p.flags.writeable = False
        load.flags.writeable = False
        out.append(EvaluatedPricing(prices=p, aggregate_load=load,
                                    revenue=float(revenue[i]), supply_cost=float(cost[i]),
                                    profit=float(profit[i]), violation=float(violation[i]),
                                    feasible=bool(feasible[i])))
    return out


def _sum_rows(x):
    acc = x[..., 0].copy()
    for h in range(1, x.shape[-1]):
        acc += x[..., h]
    return acc


def evaluate_pricing(prices, aggregate_load, params: CostParams,
                     constraints: RetailerConstraints) -> EvaluatedPricing:
    return evaluate_batch(np.asarray(prices)[None], np.asarray(aggregate_load)[None],
                          params, constraints)[0]


def deb_key(ev: EvaluatedPricing) -> tuple:
    """Sort key for the feasibility rules: smaller is better."""
    if ev.feasible:
        return (0, -ev.profit)
    return (1, ev.violation)


def deb_compare(x: EvaluatedPricing, y: EvaluatedPricing) -> int:
    """-1 if ``x`` is better, 1 if ``y`` is better, 0 if tied.

    Feasible beats infeasible, feasible pairs compare by profit, infeasible
    pairs by total violation.
    """
    kx, ky = deb_key(x), deb_key(y)
    return (kx > ky) - (kx < ky)
