"""Random small instances (<= 6 slots, grid-quantized) paired with oracle optima."""

from __future__ import annotations

import itertools

import numpy as np

from gridlevel.domain import (
    CurtailableSpec,
    CurtailMode,
    InterruptibleSpec,
    NonInterruptibleSpec,
    TimeWindow,
)

import oracles

STEP = 0.5


def random_prices(rng, ties=True):
    """24 prices in whole pence from a small set (ties likely) or in cents."""
    if ties:
        return rng.integers(8, 15, 24).astype(float)
    return np.round(rng.uniform(8, 14, 24), 2)


def _window(rng, max_len=6, horizon=6):
    n = int(rng.integers(1, max_len + 1))
    alpha = int(rng.integers(1, horizon - n + 2))
    return TimeWindow(alpha, alpha + n - 1)


def _multiple(rng, lo, hi):
    k_lo, k_hi = int(round(lo / STEP)), int(round(hi / STEP))
    return STEP * int(rng.integers(k_lo, k_hi + 1))


def interruptible(rng):
    w = _window(rng)
    n = len(w)
    pmin = float(rng.choice([0.0, 0.0, 0.5]))
    pmax = pmin + float(rng.choice([0.5, 1.0, 1.5, 2.0]))
    energy = _multiple(rng, max(n * pmin, STEP), n * pmax)
    spec = InterruptibleSpec(energy, pmin, pmax, w)
    prices = random_prices(rng, ties=bool(rng.integers(2)))
    best = oracles.enumerate_interruptible(prices, energy, pmin, pmax, w.alpha, w.beta, STEP)
    return prices, spec, best


def noninterruptible(rng):
    w = _window(rng)
    L = int(rng.integers(1, len(w) + 1))
    pmin = float(rng.choice([0.0, 0.5]))
    pmax = pmin + float(rng.choice([0.5, 1.0, 1.5]))
    energy = _multiple(rng, max(L * pmin, STEP), L * pmax)
    spec = NonInterruptibleSpec(energy, L, pmin, pmax, w)
    prices = random_prices(rng, ties=bool(rng.integers(2)))
    best, start = oracles.enumerate_noninterruptible(prices, energy, L, pmin, pmax,
                                                     w.alpha, w.beta, STEP)
    return prices, spec, best


def min_bill(rng):
    w = _window(rng)
    n = len(w)
    floor = tuple(float(v) for v in rng.choice([0.0, 0.5, 1.0], n))
    ceiling = tuple(f + float(v) for f, v in zip(floor, rng.choice([0.0, 0.5, 1.0, 1.5], n)))
    total = _multiple(rng, sum(floor), sum(ceiling))
    spec = CurtailableSpec(CurtailMode.MIN_BILL, w, floor, ceiling, min_total=total)
    prices = random_prices(rng, ties=bool(rng.integers(2)))
    best = oracles.enumerate_min_bill(prices, floor, ceiling, total, w.alpha, STEP)
    return prices, spec, best


def max_consumption(rng):
    w = _window(rng)
    n = len(w)
    floor = tuple(float(v) for v in rng.choice([0.0, 0.5, 0.8], n))
    ceiling = tuple(f + float(v) for f, v in zip(floor, rng.choice([0.0, 0.7, 1.2, 2.0], n)))
    prices = random_prices(rng, ties=bool(rng.integers(2)))
    p = prices[w.alpha - 1:w.beta]
    lo_cost, hi_cost = float(p @ np.array(floor)), float(p @ np.array(ceiling))
    budget = float(np.ceil(rng.uniform(lo_cost, hi_cost * 1.1 + 1) * 100) / 100)
    spec = CurtailableSpec(CurtailMode.MAX_CONSUMPTION, w, floor, ceiling, budget=budget)
    best = oracles.vertex_max_consumption(prices, floor, ceiling, budget, w.alpha)
    return prices, spec, best


GENERATORS = {"interruptible": interruptible, "noninterruptible": noninterruptible,
              "min_bill": min_bill, "max_consumption": max_consumption}


def rel_close(a, b, tol):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


# -- households for the joint oracle ------------------------------------------------

COARSE = 1.0


def _shiftable(rng, kind, name):
    n = int(rng.integers(1, 4))
    wait = int(rng.integers(0, 3))
    alpha = int(rng.integers(1, 24 - n - wait + 2))
    w = TimeWindow(alpha, alpha + n - 1)
    thresholds = tuple(float(t) for t in np.sort(rng.choice([0.0, 1.0, 2.0, 4.0, 8.0], wait)))
    pmax = float(rng.choice([1.0, 2.0]))
    if kind == "i":
        energy = float(rng.integers(1, int(n * pmax) + 1))
        return InterruptibleSpec(energy, 0.0, pmax, w, wait, thresholds, name=name)
    L = int(rng.integers(1, n + 1))
    energy = float(rng.integers(1, int(L * pmax) + 1))
    return NonInterruptibleSpec(energy, L, 0.0, pmax, w, wait, thresholds, name=name)


def _shiftable_candidates(spec, k):
    """Every coarse-grid 24-slot schedule of ``spec`` on its window extended by k."""
    alpha, beta = spec.window.alpha, spec.window.beta + k
    lv = oracles.grid_levels(spec.power_min, spec.power_max, COARSE)
    out = []
    if isinstance(spec, InterruptibleSpec):
        starts, width = [alpha], beta - alpha + 1
    else:
        starts, width = range(alpha, beta - spec.duration + 2), spec.duration
    for s in starts:
        block = oracles.grid_schedules([lv] * width, spec.energy_required)
        full = np.zeros((len(block), 24))
        full[:, s - 1:s - 1 + width] = block
        out.append(full)
    return np.concatenate(out)


def household(rng):
    """Random household: 1-3 coarse shiftable/min-bill loads plus a budget AC."""
    from gridlevel.domain import HouseholdSpec
    apps = []
    for j in range(int(rng.integers(1, 4))):
        kind = rng.choice(["i", "ni", "mb"])
        if kind == "mb":
            n = int(rng.integers(1, 4))
            alpha = int(rng.integers(1, 24 - n + 2))
            floor = tuple(float(v) for v in rng.integers(0, 2, n))
            ceiling = tuple(f + float(v) for f, v in zip(floor, rng.integers(0, 2, n)))
            total = float(rng.integers(int(sum(floor)), int(sum(ceiling)) + 1))
            apps.append(CurtailableSpec(CurtailMode.MIN_BILL, TimeWindow(alpha, alpha + n - 1),
                                        floor, ceiling, min_total=total, name=f"mb{j}"))
        else:
            apps.append(_shiftable(rng, kind, f"{kind}{j}"))
    prices = random_prices(rng, ties=bool(rng.integers(2)))
    n = int(rng.integers(2, 5))
    alpha = int(rng.integers(1, 24 - n + 2))
    floor = tuple(float(v) for v in rng.choice([0.0, 0.5], n))
    ceiling = tuple(f + float(v) for f, v in zip(floor, rng.choice([0.5, 1.5], n)))
    floor_cost = float(prices[alpha - 1:alpha - 1 + n] @ np.array(floor))
    budget = float(np.ceil(floor_cost) + rng.integers(0, 30))
    apps.append(CurtailableSpec(CurtailMode.MAX_CONSUMPTION, TimeWindow(alpha, alpha + n - 1),
                                floor, ceiling, budget=budget, name="ac"))
    order = rng.permutation(len(apps))
    house = HouseholdSpec(id=int(rng.integers(0, 1000)), appliances=tuple(apps[i] for i in order))
    return prices, house


def joint_oracle(prices, house, waiting=True):
    """Joint brute force over every appliance's coarse schedules at once.

    Savings of a wait are read off the joint optimum (all other loads free),
    then each waiting appliance picks its wait with the threshold rule.
    Budget-mode loads maximise consumption, not bill, and are solved by LP
    vertex enumeration and added on.
    """
    prices = np.asarray(prices)
    minbill, extra_bill = [], 0.0
    for a in house.appliances:
        if isinstance(a, CurtailableSpec) and a.mode is CurtailMode.MAX_CONSUMPTION:
            res = oracles.vertex_max_consumption(prices, a.floor, a.ceiling, a.budget,
                                                 a.window.alpha)
            extra_bill += res[1]
        else:
            minbill.append(a)

    def cands(a, k):
        if isinstance(a, CurtailableSpec):
            lv = [oracles.grid_levels(lo, hi, COARSE) for lo, hi in zip(a.floor, a.ceiling)]
            block = oracles.grid_schedules(lv, a.min_total)
            full = np.zeros((len(block), 24))
            full[:, a.window.alpha - 1:a.window.beta] = block
            return full
        return _shiftable_candidates(a, k)

    def joint(ks):
        total = np.zeros(())
        for a, k in zip(minbill, ks):
            bills = cands(a, k) @ prices
            total = np.add.outer(total, bills) if total.ndim else total + bills
        return float(total.min())

    zero = [0] * len(minbill)
    base = joint(zero)
    choice = list(zero)
    if waiting:
        for i, a in enumerate(minbill):
            K = getattr(a, "max_wait", 0)
            savings = []
            for k in range(1, K + 1):
                ks = list(zero)
                ks[i] = k
                savings.append(base - joint(ks))
            choice[i] = oracles.pick_wait(savings, a.thresholds)[0] if K else 0
    return joint(choice) + extra_bill


# -- a GA instance small enough to enumerate ------------------------------------------

def tiny_pricing_problem(free=(11, 12), bits=4):
    """One household, one interruptible load; only ``free`` slots have a price range.

    Every other hour is pinned (p_min == p_max), so the decoded lattice has
    ``(2**bits)**len(free)`` points. A revenue cap and a steep cost make the
    optimum non-trivial.
    """
    from gridlevel.domain import HouseholdSpec
    from gridlevel.retailer import CostParams, RetailerConstraints

    lo, hi = np.full(24, 12.0), np.full(24, 12.0)
    for s in free:
        lo[s - 1], hi[s - 1] = 8.0, 14.0
    cons = RetailerConstraints(tuple(lo), tuple(hi), hourly_supply_cap=100, revenue_cap=33)
    cost = CostParams(a=0.4)
    load = InterruptibleSpec(3.0, 0.0, 2.0, TimeWindow(free[0], free[-1]), name="ev")
    house = HouseholdSpec(0, (load,))
    return cons, cost, house


def lattice_optimum(cons, cost, house, bits):
    """Best profit over the whole decoded lattice, by brute force."""
    from gridlevel.ga import decode_batch
    from gridlevel.harness import InProcessTransport, PricingEvaluator
    from gridlevel.retailer import deb_key
    free = [h for h in range(24) if cons.price_min[h] != cons.price_max[h]]
    grids = []
    for combo in itertools.product(range(2 ** bits), repeat=len(free)):
        row = np.zeros((24, bits), dtype=np.uint8)
        for h, v in zip(free, combo):
            row[h] = [(v >> (bits - 1 - b)) & 1 for b in range(bits)]
        grids.append(row.reshape(-1))
    prices = decode_batch(np.array(grids), cons, bits)
    evaluate = PricingEvaluator(InProcessTransport([house]), cost, cons)
    evs = evaluate(prices)
    return min(evs, key=deb_key)
