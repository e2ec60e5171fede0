"""Independent reference solvers used by the test-suite.

Nothing here imports the greedy kernels. Shiftable and min-bill problems are
solved by exhaustive enumeration over a power grid; when every bound and the
energy target are grid multiples the continuous optimum sits on the grid, so
enumeration is exact. Budget-mode curtailment is solved by enumerating LP
vertices (every hour at a bound except at most one).
"""

from __future__ import annotations

import itertools
import math

import numpy as np

HORIZON = 24


def grid_levels(lo: float, hi: float, step: float) -> np.ndarray:
    n = int(round((hi - lo) / step))
    return lo + step * np.arange(n + 1)


def grid_schedules(levels: list[np.ndarray], total: float | None = None) -> np.ndarray:
    """All combinations of per-slot levels, optionally with a fixed sum."""
    combos = np.array(list(itertools.product(*levels)), dtype=float).reshape(-1, len(levels))
    if total is not None:
        combos = combos[np.abs(combos.sum(axis=1) - total) < 1e-9]
    return combos


def enumerate_interruptible(prices, energy, pmin, pmax, alpha, beta, step):
    """Min bill over grid schedules on slots ``alpha..beta`` (1-based)."""
    p = np.asarray(prices)[alpha - 1:beta]
    lv = grid_levels(pmin, pmax, step)
    combos = grid_schedules([lv] * len(p), energy)
    if not len(combos):
        return math.inf
    return float((combos @ p).min())


def enumerate_noninterruptible(prices, energy, duration, pmin, pmax, alpha, beta, step):
    """Min bill over every contiguous start and grid profile."""
    lv = grid_levels(pmin, pmax, step)
    combos = grid_schedules([lv] * duration, energy)
    if not len(combos):
        return math.inf, None
    best, best_start = math.inf, None
    for s in range(alpha, beta - duration + 2):
        p = np.asarray(prices)[s - 1:s - 1 + duration]
        bill = float((combos @ p).min())
        if bill < best - 1e-12:
            best, best_start = bill, s
    return best, best_start


def enumerate_min_bill(prices, floor, ceiling, min_total, alpha, step):
    p = np.asarray(prices)[alpha - 1:alpha - 1 + len(floor)]
    levels = [grid_levels(lo, hi, step) for lo, hi in zip(floor, ceiling)]
    combos = grid_schedules(levels, min_total)
    return float((combos @ p).min())


def vertex_max_consumption(prices, floor, ceiling, budget, alpha):
    """Max consumption s.t. bill <= budget, by LP vertex enumeration.

    Returns ``(consumption, bill)`` of the best vertex, or ``None`` if even
    the floor is unaffordable.
    """
    p = np.asarray(prices)[alpha - 1:alpha - 1 + len(floor)]
    lo, hi = np.asarray(floor), np.asarray(ceiling)
    if p @ lo > budget + 1e-9:
        return None
    best = (-math.inf, 0.0)
    n = len(p)
    for pattern in itertools.product((0, 1), repeat=n):
        x = np.where(pattern, hi, lo).astype(float)
        cands = [x]
        for j in range(n):
            # hour j takes whatever budget the other hours leave
            y = x.copy()
            rest = p @ y - p[j] * y[j]
            if p[j] > 0:
                y[j] = (budget - rest) / p[j]
                if lo[j] - 1e-12 <= y[j] <= hi[j] + 1e-12:
                    cands.append(np.clip(y, lo, hi))
        for y in cands:
            bill = float(p @ y)
            if bill <= budget + 1e-9 and y.sum() > best[0] + 1e-12:
                best = (float(y.sum()), bill)
    return best


def pick_wait(savings, thresholds):
    """Threshold rule, written independently: argmax saving among the
    k whose saving reaches C_k, first k on ties; (0, 0) when none qualify.
    """
    best_k, best_s = 0, 0.0
    for k, (s, c) in enumerate(zip(savings, thresholds), start=1):
        if not math.isfinite(s):
            continue
        s_c, c_c = round(s * 100), round(c * 100)
        if s_c >= c_c and (best_k == 0 or s_c > round(best_s * 100)):
            best_k, best_s = k, s
    return best_k, best_s


def lattice_profit(prices, load, a, b=0.0, c=0.0):
    prices, load = np.asarray(prices), np.asarray(load)
    return float(prices @ load - (a * load ** 2 + b * load + c).sum())
