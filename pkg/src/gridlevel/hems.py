"""Household energy management: exact per-appliance schedulers.

Every appliance sub-problem is a continuous knapsack with box constraints, so
each is solved exactly by a greedy fill in ascending price order. Ties go to
the earlier hour, then to the shorter wait, so results are canonical.

The kernels work on a batch of price vectors (shape ``(B, 24)``) and a block
of appliances of one class at a time. Every per-appliance quantity is built
from elementwise ops, gathers, stable sorts and sequential reductions along
the hour axis, so a row's result does not depend on what else is in the
batch. That is what lets a single meter and a pooled population solve agree
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

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
    to_cents,
    validate_household,
)

_TOL = 1e-9
_HOURS = np.arange(HORIZON)


class Infeasible(ValueError):
    """An appliance sub-problem has no feasible schedule."""

    def __init__(self, message, appliance=None, customer_id=None):
        super().__init__(message)
        self.appliance = appliance
        self.customer_id = customer_id


class FloorUnaffordable(Infeasible):
    """Budget-mode curtailable load cannot even pay for its floor profile."""


@dataclass(frozen=True)
class ApplianceResult:
    schedule: np.ndarray
    bill: float
    wait_used: int = 0
    start_slot: int | None = None


@dataclass(frozen=True)
class HouseholdResponse:
    customer_id: int
    total_schedule: np.ndarray
    bill: float
    per_appliance: tuple[ApplianceResult, ...]
    cap_violations: tuple[tuple[int, float], ...] = ()


def hour_sum(x: np.ndarray) -> np.ndarray:
    """Sum over the last axis in strict left-to-right order."""
    acc = x[..., 0].copy()
    for h in range(1, x.shape[-1]):
        acc += x[..., h]
    return acc


def _exclusive_cumsum(x: np.ndarray) -> np.ndarray:
    out = np.zeros_like(x)
    np.cumsum(x[..., :-1], axis=-1, out=out[..., 1:])
    return out


def price_order(prices: np.ndarray) -> np.ndarray:
    """Hour indices in ascending price; equal prices keep hour order."""
    return np.argsort(prices, axis=-1, kind="stable")


def choose_wait(savings, thresholds) -> tuple[int, float]:
    """Pick the waiting length from per-k savings and thresholds.

    ``savings[i]`` and ``thresholds[i]`` refer to a wait of ``i + 1`` hours.
    Every k whose saving reaches its threshold is a candidate; the candidate
    with the largest saving wins, the shorter wait on ties. Money is compared
    at 1/100 pence.
    """
    raw = np.asarray(savings, dtype=float).reshape(-1)
    sav = np.rint(raw * 100.0)
    thr = np.rint(np.asarray(thresholds, dtype=float).reshape(-1) * 100.0)
    if sav.shape != thr.shape:
        raise ValueError("need one threshold per waiting length")
    best_k, best = 0, -1.0
    for i, (s, c) in enumerate(zip(sav, thr)):
        if np.isfinite(s) and s >= c and s > best:
            best_k, best = i + 1, s
    if best_k == 0:
        return 0, 0.0
    return best_k, float(raw[best_k - 1])


def _wait_choice(bills: np.ndarray, thr_c: np.ndarray, kvalid: np.ndarray) -> np.ndarray:
    """Vectorized :func:`choose_wait` over ``bills[..., k]`` for k = 0..Kmax."""
    with np.errstate(invalid="ignore"):
        savings = bills[..., :1] - bills
    finite = np.isfinite(savings)
    sav_c = np.where(finite, np.rint(np.where(finite, savings, 0.0) * 100.0), -1.0)
    cand = kvalid & finite & (sav_c >= thr_c)
    cand[..., 0] = False
    score = np.where(cand, sav_c, -1.0)
    return np.argmax(score, axis=-1)


# -- class kernels -----------------------------------------------------------

def _fill_cheapest(prices, order, floor, cap, extra):
    """Greedy min-cost fill.

    ``floor``/``cap`` have shape ``(..., 24)`` broadcastable against a leading
    batch axis, ``extra`` the energy to place above the floor. Returns the
    schedules with shape ``(B, ..., 24)``.
    """
    lead = floor.ndim - 1
    idx = order.reshape(order.shape[:1] + (1,) * lead + (HORIZON,))
    cap_s = np.take_along_axis(cap[None], idx, axis=-1)
    before = _exclusive_cumsum(cap_s)
    alloc_s = np.clip(extra[None, ..., None] - before, 0.0, cap_s)
    inv = np.argsort(idx, axis=-1, kind="stable")
    return floor[None] + np.take_along_axis(alloc_s, inv, axis=-1)


class _PriceContext:
    """Per-batch quantities shared by every appliance.

    ``rank[b, h]`` is hour ``h``'s position in the stable ascending price
    order, padded with a sentinel column ``rank[b, 24] = 24``.
    """

    def __init__(self, prices: np.ndarray):
        self.prices = prices
        self.order = price_order(prices)
        self.rank = np.full((prices.shape[0], HORIZON + 1), HORIZON, dtype=np.int64)
        np.put_along_axis(self.rank, self.order, _HOURS[None, :], axis=-1)
        self.rank8 = self.rank.astype(np.int8)

    def window_table(self, starts: np.ndarray, ends: np.ndarray):
        """Sorted prices, prefix sums and sorted hours per window ``[start, end]``.

        All three are ``(B, W, Lmax + 1)``; positions past a window's length
        hold price 0 and the sentinel hour 24.
        """
        lens = ends - starts + 1
        lw = int(lens.max())
        pos = np.arange(lw)
        inside = pos < lens[:, None]
        hours = np.where(inside, starts[:, None] + pos, HORIZON)  # (W, Lmax)
        B = self.prices.shape[0]
        key = self.rank[:, hours]  # sentinel rank sorts last
        srt = np.argsort(key, axis=-1, kind="stable")
        hours_s = np.full((B,) + hours.shape[:1] + (lw + 1,), HORIZON, dtype=np.int64)
        hours_s[..., :lw] = np.take_along_axis(np.broadcast_to(hours, key.shape), srt, axis=-1)
        padded_prices = np.concatenate([self.prices, np.zeros((B, 1))], axis=1)
        price_s = np.take_along_axis(padded_prices, hours_s.reshape(B, -1), axis=-1)
        price_s = price_s.reshape(hours_s.shape)
        return price_s, _exclusive_cumsum(price_s), hours_s

    def schedule(self, start, end, marginal, gmin, cap, rem):
        """Window schedule given the marginal hour of the greedy fill.

        Hours ranked before ``marginal`` run at ``gmin + cap``, the marginal
        hour at ``gmin + rem``, the rest of the window at ``gmin``. All
        arguments are ``(B, M)``.
        """
        r_star = np.take_along_axis(self.rank8, marginal, axis=-1)[..., None]  # (B, M, 1)
        r = self.rank8[:, None, :HORIZON]
        fill = np.where(r < r_star, cap[..., None], 0.0)
        # ranks are a permutation, so equal rank means the marginal hour itself
        np.copyto(fill, np.broadcast_to(rem[..., None], fill.shape), where=r == r_star)
        fill += gmin[..., None]
        h = _HOURS[None, None, :]
        fill *= (h >= start[..., None]) & (h <= end[..., None])
        return fill


class _WindowFill:
    """Min bills of a greedy fill over many windows, plus what the schedule needs."""

    def __init__(self, ctx, starts, ends, valid, gmin, cap, extra):
        s = np.where(valid, starts, 0)
        e = np.where(valid, ends, 0)
        code = s * HORIZON + e
        uniq, inv = np.unique(code.reshape(-1), return_inverse=True)
        self.inv = inv.reshape(code.shape)
        price_s, prefix, self.hours_s = ctx.window_table(uniq // HORIZON, uniq % HORIZON)
        n = e - s + 1
        gmin, cap, extra = np.broadcast_arrays(gmin, cap, extra)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(cap > 0, np.floor(extra / cap), 0)
        q = np.clip(q, 0, n).astype(np.int64)
        rem = np.clip(extra - q * cap, 0.0, cap)
        self.q = np.broadcast_to(q, self.inv.shape)
        self.rem = np.broadcast_to(rem, self.inv.shape)
        total = prefix[:, self.inv, -1]
        self.bills = (gmin * total + cap * prefix[:, self.inv, self.q]
                      + self.rem * price_s[:, self.inv, self.q])

    def marginal(self, pick):
        """Marginal hour and remainder for a per-row choice along the last axis."""
        w = np.take_along_axis(np.broadcast_to(self.inv, pick.shape[:1] + self.inv.shape),
                               pick[..., None], axis=-1)[..., 0]
        q = np.take_along_axis(np.broadcast_to(self.q, w.shape[:1] + self.q.shape),
                               pick[..., None], axis=-1)[..., 0]
        rem = np.take_along_axis(np.broadcast_to(self.rem, w.shape[:1] + self.rem.shape),
                                 pick[..., None], axis=-1)[..., 0]
        bi = np.arange(w.shape[0])[:, None]
        return self.hours_s[bi, w, q], rem


@dataclass
class _InterruptibleBlock:
    alpha: np.ndarray  # 0-based first slot
    beta: np.ndarray  # 0-based last slot
    K: np.ndarray
    thr_c: np.ndarray  # (M, Kmax + 1); column 0 unused
    E: np.ndarray
    gmin: np.ndarray
    gmax: np.ndarray

    @classmethod
    def build(cls, specs, windows=None, waiting=True):
        M = len(specs)
        windows = windows or [s.window for s in specs]
        K = np.array([s.max_wait if waiting else 0 for s in specs], dtype=int)
        kmax = int(K.max()) if M else 0
        thr = np.full((M, kmax + 1), np.inf)
        for i, s in enumerate(specs):
            if K[i]:
                thr[i, 1:K[i] + 1] = to_cents(s.thresholds)
        return cls(alpha=np.array([w.alpha - 1 for w in windows]),
                   beta=np.array([w.beta - 1 for w in windows]),
                   K=K, thr_c=thr,
                   E=np.array([s.energy_required for s in specs], dtype=float),
                   gmin=np.array([s.power_min for s in specs], dtype=float),
                   gmax=np.array([s.power_max for s in specs], dtype=float))

    def solve(self, ctx: _PriceContext):
        """Return schedules ``(B, M, 24)``, chosen waits, per-k bills, base feasibility."""
        ks = np.arange(self.thr_c.shape[1])
        ends = self.beta[:, None] + ks[None, :]
        kvalid = (ks[None, :] <= self.K[:, None]) & (ends < HORIZON)
        n = ends - self.alpha[:, None] + 1
        cap = (self.gmax - self.gmin)[:, None]
        extra = self.E[:, None] - self.gmin[:, None] * n
        feasible = kvalid & (extra >= -_TOL) & (extra <= cap * n + _TOL)
        fill = _WindowFill(ctx, np.broadcast_to(self.alpha[:, None], ends.shape), ends,
                           kvalid, self.gmin[:, None], cap, np.maximum(extra, 0.0))
        bills = np.where(feasible[None], fill.bills, np.inf)
        kstar = _wait_choice(bills, self.thr_c[None], kvalid[None])
        marginal, rem = fill.marginal(kstar)
        shape = kstar.shape
        x = ctx.schedule(np.broadcast_to(self.alpha, shape), self.beta[None, :] + kstar,
                         marginal, np.broadcast_to(self.gmin, shape),
                         np.broadcast_to(self.gmax - self.gmin, shape), rem)
        return x, kstar, bills, feasible[:, 0]


@dataclass
class _NonInterruptibleBlock:
    alpha: np.ndarray
    beta: np.ndarray
    K: np.ndarray
    thr_c: np.ndarray
    E: np.ndarray
    L: np.ndarray
    gmin: np.ndarray
    gmax: np.ndarray

    @classmethod
    def build(cls, specs, windows=None, waiting=True):
        base = _InterruptibleBlock.build(specs, windows, waiting)
        return cls(alpha=base.alpha, beta=base.beta, K=base.K, thr_c=base.thr_c,
                   E=base.E, gmin=base.gmin, gmax=base.gmax,
                   L=np.array([s.duration for s in specs], dtype=int))

    def solve(self, ctx: _PriceContext):
        """Enumerate starts; each fixed-start sub-problem is a greedy fill.

        The earliest start wins among equal bills.
        """
        nstart = max(int(np.max(self.beta + self.K - self.L + 2 - self.alpha)), 1)
        s = self.alpha[:, None] + np.arange(nstart)[None, :]  # (M, J)
        end = s + self.L[:, None] - 1
        cap = self.gmax - self.gmin
        extra = np.maximum(self.E - self.gmin * self.L, 0.0)
        fill = _WindowFill(ctx, s, end, end < HORIZON, self.gmin[:, None],
                           cap[:, None], extra[:, None])
        bill_start = fill.bills  # (B, M, J)

        ks = np.arange(self.thr_c.shape[1])
        # starts allowed with wait k form a prefix j <= last[k]; the best start
        # of a prefix is its earliest strict running minimum (bills compared
        # after rounding to 1e-9 pence so float noise cannot break ties)
        keyed = np.where((end < HORIZON)[None], np.round(bill_start, 9), np.inf)
        runmin = np.minimum.accumulate(keyed, axis=-1)
        record = np.ones(keyed.shape, dtype=bool)
        record[..., 1:] = keyed[..., 1:] < runmin[..., :-1]
        j = np.arange(nstart)
        best_upto = np.maximum.accumulate(np.where(record, j, 0), axis=-1)  # (B, M, J)
        last = self.beta[:, None] + ks[None, :] - self.L[:, None] + 1 - self.alpha[:, None]
        kvalid = (ks[None, :] <= self.K[:, None]) & (self.beta[:, None] + ks < HORIZON)
        found = kvalid & (last >= 0)  # (M, K)
        last = np.clip(last, 0, nstart - 1)
        jbest = np.take_along_axis(best_upto, np.broadcast_to(last, best_upto.shape[:1] + last.shape),
                                   axis=-1)  # (B, M, K)
        bills = np.take_along_axis(bill_start, jbest, axis=-1)
        bills = np.where(found[None], bills, np.inf)
        kstar = _wait_choice(bills, self.thr_c[None], kvalid[None])
        jstar = np.take_along_axis(jbest, kstar[..., None], axis=-1)[..., 0]  # (B, M)

        start = self.alpha[None, :] + jstar
        marginal, rem = fill.marginal(jstar)
        shape = start.shape
        x = ctx.schedule(start, start + self.L - 1, marginal,
                         np.broadcast_to(self.gmin, shape), np.broadcast_to(cap, shape), rem)
        feasible = ((self.L <= self.beta - self.alpha + 1)
                    & (self.L * self.gmin <= self.E + _TOL)
                    & (self.E <= self.L * self.gmax + _TOL))
        return x, kstar, start, bills, feasible


@dataclass
class _CurtailableBlock:
    floor: np.ndarray  # (M, 24)
    cap: np.ndarray  # (M, 24) ceiling - floor
    min_total: np.ndarray
    budget: np.ndarray
    maxmode: np.ndarray  # bool (M,)

    @classmethod
    def build(cls, specs):
        floor = np.array([s.floor_profile() for s in specs])
        ceil = np.array([s.ceiling_profile() for s in specs])
        return cls(floor=floor, cap=ceil - floor,
                   min_total=np.array([s.min_total if s.min_total is not None else 0.0
                                       for s in specs], dtype=float),
                   budget=np.array([s.budget if s.budget is not None else 0.0
                                    for s in specs], dtype=float),
                   maxmode=np.array([s.mode is CurtailMode.MAX_CONSUMPTION for s in specs]))

    def solve(self, ctx: _PriceContext):
        """Return schedules and a per-row floor-affordability flag."""
        prices, order = ctx.prices, ctx.order
        # min-bill rows: cheapest-first fill of (min_total - sum floor)
        if self.maxmode.all():
            x_min = 0.0
        else:
            extra = np.maximum(self.min_total - hour_sum(self.floor), 0.0)
            x_min = _fill_cheapest(prices, order, self.floor, self.cap, extra)
        if not self.maxmode.any():
            return x_min, np.ones((prices.shape[0], len(self.maxmode)), dtype=bool)

        # budget rows: spend the residual budget cheapest-first
        floor_cost = hour_sum(prices[:, None, :] * self.floor[None])  # (B, M)
        residual = self.budget[None] - floor_cost
        affordable = (to_cents(floor_cost) <= to_cents(self.budget)[None]) | ~self.maxmode[None]
        idx = order[:, None, :]
        cap_s = np.take_along_axis(self.cap[None], idx, axis=-1)
        price_s = np.take_along_axis(prices, order, axis=-1)[:, None, :]
        spent_before = _exclusive_cumsum(price_s * cap_s)
        room = np.maximum(residual, 0.0)[..., None] - spent_before
        with np.errstate(divide="ignore", invalid="ignore"):
            alloc_s = np.where(price_s > 0, np.clip(room / price_s, 0.0, cap_s), cap_s)
        inv = np.argsort(idx, axis=-1, kind="stable")
        x_max = self.floor[None] + np.take_along_axis(alloc_s, inv, axis=-1)

        x = np.where(self.maxmode[None, :, None], x_max, x_min)
        return x, affordable


# -- population bank -----------------------------------------------------------

class HouseholdBank:
    """Compiled batch solver for a fixed list of households.

    ``respond`` maps a batch of price vectors to every household's hourly load
    and bill. Household totals are accumulated in appliance order, so results
    match solving each household on its own.
    """

    def __init__(self, households, waiting: bool = True):
        self.households = list(households)
        self.waiting = waiting
        self.n_positions = max((len(h.appliances) for h in self.households), default=0)
        groups = {"i": [], "ni": [], "c": []}
        for hi, h in enumerate(self.households):
            for pos, app in enumerate(h.appliances):
                key = ("i" if isinstance(app, InterruptibleSpec)
                       else "ni" if isinstance(app, NonInterruptibleSpec) else "c")
                groups[key].append((hi, pos, app))
        self._groups = {}
        for key, rows in groups.items():
            if not rows:
                continue
            owners = np.array([r[0] for r in rows])
            positions = np.array([r[1] for r in rows])
            specs = [r[2] for r in rows]
            if key == "i":
                block = _InterruptibleBlock.build(specs, waiting=waiting)
            elif key == "ni":
                block = _NonInterruptibleBlock.build(specs, waiting=waiting)
            else:
                block = _CurtailableBlock.build(specs)
            self._groups[key] = (owners, positions, specs, block)
        # per position: where each class block keeps that position's rows
        everyone = np.arange(len(self.households))
        self._plan = []
        for pos in range(self.n_positions):
            parts = []
            for key, (owners, positions, _, _) in self._groups.items():
                idx = np.flatnonzero(positions == pos)
                if not len(idx):
                    continue
                step = int(idx[1] - idx[0]) if len(idx) > 1 else 1
                if step > 0 and (np.diff(idx) == step).all():
                    idx = slice(int(idx[0]), int(idx[-1]) + 1, step)  # view, no copy
                whole = np.array_equal(owners[idx], everyone)
                parts.append((key, idx, owners[idx], whole))
            self._plan.append(parts)

    def _solve_groups(self, ctx: _PriceContext):
        """Per class: ``(x (B, M, 24), waits (B, M) or None, starts (B, M) or None)``."""
        out = {}
        for key, (owners, positions, specs, block) in self._groups.items():
            if key == "i":
                x, kstar, _, feasible = block.solve(ctx)
                self._raise_if(~feasible, owners, specs, "infeasible-energy")
                out[key] = (x, kstar, None)
            elif key == "ni":
                x, kstar, start, _, feasible = block.solve(ctx)
                self._raise_if(~feasible, owners, specs, "infeasible-energy")
                out[key] = (x, kstar, start + 1)
            else:
                x, affordable = block.solve(ctx)
                bad = ~affordable.all(axis=0)
                if bad.any():
                    i = int(np.flatnonzero(bad)[0])
                    raise FloorUnaffordable(
                        f"customer {self.households[owners[i]].id}: floor of "
                        f"{specs[i].name} exceeds budget {specs[i].budget}",
                        appliance=specs[i].name, customer_id=self.households[owners[i]].id)
                out[key] = (x, None, None)
        return out

    def solve(self, prices):
        """Solve every appliance; returns ``(per_app, waits, starts)``.

        ``per_app`` has shape ``(B, n_households, n_positions, 24)``.
        """
        prices = _as_batch(prices)
        B = prices.shape[0]
        per_app = np.zeros((B, len(self.households), self.n_positions, HORIZON))
        waits = np.zeros((B, len(self.households), self.n_positions), dtype=int)
        starts = np.full((B, len(self.households), self.n_positions), -1, dtype=int)
        for key, (x, kstar, start) in self._solve_groups(_PriceContext(prices)).items():
            owners, positions = self._groups[key][:2]
            per_app[:, owners, positions] = x
            if kstar is not None:
                waits[:, owners, positions] = kstar
            if start is not None:
                starts[:, owners, positions] = start
        return per_app, waits, starts

    def _raise_if(self, mask, owners, specs, code):
        if mask.any():
            i = int(np.flatnonzero(mask)[0])
            cid = self.households[owners[i]].id
            raise Infeasible(f"customer {cid}: {specs[i].name} {code}",
                             appliance=specs[i].name, customer_id=cid)

    def respond(self, prices):
        """Return ``(loads (B, N, 24), bills (B, N))``.

        Same arithmetic as :meth:`totals` over :meth:`solve`, without
        materialising every appliance schedule.
        """
        prices = _as_batch(prices)
        solved = self._solve_groups(_PriceContext(prices))
        B, N = prices.shape[0], len(self.households)
        loads = np.zeros((B, N, HORIZON))
        bills = np.zeros((B, N))
        for parts in self._plan:
            if len(parts) == 1 and parts[0][3]:
                key, idx, _, _ = parts[0]
                x_pos = solved[key][0][:, idx]
            else:
                x_pos = np.zeros((B, N, HORIZON))
                for key, idx, owners, _ in parts:
                    x_pos[:, owners] = solved[key][0][:, idx]
            loads = loads + x_pos
            bills = bills + hour_sum(prices[:, None, :] * x_pos)
        return loads, bills

    def totals(self, prices, per_app):
        loads = np.zeros(per_app.shape[:2] + (HORIZON,))
        bills = np.zeros(per_app.shape[:2])
        for pos in range(self.n_positions):
            loads = loads + per_app[:, :, pos, :]
            bills = bills + hour_sum(prices[:, None, :] * per_app[:, :, pos, :])
        return loads, bills


def _as_batch(prices) -> np.ndarray:
    prices = np.asarray(prices, dtype=float)
    return prices[None] if prices.ndim == 1 else prices


# -- scalar API ----------------------------------------------------------------

def _single_price(prices) -> np.ndarray:
    return np.asarray(as_price_vector(prices))[None]


def _result(prices, x, wait=0, start=None) -> ApplianceResult:
    x = np.array(x)
    x.flags.writeable = False
    bill = float(hour_sum(prices[0] * x))
    return ApplianceResult(schedule=x, bill=bill, wait_used=int(wait), start_slot=start)


def solve_interruptible(prices, spec: InterruptibleSpec,
                        window: TimeWindow | None = None) -> ApplianceResult:
    """Cheapest schedule for a splittable load on ``window`` (no waiting)."""
    p = _single_price(prices)
    window = window or spec.window
    if window.beta > HORIZON:
        raise Infeasible("window runs past the horizon", spec.name)
    block = _InterruptibleBlock.build([spec], [window], waiting=False)
    x, _, _, feasible = block.solve(_PriceContext(p))
    if not feasible[0]:
        raise Infeasible(f"{spec.name}: energy {spec.energy_required} cannot be placed "
                         f"in {len(window)} slots with power in "
                         f"[{spec.power_min}, {spec.power_max}]", spec.name)
    return _result(p, x[0, 0])


def solve_noninterruptible(prices, spec: NonInterruptibleSpec,
                           window: TimeWindow | None = None) -> ApplianceResult:
    """Best contiguous run of ``duration`` slots; earliest start on ties."""
    p = _single_price(prices)
    window = window or spec.window
    block = _NonInterruptibleBlock.build([spec], [window], waiting=False)
    if spec.duration > len(window):
        raise Infeasible(f"{spec.name}: duration {spec.duration} exceeds window "
                         f"of {len(window)} slots", spec.name)
    x, _, start, _, feasible = block.solve(_PriceContext(p))
    if not feasible[0]:
        raise Infeasible(f"{spec.name}: energy incompatible with duration and power bounds",
                         spec.name)
    return _result(p, x[0, 0], start=int(start[0, 0]) + 1)


def _check_curtailable(spec, mode):
    if spec.mode is not mode:
        raise ValueError(f"{spec.name} is a {spec.mode.value} appliance")


def solve_curtailable_min_bill(prices, spec: CurtailableSpec) -> ApplianceResult:
    _check_curtailable(spec, CurtailMode.MIN_BILL)
    if not (sum(spec.floor) - _TOL <= spec.min_total <= sum(spec.ceiling) + _TOL):
        raise Infeasible(f"{spec.name}: min_total outside [sum floor, sum ceiling]", spec.name)
    p = _single_price(prices)
    x, _ = _CurtailableBlock.build([spec]).solve(_PriceContext(p))
    return _result(p, x[0, 0])


def solve_curtailable_max_consumption(prices, spec: CurtailableSpec) -> ApplianceResult:
    _check_curtailable(spec, CurtailMode.MAX_CONSUMPTION)
    p = _single_price(prices)
    x, affordable = _CurtailableBlock.build([spec]).solve(_PriceContext(p))
    if not affordable[0, 0]:
        raise FloorUnaffordable(f"{spec.name}: floor profile costs more than the "
                                f"budget of {spec.budget} pence", spec.name)
    return _result(p, x[0, 0])


def solve_appliance(prices, spec, window: TimeWindow | None = None) -> ApplianceResult:
    """Dispatch to the class solver (curtailable loads ignore ``window``)."""
    if isinstance(spec, InterruptibleSpec):
        return solve_interruptible(prices, spec, window)
    if isinstance(spec, NonInterruptibleSpec):
        return solve_noninterruptible(prices, spec, window)
    if spec.mode is CurtailMode.MIN_BILL:
        return solve_curtailable_min_bill(prices, spec)
    return solve_curtailable_max_consumption(prices, spec)


def waiting_benefit(prices, spec, k: int) -> float:
    """Bill saved by letting the window run ``k`` hours longer."""
    if not 0 <= k <= spec.max_wait:
        raise ValueError(f"wait {k} outside [0, {spec.max_wait}]")
    if k == 0:
        return 0.0
    base = solve_appliance(prices, spec, spec.window).bill
    return base - solve_appliance(prices, spec, spec.window.extended(k)).bill


def optimal_wait(prices, spec) -> tuple[int, float]:
    savings = []
    for k in range(1, spec.max_wait + 1):
        try:
            savings.append(waiting_benefit(prices, spec, k))
        except Infeasible:
            # a positive power floor can make a longer window infeasible
            savings.append(-np.inf)
    return choose_wait(savings, spec.thresholds)


def solve_household(prices, household: HouseholdSpec, waiting: bool = True) -> HouseholdResponse:
    """Optimal response of one household to one price vector."""
    p = _single_price(prices)
    problems = validate_household(household)
    if problems:
        v = problems[0]
        raise Infeasible(f"customer {household.id}: {v.appliance} {v.code} {v.detail}",
                         appliance=v.appliance, customer_id=household.id)
    bank = HouseholdBank([household], waiting=waiting)
    try:
        per_app, waits, starts = bank.solve(p)
    except Infeasible as exc:
        exc.customer_id = household.id
        raise
    loads, bills = bank.totals(p, per_app)
    results = []
    for pos in range(len(household.appliances)):
        start = int(starts[0, 0, pos])
        results.append(_result(p, per_app[0, 0, pos], wait=waits[0, 0, pos],
                               start=start if start > 0 else None))
    total = loads[0, 0]
    total.flags.writeable = False
    over = tuple((h + 1, float(total[h] - household.hourly_cap))
                 for h in range(HORIZON) if total[h] > household.hourly_cap + _TOL)
    return HouseholdResponse(customer_id=household.id, total_schedule=total,
                             bill=float(bills[0, 0]), per_appliance=tuple(results),
                             cap_violations=over)
