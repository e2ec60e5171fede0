"""Domain types shared by every part of the pricing engine.

Hours are 1-indexed slots of a 24-slot horizon anchored at 8AM (slot 1 is
8AM-9AM, slot 24 is 7AM-8AM the next morning). Energy is kWh per slot and
money is pence.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Union

import numpy as np

HORIZON = 24
MONEY_RESOLUTION = 0.01  # pence


class DomainError(ValueError):
    """Raised when a value object is constructed with invalid fields."""


def to_cents(amount):
    """Quantize pence to integer hundredths of a penny (works on arrays)."""
    return np.rint(np.asarray(amount, dtype=float) * 100.0).astype(np.int64)


def round_money(amount):
    return np.round(np.asarray(amount, dtype=float), 2)


def clock_to_slot(hour: int) -> int:
    """Slot whose hour *starts* at the given clock hour (0-23)."""
    return (hour - 8) % HORIZON + 1


def clock_end_to_slot(hour: int) -> int:
    """Last slot of a window that *ends* at the given clock hour."""
    return (hour - 9) % HORIZON + 1


def as_price_vector(prices) -> np.ndarray:
    """Validate and freeze a 24-hour price vector."""
    arr = np.array(prices, dtype=float)
    if arr.shape != (HORIZON,):
        raise DomainError(f"price vector must have {HORIZON} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("prices must be finite and non-negative")
    arr.flags.writeable = False
    return arr


def as_schedule(load) -> np.ndarray:
    arr = np.array(load, dtype=float)
    if arr.shape != (HORIZON,):
        raise DomainError(f"schedule must have {HORIZON} entries, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0):
        raise DomainError("schedule entries must be finite and non-negative")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class TimeWindow:
    alpha: int
    beta: int

    def __post_init__(self):
        if not (1 <= self.alpha <= self.beta <= HORIZON):
            raise DomainError(f"invalid window [{self.alpha}, {self.beta}]")

    def __len__(self) -> int:
        return self.beta - self.alpha + 1

    def extended(self, k: int) -> "TimeWindow":
        return TimeWindow(self.alpha, self.beta + k)

    def slots(self) -> range:
        return range(self.alpha, self.beta + 1)


@dataclass(frozen=True)
class InterruptibleSpec:
    energy_required: float
    power_min: float
    power_max: float
    window: TimeWindow
    max_wait: int = 0
    thresholds: tuple[float, ...] = ()
    name: str = "interruptible"

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if self.energy_required <= 0:
            raise DomainError("energy_required must be positive")
        if not (0 <= self.power_min <= self.power_max):
            raise DomainError("need 0 <= power_min <= power_max")
        _check_wait(self.window, self.max_wait, self.thresholds)


@dataclass(frozen=True)
class NonInterruptibleSpec:
    energy_required: float
    duration: int
    power_min: float
    power_max: float
    window: TimeWindow
    max_wait: int = 0
    thresholds: tuple[float, ...] = ()
    name: str = "noninterruptible"

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if self.energy_required <= 0:
            raise DomainError("energy_required must be positive")
        if self.duration < 1:
            raise DomainError("duration must be at least one slot")
        if not (0 <= self.power_min <= self.power_max):
            raise DomainError("need 0 <= power_min <= power_max")
        _check_wait(self.window, self.max_wait, self.thresholds)


class CurtailMode(str, enum.Enum):
    MIN_BILL = "MinBill"
    MAX_CONSUMPTION = "MaxConsumption"


@dataclass(frozen=True)
class CurtailableSpec:
    """Per-hour comfort band over the window; one of two objectives.

    ``floor`` and ``ceiling`` hold one entry per window slot.
    """

    mode: CurtailMode
    window: TimeWindow
    floor: tuple[float, ...]
    ceiling: tuple[float, ...]
    min_total: float | None = None
    budget: float | None = None
    name: str = "curtailable"

    def __post_init__(self):
        object.__setattr__(self, "mode", CurtailMode(self.mode))
        object.__setattr__(self, "floor", tuple(float(v) for v in self.floor))
        object.__setattr__(self, "ceiling", tuple(float(v) for v in self.ceiling))
        n = len(self.window)
        if len(self.floor) != n or len(self.ceiling) != n:
            raise DomainError("floor/ceiling must have one entry per window slot")
        if any(not (0 <= lo <= hi) for lo, hi in zip(self.floor, self.ceiling)):
            raise DomainError("need 0 <= floor <= ceiling in every hour")
        if self.mode is CurtailMode.MIN_BILL:
            if self.min_total is None:
                raise DomainError("MinBill mode needs min_total")
        elif self.budget is None or self.budget < 0:
            raise DomainError("MaxConsumption mode needs a non-negative budget")

    def floor_profile(self) -> np.ndarray:
        out = np.zeros(HORIZON)
        out[self.window.alpha - 1:self.window.beta] = self.floor
        return out

    def ceiling_profile(self) -> np.ndarray:
        out = np.zeros(HORIZON)
        out[self.window.alpha - 1:self.window.beta] = self.ceiling
        return out


ApplianceSpec = Union[InterruptibleSpec, NonInterruptibleSpec, CurtailableSpec]


def _check_wait(window: TimeWindow, max_wait: int, thresholds: tuple) -> None:
    if max_wait < 0:
        raise DomainError("max_wait must be >= 0")
    if window.beta + max_wait > HORIZON:
        raise DomainError("window plus max_wait runs past the horizon")
    if len(thresholds) != max_wait:
        raise DomainError("need exactly one threshold per waiting length")
    if any(t < 0 for t in thresholds):
        raise DomainError("thresholds must be non-negative")


@dataclass(frozen=True)
class HouseholdSpec:
    id: int
    appliances: tuple[ApplianceSpec, ...]
    hourly_cap: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "appliances", tuple(self.appliances))
        if not self.appliances:
            raise DomainError("a household needs at least one appliance")


class Violation(NamedTuple):
    appliance: str
    code: str
    detail: str = ""


def validate_household(spec: HouseholdSpec, price_max=None) -> list[Violation]:
    """Return every feasibility problem found in a household.

    Type invariants are enforced at construction; this checks that each
    appliance sub-problem has a feasible point. If ``price_max`` (scalar or
    24-vector) is given, budget-mode curtailable floors are also checked
    for affordability at those prices.
    """
    out: list[Violation] = []
    for app in spec.appliances:
        name = app.name
        if isinstance(app, InterruptibleSpec):
            n = len(app.window)
            if app.energy_required > app.power_max * n:
                out.append(Violation(name, "infeasible-energy",
                                     f"{app.energy_required} > {app.power_max}*{n}"))
            if app.power_min * n > app.energy_required:
                out.append(Violation(name, "infeasible-energy",
                                     f"power_min*{n} exceeds {app.energy_required}"))
        elif isinstance(app, NonInterruptibleSpec):
            if app.duration > len(app.window):
                out.append(Violation(name, "window-too-short",
                                     f"duration {app.duration} > {len(app.window)}"))
            if not (app.duration * app.power_min <= app.energy_required
                    <= app.duration * app.power_max):
                out.append(Violation(name, "infeasible-energy",
                                     "energy outside duration*[power_min, power_max]"))
        elif isinstance(app, CurtailableSpec):
            if app.mode is CurtailMode.MIN_BILL:
                if not (sum(app.floor) <= app.min_total <= sum(app.ceiling)):
                    out.append(Violation(name, "infeasible-min-total",
                                         "min_total outside [sum floor, sum ceiling]"))
            elif price_max is not None:
                pmax = np.broadcast_to(np.asarray(price_max, dtype=float), (HORIZON,))
                floor_cost = float(pmax @ app.floor_profile())
                if to_cents(floor_cost) > to_cents(app.budget):
                    out.append(Violation(name, "floor-unaffordable",
                                         f"floor costs {floor_cost:.2f} > budget {app.budget}"))
        else:
            out.append(Violation(str(name), "unknown-appliance", type(app).__name__))
    if spec.hourly_cap <= 0:
        out.append(Violation("household", "invalid-cap", "hourly_cap must be positive"))
    return out


# -- JSON codec ------------------------------------------------------------

_KIND = {InterruptibleSpec: "interruptible",
         NonInterruptibleSpec: "noninterruptible",
         CurtailableSpec: "curtailable"}


def appliance_to_dict(app: ApplianceSpec) -> dict:
    d = {"kind": _KIND[type(app)], "name": app.name,
         "alpha": app.window.alpha, "beta": app.window.beta}
    if isinstance(app, CurtailableSpec):
        d.update(mode=app.mode.value, floor=list(app.floor), ceiling=list(app.ceiling),
                 U_min=app.min_total, C_max=app.budget)
    else:
        d.update(E=app.energy_required, gamma_min=app.power_min, gamma_max=app.power_max,
                 K=app.max_wait, C=list(app.thresholds))
        if isinstance(app, NonInterruptibleSpec):
            d["L"] = app.duration
    return d


def appliance_from_dict(d: dict) -> ApplianceSpec:
    window = TimeWindow(int(d["alpha"]), int(d["beta"]))
    kind = d["kind"]
    if kind == "curtailable":
        return CurtailableSpec(mode=CurtailMode(d["mode"]), window=window,
                               floor=tuple(d["floor"]), ceiling=tuple(d["ceiling"]),
                               min_total=d.get("U_min"), budget=d.get("C_max"),
                               name=d.get("name", kind))
    common = dict(energy_required=float(d["E"]), power_min=float(d["gamma_min"]),
                  power_max=float(d["gamma_max"]), window=window,
                  max_wait=int(d.get("K", 0)), thresholds=tuple(d.get("C", ())),
                  name=d.get("name", kind))
    if kind == "interruptible":
        return InterruptibleSpec(**common)
    if kind == "noninterruptible":
        return NonInterruptibleSpec(duration=int(d["L"]), **common)
    raise DomainError(f"unknown appliance kind {kind!r}")


def household_to_dict(h: HouseholdSpec) -> dict:
    return {"id": h.id,
            "E_max": None if math.isinf(h.hourly_cap) else h.hourly_cap,
            "appliances": [appliance_to_dict(a) for a in h.appliances]}


def household_from_dict(d: dict) -> HouseholdSpec:
    cap = d.get("E_max")
    return HouseholdSpec(id=int(d["id"]),
                         appliances=tuple(appliance_from_dict(a) for a in d["appliances"]),
                         hourly_cap=math.inf if cap is None else float(cap))
