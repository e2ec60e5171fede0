"""How one household answers a day of prices.

A plug-in car, a dishwasher, a washer and an air conditioner sit behind
one meter. We announce a two-level tariff, let the home energy manager schedule
everything, and print where the energy lands and what waiting bought.

    python demos/01_household_response.py
"""
import numpy as np

from gridlevel.domain import (
    CurtailableSpec,
    CurtailMode,
    HouseholdSpec,
    InterruptibleSpec,
    NonInterruptibleSpec,
    TimeWindow,
    clock_end_to_slot,
    clock_to_slot,
)
from gridlevel.hems import optimal_wait, solve_household

# Slot 1 is 8-9AM. Evenings are dear, the small hours are cheap.
prices = np.full(24, 12.0)
prices[clock_to_slot(17) - 1:clock_to_slot(21) - 1] = 14.0
prices[clock_to_slot(0) - 1:clock_to_slot(6) - 1] = 8.5

car = InterruptibleSpec(10.0, 0.0, 3.0,
                        TimeWindow(clock_to_slot(19), clock_end_to_slot(6)),
                        max_wait=2, thresholds=(10, 25), name="car")
dishes = NonInterruptibleSpec(2.6, 2, 0.0, 1.4,
                              TimeWindow(clock_to_slot(20), clock_end_to_slot(1)),
                              max_wait=3, thresholds=(10, 25, 45), name="dishwasher")
washer = NonInterruptibleSpec(2.0, 2, 0.0, 1.2,
                              TimeWindow(clock_to_slot(18), clock_end_to_slot(21)),
                              max_wait=3, thresholds=(1, 2, 4), name="washer")
ac = CurtailableSpec(CurtailMode.MAX_CONSUMPTION, TimeWindow(clock_to_slot(12), clock_to_slot(15)),
                     floor=(0.6,) * 4, ceiling=(2.0,) * 4, budget=80.0, name="ac")
home = HouseholdSpec(1, (car, dishes, washer, ac), hourly_cap=4.5)

for waiting in (False, True):
    r = solve_household(prices, home, waiting=waiting)
    print(f"waiting={'on ' if waiting else 'off'}  bill {r.bill:8.2f} pence")
    for spec, a in zip(home.appliances, r.per_appliance):
        hours = [int(s + 8) % 24 for s in np.flatnonzero(a.schedule > 1e-12)]
        print(f"  {spec.name:<10} {a.bill:7.2f}p  wait {a.wait_used}h  on at {hours}")
    if r.cap_violations:
        print("  over the hourly cap in slots", [s for s, _ in r.cap_violations])

# The washer's window closes at 9PM, just as the expensive block ends. This
# customer will put up with an hour's delay for a penny, so waiting pays here.
# The dishwasher's owner asks for 10 pence or more and never waits.
for spec in (dishes, washer):
    k, saving = optimal_wait(prices, spec)
    print(f"{spec.name}: best wait {k}h saves {saving:.2f}p "
          f"(thresholds {spec.thresholds})")
