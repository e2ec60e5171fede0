"""Does shaping prices hour by hour pay for the retailer?

We draw 100 households, run the island-model GA for day-ahead prices under a
revenue cap of 25500 pence, and compare with a single flat price that earns the
same revenue from price-blind customers.

    python demos/02_dayahead_vs_flat.py [seed]
"""
import sys

from gridlevel import experiments as ex
from gridlevel.scenario import generate_scenario

seed = int(sys.argv[1]) if len(sys.argv) > 1 else 0
scenario = generate_scenario(num_customers=100, seed=seed)
report = ex.run_flat_vs_dayahead(scenario, 25500)

for arm in report.tables["arms"]:
    print(f"{arm['arm']:<10} revenue {arm['revenue']:9.2f}  cost {arm['cost']:8.2f}  "
          f"profit {arm['profit']:9.2f}")

print("\nslot  clock  flat    day-ahead  load(flat)  load(day-ahead)")
for row in report.tables["hourly"]:
    clock = (row["slot"] + 7) % 24
    print(f"{row['slot']:>4}  {clock:02d}:00  {row['flat']:6.2f}  {row['day_ahead']:9.2f}  "
          f"{row['flat_load']:10.2f}  {row['day_ahead_load']:15.2f}")
for w in report.warnings:
    print("warning:", w)
