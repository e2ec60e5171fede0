"""A month of bills for one customer under an hourly tariff.

The month is a synthetic series in the same CSV layout as a market export
(date, hour ending, price). For each day we bill the customer three ways: a
price-blind schedule, the optimized schedule without waiting, and with waiting.

    python demos/04_monthly_bills.py [prices.csv]
"""
import sys
import tempfile
from pathlib import Path

from gridlevel import experiments as ex
from gridlevel.scenario import generate_scenario, synthetic_price_series, write_price_series

if len(sys.argv) > 1:
    path = Path(sys.argv[1])
else:
    path = Path(tempfile.mkdtemp()) / "prices.csv"
    write_price_series(path, synthetic_price_series(31))

scenario = generate_scenario(num_customers=1, seed=0)
rows = ex.run_monthly_bills(scenario, path).tables["daily"]

print("date        baseline  optimized  no-wait  wait saving")
for r in rows:
    print(f"{r['date']}  {r['baseline']:8.2f}  {r['optimized']:9.2f}  "
          f"{r['optimized_no_wait']:7.2f}  {r['waiting_saving']:11.2f}")
total = {k: sum(r[k] for r in rows) for k in ("baseline", "optimized")}
print(f"\nmonth: baseline {total['baseline']:.2f}p, optimized {total['optimized']:.2f}p, "
      f"saving {total['baseline'] - total['optimized']:.2f}p")
