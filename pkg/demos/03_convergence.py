"""Island GA against one big population, on a small neighbourhood.

Both searches see the same number of candidates per generation. The full-size
study (100 vs 1000 customers) is ``gridlevel convergence``; this is a quicker
look with fewer generations.

    python demos/03_convergence.py
"""
from dataclasses import replace

from gridlevel import experiments as ex
from gridlevel.scenario import ScenarioConfig
from gridlevel.ga import GaParams

config = ScenarioConfig(seed=3, ga_params=replace(GaParams(), max_generations=40))
report = ex.run_convergence(config, customer_counts=(50,))

traces = {}
for row in report.tables["traces"]:
    traces.setdefault(row["algorithm"], []).append(row["best_profit"])

for g in range(0, 41, 5):
    print(f"gen {g:>3}  " + "  ".join(f"{a}: {t[g]:9.2f}" for a, t in traces.items()))
for row in report.tables["summary"]:
    print(f"{row['algorithm']}: reached 99% of its final best at generation "
          f"{row['gens_to_99pct']}")
