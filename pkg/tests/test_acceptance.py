"""Acceptance checks, one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines; they are also
printed when output capture is on, through ``capsys.disabled``. The convergence
check takes the better part of half an hour and carries the ``slow`` marker.
"""
import math
import statistics
import time

import numpy as np
import pytest

from gridlevel import experiments as ex
from gridlevel.ga import GaParams, optimize
from gridlevel.harness import InProcessTransport, PricingEvaluator
from gridlevel.hems import choose_wait, solve_appliance, solve_household
from gridlevel.scenario import ScenarioConfig, generate_scenario, synthetic_price_series, \
    write_price_series

import instances


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail, seconds, budget):
        ok = ok and seconds < budget
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail} "
                  f"({seconds:.3f}s, budget {budget:g}s)")
        return ok
    return emit


def test_waiting_example(report):
    t0 = time.perf_counter()
    for _ in range(1000):
        k, benefit = choose_wait([12, 30, 40], [10, 25, 45])
    per_call = (time.perf_counter() - t0) / 1000
    ok = (k, benefit) == (2, 30)
    assert report(1, ok, f"k={k}, benefit={benefit}", per_call, 1e-3)


def test_appliance_oracle(report):
    t0 = time.perf_counter()
    bad = {}
    for kind, gen in sorted(instances.GENERATORS.items()):
        rng = np.random.default_rng(sum(map(ord, kind)))
        misses = 0
        for _ in range(1000):
            prices, spec, best = gen(rng)
            r = solve_appliance(prices, spec)
            if kind == "max_consumption":
                good = instances.rel_close(r.schedule.sum(), best[0], 1e-9) \
                    and r.bill <= spec.budget + 1e-9
            else:
                good = instances.rel_close(r.bill, best, 1e-9)
            misses += not good
        bad[kind] = misses
    seconds = time.perf_counter() - t0
    ok = not any(bad.values())
    assert report(2, ok, f"1000 per class, mismatches {bad}", seconds, 60)


def test_household_joint_oracle(report):
    t0 = time.perf_counter()
    rng = np.random.default_rng(303)
    misses = 0
    for _ in range(100):
        prices, house = instances.household(rng)
        for waiting in (True, False):
            r = solve_household(prices, house, waiting=waiting)
            expect = instances.joint_oracle(prices, house, waiting=waiting)
            misses += not instances.rel_close(r.bill, expect, 1e-6)
    seconds = time.perf_counter() - t0
    assert report(3, misses == 0, f"100 households x 2 waiting modes, {misses} mismatches",
                  seconds, 300)


def test_tiny_ga_reaches_lattice(report):
    t0 = time.perf_counter()
    cons, cost, house = instances.tiny_pricing_problem()
    best = instances.lattice_optimum(cons, cost, house, 4)
    hits = 0
    for seed in range(20):
        params = GaParams(num_islands=3, island_size=8, bits_per_gene=4, max_generations=25,
                          seed=seed)
        ev = PricingEvaluator(InProcessTransport([house]), cost, cons)
        res = optimize(params, ev, cons)
        hits += res.best.feasible and res.best.profit >= best.profit * 0.995
    seconds = time.perf_counter() - t0
    assert report(4, hits >= 19, f"{hits}/20 seeds within 0.5% of {best.profit:.4f}",
                  seconds, 120)


def test_dayahead_beats_flat(report):
    t0 = time.perf_counter()
    wins, gaps = 0, []
    for seed in range(20):
        scen = generate_scenario(num_customers=100, seed=seed)
        rep = ex.run_flat_vs_dayahead(scen, 25500)
        flat, day = rep.tables["arms"]
        wins += rep.meta["day_ahead_feasible"] and day["profit"] > flat["profit"]
        gaps.append(day["profit"] - flat["profit"])
    seconds = time.perf_counter() - t0
    assert report(5, wins >= 19, f"{wins}/20 seeds, profit gain min {min(gaps):.2f} "
                  f"median {statistics.median(gaps):.2f}", seconds, 1800)


@pytest.mark.slow
def test_convergence_scale_free(report):
    t0 = time.perf_counter()
    gens = {}
    for n in (100, 1000):
        gens[n] = []
        for seed in range(5):
            scen = generate_scenario(ScenarioConfig(seed=seed), num_customers=n)
            res = ex.run_dayahead(scen)
            gens[n].append(ex.generations_to_fraction(res.history))
    seconds = time.perf_counter() - t0
    m100, m1000 = (statistics.median(g) for g in gens.values())
    gap = abs(m100 - m1000) / max(m100, m1000, 1)
    assert report(6, gap <= 0.25, f"median gens to 99%: N=100 {m100} {gens[100]}, "
                  f"N=1000 {m1000} {gens[1000]}, gap {gap:.1%}", seconds, 2700)


def test_traces_and_transport_determinism(report):
    t0 = time.perf_counter()
    monotone, identical = True, True
    params = GaParams(num_islands=3, island_size=10, max_generations=15)
    for seed in range(3):
        scen = generate_scenario(num_customers=10, seed=seed)
        p = GaParams(**{**params.to_dict(), "seed": seed})
        a = ex.run_dayahead(scen, ga_params=p, transport="inproc")
        b = ex.run_dayahead(scen, ga_params=p, transport="tcp")
        for res in (a, b):
            h = [v for v in res.history if not math.isnan(v)]
            monotone &= all(y >= x for x, y in zip(h, h[1:]))
        identical &= a.best.prices.tobytes() == b.best.prices.tobytes()
    seconds = time.perf_counter() - t0
    assert report(7, monotone and identical,
                  f"non-decreasing {monotone}, inproc == tcp bitwise {identical}", seconds, 300)


def test_monthly_bills(report, tmp_path):
    t0 = time.perf_counter()
    path = tmp_path / "prices.csv"
    write_price_series(path, synthetic_price_series(31))
    scen = generate_scenario(num_customers=10, seed=0)
    bad_opt = bad_wait = 0
    for cid in range(10):
        rows = ex.run_monthly_bills(scen, path, customer=cid).tables["daily"]
        assert len(rows) == 31
        bad_opt += sum(r["optimized"] > r["baseline"] for r in rows)
        bad_wait += sum(r["optimized"] > r["optimized_no_wait"] for r in rows)
    seconds = time.perf_counter() - t0
    ok = bad_opt == 0 and bad_wait == 0
    assert report(8, ok, f"10 customers x 31 days, optimized>baseline on {bad_opt} days, "
                  f"waiting>no-waiting on {bad_wait} days", seconds, 120)
