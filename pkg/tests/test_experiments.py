import json
import math
import subprocess
import sys

import numpy as np
import pytest

from gridlevel import cli
from gridlevel import experiments as ex
from gridlevel.domain import (
    CurtailableSpec,
    CurtailMode,
    HouseholdSpec,
    InterruptibleSpec,
    NonInterruptibleSpec,
    TimeWindow,
)
from gridlevel.ga import GaParams
from gridlevel.scenario import ScenarioConfig, generate_scenario, synthetic_price_series, \
    write_price_series

QUICK = GaParams(num_islands=2, island_size=6, max_generations=3)


@pytest.fixture(scope="module")
def small():
    return generate_scenario(num_customers=4, seed=2, ga_params=QUICK)


class TestBaseline:
    def test_shiftable_runs_flat_out_from_start(self):
        app = InterruptibleSpec(5.0, 0, 2, TimeWindow(3, 8))
        np.testing.assert_array_equal(ex.baseline_schedule(app)[2:6], [2, 2, 1, 0])

    def test_noninterruptible(self):
        app = NonInterruptibleSpec(2.5, 2, 0, 1.5, TimeWindow(10, 14))
        np.testing.assert_array_equal(ex.baseline_schedule(app)[9:12], [1.5, 1.0, 0])

    def test_curtailable_at_ceiling(self):
        app = CurtailableSpec(CurtailMode.MAX_CONSUMPTION, TimeWindow(2, 3), (0.5, 0.5),
                              (2.0, 1.8), budget=10)
        np.testing.assert_array_equal(ex.baseline_schedule(app), app.ceiling_profile())

    def test_bill(self):
        h = HouseholdSpec(0, (InterruptibleSpec(3.0, 0, 2, TimeWindow(1, 4)),))
        assert ex.baseline_bill(np.full(24, 10.0), h) == pytest.approx(30)


class TestFlatArm:
    def test_equal_revenue(self, small):
        flat, clipped = ex.flat_arm(small, 1000)
        assert not clipped
        assert flat.revenue == pytest.approx(1000)
        assert len(set(flat.prices)) == 1

    def test_clip_reported(self, small):
        report = ex.run_flat_vs_dayahead(small, 10.0)
        assert report.meta["flat_price_clipped"]
        assert report.warnings and "FlatPriceOutOfBounds" in report.warnings[0]

    def test_zero_customers(self):
        scen = generate_scenario(num_customers=0, ga_params=QUICK)
        rows = ex.run_flat_vs_dayahead(scen, 100.0).tables["arms"]
        for r in rows:
            assert r["revenue"] == 0 and r["cost"] == 0

    def test_compare_report(self, small, tmp_path):
        report = ex.run_flat_vs_dayahead(small, small.constraints.revenue_cap)
        arms = {r["arm"]: r for r in report.tables["arms"]}
        assert set(arms) == {"flat", "day-ahead"}
        assert arms["day-ahead"]["revenue"] <= small.constraints.revenue_cap
        paths = report.write(tmp_path)
        assert {p.name for p in paths} == {"compare_arms.csv", "compare_hourly.csv",
                                           "compare_report.json"}
        back = ex.read_rows(tmp_path / "compare_arms.csv")
        assert back == report.tables["arms"]
        assert json.loads((tmp_path / "compare_report.json").read_text())["scenario_digest"] \
            == small.digest()


class TestConvergence:
    def test_four_traces(self):
        cfg = ScenarioConfig(seed=1, ga_params=QUICK)
        rep = ex.run_convergence(cfg, (3, 5))
        traces = {(r["customers"], r["algorithm"]) for r in rep.tables["traces"]}
        assert traces == {(3, "multi"), (3, "single"), (5, "multi"), (5, "single")}
        for key in traces:
            h = [r["best_profit"] for r in rep.tables["traces"]
                 if (r["customers"], r["algorithm"]) == key]
            assert len(h) == QUICK.max_generations + 1
            assert all(b >= a for a, b in zip(h, h[1:]))

    def test_single_population_same_size(self):
        p = ex.single_population(GaParams())
        assert p.num_islands == 1 and p.island_size == 600

    def test_generations_to_fraction(self):
        assert ex.generations_to_fraction([math.nan, 50, 98, 99.5, 100]) == 3
        assert ex.generations_to_fraction([100, 100]) == 0
        assert ex.generations_to_fraction([math.nan, math.nan]) is None


class TestBills:
    def test_monthly(self, small, tmp_path):
        path = tmp_path / "p.csv"
        write_price_series(path, synthetic_price_series(31))
        rep = ex.run_monthly_bills(small, path)
        rows = rep.tables["daily"]
        assert len(rows) == 31
        for r in rows:
            assert r["optimized"] <= r["baseline"]
            assert r["optimized"] <= r["optimized_no_wait"]

    def test_unknown_customer(self, small, tmp_path):
        path = tmp_path / "p.csv"
        write_price_series(path, synthetic_price_series(1))
        with pytest.raises(KeyError):
            ex.run_monthly_bills(small, path, customer=99)


class TestCli:
    def test_gen_compare_bills(self, tmp_path):
        assert cli.main(["gen", "--customers", "3", "--seed", "4", "--out-dir",
                         str(tmp_path)]) == 0
        scen = tmp_path / "scenario.json"
        assert scen.exists() and (tmp_path / "prices.csv").exists()
        assert cli.main(["compare", "--scenario", str(scen), "--generations", "2",
                         "--out-dir", str(tmp_path)]) == 0
        assert cli.main(["bills", "--scenario", str(scen), "--prices",
                         str(tmp_path / "prices.csv"), "--out-dir", str(tmp_path)]) == 0
        assert len(ex.read_rows(tmp_path / "bills_daily.csv")) == 31

    def test_reports_reproducible(self, tmp_path):
        for d in ("a", "b"):
            assert cli.main(["compare", "--customers", "3", "--seed", "6", "--generations",
                             "2", "--out-dir", str(tmp_path / d)]) == 0
        for name in ("compare_arms.csv", "compare_hourly.csv", "compare_report.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_convergence_tcp(self, tmp_path):
        assert cli.main(["convergence", "--counts", "2", "--generations", "1",
                         "--algorithms", "multi", "--transport", "tcp",
                         "--out-dir", str(tmp_path)]) == 0
        rows = ex.read_rows(tmp_path / "convergence_traces.csv")
        assert len(rows) == 2

    def test_infeasible_scenario_exit_2(self, tmp_path):
        scen = generate_scenario(num_customers=1, seed=0)
        ac = CurtailableSpec(CurtailMode.MAX_CONSUMPTION, TimeWindow(1, 2), (1, 1), (2, 2),
                             budget=1)
        bad = scen.replace(customers=(HouseholdSpec(0, (ac,)),))
        bad.save(tmp_path / "bad.json")
        code = cli.main(["compare", "--scenario", str(tmp_path / "bad.json"),
                         "--generations", "1", "--out-dir", str(tmp_path)])
        assert code == 2

    def test_transport_failure_exit_3(self, tmp_path):
        code = cli.main(["compare", "--customers", "2", "--transport", "tcp",
                         "--meters-addr", "127.0.0.1:1", "--generations", "1",
                         "--out-dir", str(tmp_path)])
        assert code == 3

    def test_console_script(self, tmp_path):
        out = subprocess.run([sys.executable, "-m", "gridlevel.cli", "gen", "--customers",
                              "2", "--out-dir", str(tmp_path)], capture_output=True, text=True)
        assert out.returncode == 0
        assert "digest" in out.stdout
