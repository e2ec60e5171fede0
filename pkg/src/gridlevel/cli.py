"""Command line entry point: ``gridlevel gen|convergence|compare|bills|meters``.

Exit codes: 0 success, 2 infeasible scenario, 3 transport failure, 1 other
errors (bad arguments exit through argparse with its own code 2 as well).
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import experiments as ex
from .domain import DomainError
from .ga import EvaluatorFailure
from .harness import MeterServer, SolveError, TransportError
from .hems import Infeasible
from .scenario import (
    ConfigError,
    Scenario,
    ScenarioConfig,
    generate_scenario,
    synthetic_price_series,
    write_price_series,
)

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE, EXIT_TRANSPORT = 0, 1, 2, 3

log = logging.getLogger("gridlevel")


def _addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise argparse.ArgumentTypeError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def _common(p: argparse.ArgumentParser, transport=True):
    p.add_argument("--scenario", type=Path, help="scenario JSON (default: generate from --seed)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--customers", type=int, default=100,
                   help="customers when generating a scenario")
    p.add_argument("--out-dir", type=Path, default=Path("out"))
    if transport:
        p.add_argument("--transport", choices=("inproc", "tcp"), default="inproc")
        p.add_argument("--meters-addr", type=_addr, default=None,
                       help="HOST:PORT of a running meter server (tcp only)")
        p.add_argument("--generations", type=int, default=None,
                       help="override the GA generation count")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gridlevel", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a scenario and a synthetic price series")
    _common(p, transport=False)
    p.add_argument("--days", type=int, default=31, help="days of synthetic prices")

    p = sub.add_parser("convergence", help="best profit per generation")
    _common(p)
    p.add_argument("--counts", type=int, nargs="+", default=[100, 1000],
                   help="customer counts (ignored with --scenario)")
    p.add_argument("--algorithms", nargs="+", choices=("multi", "single"),
                   default=["multi", "single"])

    p = sub.add_parser("compare", help="flat vs day-ahead pricing at equal revenue")
    _common(p)
    p.add_argument("--revenue-target", type=float, default=None,
                   help="pence (default: the scenario's revenue cap)")

    p = sub.add_parser("bills", help="daily bills of one customer over a price series")
    _common(p, transport=False)
    p.add_argument("--prices", type=Path, default=None,
                   help="price CSV (date,hour,price_pence_per_kwh); default: synthetic")
    p.add_argument("--customer", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0, help="multiply imported prices")

    p = sub.add_parser("meters", help="serve the scenario's meters over TCP")
    _common(p, transport=False)
    p.add_argument("--listen", type=_addr, default=("127.0.0.1", 7700))
    p.add_argument("--no-waiting", action="store_true")
    return ap


def _load_scenario(args) -> Scenario:
    if args.scenario is not None:
        return Scenario.load(args.scenario)
    return generate_scenario(ScenarioConfig(num_customers=args.customers, seed=args.seed))


def _ga_params(args, scenario: Scenario):
    if getattr(args, "generations", None) is None:
        return scenario.ga_params
    return dataclasses.replace(scenario.ga_params, max_generations=args.generations)


def _finish(report: ex.ExperimentReport, out_dir: Path) -> None:
    for path in report.write(out_dir):
        print(path)
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)


def cmd_gen(args) -> int:
    scen = _load_scenario(args)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    path = args.out_dir / "scenario.json"
    scen.save(path)
    prices = args.out_dir / "prices.csv"
    write_price_series(prices, synthetic_price_series(days=args.days, seed=args.seed + 2012))
    print(path)
    print(prices)
    print(f"digest {scen.digest()}  customers {len(scen.customers)}  resamples {scen.resamples}")
    return EXIT_OK


def cmd_convergence(args) -> int:
    if args.scenario is not None:
        source = Scenario.load(args.scenario)
        if args.generations is not None:
            source = source.replace(ga_params=_ga_params(args, source))
    else:
        config = ScenarioConfig(seed=args.seed)
        if args.generations is not None:
            config = dataclasses.replace(config, ga_params=dataclasses.replace(
                config.ga_params, max_generations=args.generations))
        source = config
    report = ex.run_convergence(source, args.counts, algorithms=tuple(args.algorithms),
                                transport=args.transport, meters_addr=args.meters_addr)
    _finish(report, args.out_dir)
    return EXIT_OK


def cmd_compare(args) -> int:
    scen = _load_scenario(args)
    target = args.revenue_target or scen.constraints.revenue_cap
    report = ex.run_flat_vs_dayahead(scen, target, transport=args.transport,
                                     meters_addr=args.meters_addr,
                                     ga_params=_ga_params(args, scen))
    _finish(report, args.out_dir)
    for row in report.tables["arms"]:
        print(f"{row['arm']:>10}  revenue {row['revenue']:.2f}  cost {row['cost']:.2f}  "
              f"profit {row['profit']:.2f}")
    return EXIT_OK


def cmd_bills(args) -> int:
    scen = _load_scenario(args)
    prices = args.prices
    if prices is None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        prices = args.out_dir / "prices.csv"
        write_price_series(prices, synthetic_price_series(seed=args.seed + 2012))
    report = ex.run_monthly_bills(scen, prices, customer=args.customer, scale=args.scale)
    _finish(report, args.out_dir)
    return EXIT_OK


def cmd_meters(args) -> int:
    scen = _load_scenario(args)
    server = MeterServer(scen.customers, address=args.listen, waiting=not args.no_waiting)
    host, port = server.server_address[:2]
    print(f"serving {len(scen.customers)} meters on {host}:{port}", flush=True)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "convergence": cmd_convergence, "compare": cmd_compare,
            "bills": cmd_bills, "meters": cmd_meters}


def exit_code_for(exc: BaseException) -> int:
    """Map a failure (or the cause chain behind it) to an exit code."""
    seen = exc
    while seen is not None:
        if isinstance(seen, (Infeasible, SolveError, ConfigError, DomainError)):
            return EXIT_INFEASIBLE
        if isinstance(seen, (TransportError, ConnectionError)):
            return EXIT_TRANSPORT
        seen = seen.__cause__
    if isinstance(exc, (EvaluatorFailure, OSError)):
        return EXIT_TRANSPORT
    return EXIT_ERROR


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:
        code = exit_code_for(exc)
        if code == EXIT_ERROR:
            raise
        print(f"gridlevel: error: {exc}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
