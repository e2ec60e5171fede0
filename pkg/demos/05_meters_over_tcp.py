"""Running the retailer against meters on the other end of a socket.

Each meter keeps its appliances to itself and only reports hourly load and its
bill. We start a meter server for a few households, run a short GA through TCP,
then the same run in-process, and check the prices match bit for bit.

    python demos/05_meters_over_tcp.py
"""
from gridlevel.ga import GaParams, optimize
from gridlevel.harness import InProcessTransport, MeterServer, PricingEvaluator, TcpTransport
from gridlevel.scenario import generate_scenario

scenario = generate_scenario(num_customers=8, seed=4)
cons = scenario.constraints
params = GaParams(num_islands=3, island_size=10, max_generations=10, seed=4)

server = MeterServer(scenario.customers).start()
print("meters listening on %s:%d" % server.server_address)
try:
    with TcpTransport(server.server_address, [h.id for h in scenario.customers]) as tr:
        remote = optimize(params, PricingEvaluator(tr, scenario.cost_params, cons), cons)
        print(f"tcp: {tr.announcements_sent} announcements, best profit "
              f"{remote.best.profit:.2f}")
finally:
    server.stop()

local = optimize(params, PricingEvaluator(InProcessTransport(scenario.customers),
                                          scenario.cost_params, cons), cons)
print(f"inproc: best profit {local.best.profit:.2f}")
print("identical prices:", local.best.prices.tobytes() == remote.best.prices.tobytes())
