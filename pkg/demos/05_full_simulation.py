"""One full benchmark simulation, round by round.

1000 MW mean consumption, 6% flexible, closed reserve market (producers
only).  Prices settle within a handful of rounds and the loop stops when
the actors' joint position recurs.
"""

from flexmarket.scenario import ScenarioConfig
from flexmarket.simulator import run

outcome = run(ScenarioConfig(seed=1, flexibility_rate=0.06, setting="closed"))

print(f"terminated: {outcome.termination}", end="")
if outcome.termination == "cycle":
    print(f" (round {outcome.cycle_start}, length {outcome.cycle_length})")
else:
    print()
print()
print("round | mean MCP | spread | imbalance MWh | procurement EUR | fallback MWh")
for record in outcome.rounds:
    m = record.metrics
    print(
        f"{record.index:5d} | {m.mean_price:8.2f} | {m.price_variability:6.2f} | "
        f"{m.total_imbalance:13.2f} | {m.procurement_cost:15.0f} | {m.non_contracted:12.3f}"
    )

m = outcome.cycle_metrics
print()
print(
    f"terminal cycle means: MCP {m.mean_price:.2f} EUR/MWh, "
    f"procurement {m.procurement_cost:.0f} EUR, non-contracted {m.non_contracted:.3f} MWh"
)
