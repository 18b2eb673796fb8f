"""Opening the reserve market to flexibility, rate by rate.

Reproduces the headline comparison: procurement cost collapses once bands
enter the reserve book, while the energy price barely moves.  Writes the
four summary figures next to this script.
"""

from pathlib import Path

from flexmarket.charts import line_chart
from flexmarket.scenario import ScenarioConfig
from flexmarket.simulator import run

rates = [0.0, 0.02, 0.04, 0.06, 0.08, 0.10]
results = {}
for rate in rates:
    for setting in ("closed", "open"):
        outcome = run(ScenarioConfig(seed=1, flexibility_rate=rate, setting=setting))
        results[(rate, setting)] = outcome.cycle_metrics

print("rate | closed cost | open cost | closed MCP | open MCP | open fallback MWh")
for rate in rates:
    closed, opened = results[(rate, "closed")], results[(rate, "open")]
    print(
        f"{rate:4.0%} | {closed.procurement_cost:11.0f} | {opened.procurement_cost:9.0f} | "
        f"{closed.mean_price:10.2f} | {opened.mean_price:8.2f} | {opened.non_contracted:17.3f}"
    )

baseline = results[(0.0, "open")].procurement_cost
final = results[(0.10, "open")].procurement_cost
print(f"\nopen-market procurement cost at 10% flexibility: {final / baseline:.0%} of the 0% baseline")

out = Path(__file__).resolve().parent / "figures"
out.mkdir(exist_ok=True)
for attribute, label in (
    ("procurement_cost", "reserve procurement cost (EUR)"),
    ("price_variability", "price variability (EUR/MWh)"),
    ("total_imbalance", "total imbalance (MWh)"),
    ("non_contracted", "non-contracted reserve (MWh)"),
):
    line_chart(
        out / f"{attribute}.svg",
        f"{label} vs flexibility rate",
        "flexibility rate",
        label,
        {
            setting: (rates, [getattr(results[(r, setting)], attribute) for r in rates])
            for setting in ("closed", "open")
        },
    )
print(f"figures written to {out}")
