"""Reserve procurement: classical bids against a flexibility band.

A modulation bid covers both reserve directions in every period of its
block (discounted by its efficiency ratio), so at a low regulated capacity
price it displaces most of the classical book.  Raising that price hands
the volume back.
"""

import numpy as np

from flexmarket.reserve_market import (
    ClassicalReserveBid,
    ModulationBid,
    ReservePrices,
    clear_reserve,
)

classical = [
    ClassicalReserveBid("gen", t, direction, volume=25.0, activation_price=price)
    for t in range(4)
    for direction, price in (("up", 62.0), ("down", 48.0))
]
band = ModulationBid("retail", start=0, length=4, amplitude=50.0, activation_price=0.0, efficiency=0.5)
required = np.full(4, 20.0)

for capacity_price in (10.0, 120.0, 400.0):
    prices = ReservePrices(
        up_capacity=45.0, down_capacity=45.0,
        modulation_capacity=capacity_price, non_contracted=500.0,
    )
    result = clear_reserve(classical, [band], required, required, prices)
    taken = result.modulation_fraction[0] * band.amplitude
    print(
        f"band capacity price {capacity_price:6.1f}: contracted band {taken:5.1f} MW, "
        f"procurement cost {result.contracted_cost:8.0f} EUR"
    )

print()
print("with no band on offer:")
result = clear_reserve(classical, [], required, required, ReservePrices())
print(f"  classical-only cost {result.contracted_cost:8.0f} EUR")
