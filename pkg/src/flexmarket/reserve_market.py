"""Day-ahead secondary reserve procurement.

The operator must secure an upward and a downward reserve quantity for
every period.  Two products compete: classical one-period, one-direction
bids, and modulation bids -- a symmetric band around a consumption baseline
held over a block of consecutive periods, which therefore counts toward
both directions in every covered period (discounted by its efficiency
ratio).  Clearing minimizes reservation plus assumed-activation cost, with
a penalty on contracting past the requirement and an expensive fallback on
any shortfall.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .lp import EQUAL, LinearProgram, solve

UP = "up"
DOWN = "down"

#: activation fractions below this are treated as rejected
ACCEPT_TOL = 1e-9


@dataclass(frozen=True)
class ClassicalReserveBid:
    """Single-period reserve capacity in one direction."""

    actor: str
    period: int
    direction: str
    volume: float                # MW
    activation_price: float      # EUR/MWh paid (up) or received (down) on use
    efficiency: float = 1.0

    def validate(self, period_count: int) -> None:
        if self.direction not in (UP, DOWN):
            raise ValueError(f"direction must be up/down, got {self.direction!r}")
        if not 0 <= self.period < period_count:
            raise ValueError(f"bid period {self.period} outside horizon")
        if not self.volume > 0:
            raise ValueError("bid volume must be positive")
        if self.efficiency != 1.0:
            raise ValueError("classical bids carry unit efficiency")
        if self.activation_price < 0:
            raise ValueError("activation price must be nonnegative")


@dataclass(frozen=True)
class ModulationBid:
    """Symmetric flexibility band of ``amplitude`` MW over consecutive periods.

    The consumption underlying the band is energy neutral across the block,
    so the same capacity serves both reserve directions in every covered
    period.
    """

    actor: str
    start: int
    length: int
    amplitude: float             # MW, the tradeable volume
    activation_price: float = 0.0
    efficiency: float = 1.0

    @property
    def periods(self) -> range:
        return range(self.start, self.start + self.length)

    def validate(self, period_count: int) -> None:
        if self.length < 2 or self.length % 2 != 0:
            raise ValueError("modulation length must be even and at least 2")
        if self.start < 0 or self.start + self.length > period_count:
            raise ValueError("modulation window outside horizon")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError("efficiency must lie in (0, 1]")
        if self.activation_price < 0:
            raise ValueError("activation price must be nonnegative")


@dataclass
class ReservePrices:
    """Regulated capacity prices and the non-contracted fallback price."""

    up_capacity: float = 45.0
    down_capacity: float = 45.0
    modulation_capacity: float = 10.0
    non_contracted: float = 500.0

    def validate(self) -> None:
        for label, value in vars(self).items():
            if value < 0:
                raise ValueError(f"price {label} must be nonnegative")


def over_contract_penalty(downward_bids: list[ClassicalReserveBid], fallback_price: float) -> float:
    """Per-period penalty that stops the clearing from banking surplus
    downward reserve for its activation revenue: 10% above the dearest
    downward activation price, or above ``fallback_price`` when the period
    has no downward bids."""
    if downward_bids:
        return 1.1 * max(bid.activation_price for bid in downward_bids)
    return 1.1 * fallback_price


@dataclass
class ReserveProcurement:
    """Accepted fractions plus the per-period requirement bookkeeping."""

    classical: list[ClassicalReserveBid]
    modulation: list[ModulationBid]
    classical_fraction: np.ndarray
    modulation_fraction: np.ndarray
    surplus_up: np.ndarray
    surplus_down: np.ndarray
    shortfall_up: np.ndarray
    shortfall_down: np.ndarray
    required_up: np.ndarray
    required_down: np.ndarray
    over_commit_penalty: np.ndarray      # per period, reused at settlement
    contracted_cost: float               # reservation + assumed activation
    objective: float                     # LP value incl. surplus/shortfall terms
    prices: ReservePrices

    def contracted_classical(self) -> list[tuple[ClassicalReserveBid, float]]:
        return [
            (bid, bid.volume * float(x))
            for bid, x in zip(self.classical, self.classical_fraction)
            if x > ACCEPT_TOL
        ]

    def contracted_modulation(self) -> list[tuple[ModulationBid, float]]:
        return [
            (bid, bid.amplitude * float(x))
            for bid, x in zip(self.modulation, self.modulation_fraction)
            if x > ACCEPT_TOL and bid.amplitude > 0
        ]


def _check_non_overlap(modulation: list[ModulationBid]) -> None:
    seen: dict[str, set[int]] = {}
    for bid in modulation:
        covered = seen.setdefault(bid.actor, set())
        window = set(bid.periods)
        if covered & window:
            raise ValueError(f"overlapping modulation bids for actor {bid.actor!r}")
        covered |= window


def clear_reserve(
    classical: list[ClassicalReserveBid],
    modulation: list[ModulationBid],
    required_up: np.ndarray,
    required_down: np.ndarray,
    prices: ReservePrices,
    backend: str = "simplex",
) -> ReserveProcurement:
    """Minimum-cost acceptance of reserve bids against both requirements.

    Always feasible: shortfall and surplus variables absorb any gap.
    """
    required_up = np.asarray(required_up, dtype=float)
    required_down = np.asarray(required_down, dtype=float)
    period_count = len(required_up)
    if len(required_down) != period_count:
        raise ValueError("requirement series differ in length")
    if np.any(required_up < 0) or np.any(required_down < 0):
        raise ValueError("requirements must be nonnegative")
    prices.validate()
    for bid in classical:
        bid.validate(period_count)
    for bid in modulation:
        bid.validate(period_count)
    _check_non_overlap(modulation)

    all_prices = [b.activation_price for b in classical] + [
        b.activation_price for b in modulation
    ]
    fallback = max(all_prices) if all_prices else prices.non_contracted
    penalty = np.array(
        [
            over_contract_penalty(
                [b for b in classical if b.direction == DOWN and b.period == t],
                fallback,
            )
            for t in range(period_count)
        ]
    )

    lp = LinearProgram(sense="min", name="reserve-clearing")
    x_classical = []
    for k, bid in enumerate(classical):
        v = lp.add_variable(f"x_c{k}", 0.0, 1.0)
        sign = 1.0 if bid.direction == UP else -1.0
        capacity = prices.up_capacity if bid.direction == UP else prices.down_capacity
        lp.add_objective(v, (capacity + sign * bid.activation_price) * bid.volume)
        x_classical.append(v)
    x_modulation = []
    for k, bid in enumerate(modulation):
        v = lp.add_variable(f"x_m{k}", 0.0, 1.0)
        lp.add_objective(
            v, (prices.modulation_capacity + bid.activation_price) * bid.amplitude
        )
        x_modulation.append(v)

    s_up = [lp.add_variable(f"s_up{t}") for t in range(period_count)]
    s_dn = [lp.add_variable(f"s_dn{t}") for t in range(period_count)]
    n_up = [lp.add_variable(f"n_up{t}") for t in range(period_count)]
    n_dn = [lp.add_variable(f"n_dn{t}") for t in range(period_count)]
    for t in range(period_count):
        lp.add_objective(s_up[t], penalty[t])
        lp.add_objective(s_dn[t], penalty[t])
        lp.add_objective(n_up[t], prices.non_contracted)
        lp.add_objective(n_dn[t], prices.non_contracted)

    for t in range(period_count):
        up_terms = [(n_up[t], 1.0), (s_up[t], -1.0)]
        down_terms = [(n_dn[t], 1.0), (s_dn[t], -1.0)]
        for k, bid in enumerate(classical):
            if bid.period != t:
                continue
            target = up_terms if bid.direction == UP else down_terms
            target.append((x_classical[k], bid.volume * bid.efficiency))
        for k, bid in enumerate(modulation):
            if t in bid.periods:
                contribution = bid.amplitude * bid.efficiency
                up_terms.append((x_modulation[k], contribution))
                down_terms.append((x_modulation[k], contribution))
        lp.add_constraint(up_terms, EQUAL, required_up[t])
        lp.add_constraint(down_terms, EQUAL, required_down[t])

    sol = solve(lp, backend=backend)
    if sol.status != "optimal":
        raise RuntimeError(f"reserve clearing unexpectedly {sol.status}")

    xc = np.clip(sol.values(x_classical) if classical else np.zeros(0), 0.0, 1.0)
    xm = np.clip(sol.values(x_modulation) if modulation else np.zeros(0), 0.0, 1.0)
    contracted = 0.0
    for bid, x in zip(classical, xc):
        sign = 1.0 if bid.direction == UP else -1.0
        capacity = prices.up_capacity if bid.direction == UP else prices.down_capacity
        contracted += (capacity + sign * bid.activation_price) * bid.volume * float(x)
    for bid, x in zip(modulation, xm):
        contracted += (
            (prices.modulation_capacity + bid.activation_price) * bid.amplitude * float(x)
        )

    return ReserveProcurement(
        classical=list(classical),
        modulation=list(modulation),
        classical_fraction=xc,
        modulation_fraction=xm,
        surplus_up=sol.values(s_up),
        surplus_down=sol.values(s_dn),
        shortfall_up=sol.values(n_up),
        shortfall_down=sol.values(n_dn),
        required_up=required_up,
        required_down=required_down,
        over_commit_penalty=penalty,
        contracted_cost=contracted,
        objective=sol.objective,
        prices=prices,
    )


# ---------------------------------------------------------------------------
# CSV interchange
# ---------------------------------------------------------------------------


def write_classical_bids_csv(bids: list[ClassicalReserveBid], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["actor", "period", "dir", "q_mw", "c_act"])
        for b in bids:
            writer.writerow([b.actor, b.period, b.direction, repr(b.volume), repr(b.activation_price)])


def read_classical_bids_csv(path) -> list[ClassicalReserveBid]:
    out = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            out.append(
                ClassicalReserveBid(
                    actor=row["actor"],
                    period=int(row["period"]),
                    direction=row["dir"],
                    volume=float(row["q_mw"]),
                    activation_price=float(row["c_act"]),
                )
            )
    return out


def write_modulation_bids_csv(bids: list[ModulationBid], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["actor", "tau", "n", "f_mw", "c_act", "zeta"])
        for b in bids:
            writer.writerow(
                [b.actor, b.start, b.length, repr(b.amplitude), repr(b.activation_price), repr(b.efficiency)]
            )


def read_modulation_bids_csv(path) -> list[ModulationBid]:
    out = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            out.append(
                ModulationBid(
                    actor=row["actor"],
                    start=int(row["tau"]),
                    length=int(row["n"]),
                    amplitude=float(row["f_mw"]),
                    activation_price=float(row["c_act"]),
                    efficiency=float(row["zeta"]),
                )
            )
    return out


def write_procurement_csv(result: ReserveProcurement, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["kind", "bid_id", "actor", "fraction", "contracted_mw"])
        for k, (bid, x) in enumerate(zip(result.classical, result.classical_fraction)):
            writer.writerow(["classical", k, bid.actor, repr(float(x)), repr(bid.volume * float(x))])
        for k, (bid, x) in enumerate(zip(result.modulation, result.modulation_fraction)):
            writer.writerow(["modulation", k, bid.actor, repr(float(x)), repr(bid.amplitude * float(x))])
