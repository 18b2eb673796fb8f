"""Round loop: energy auction, reserve procurement, settlement, learning.

One round is one simulated day.  Actors optimize against forecasts, the
energy market clears, the reserve requirement follows the cleared
consumption, the reserve market clears (producers always; retailers too in
the open setting), everyone repositions against what actually cleared, and
the settlement prices the resulting imbalances.  Actors then learn: price
forecasts absorb the new observations, and threshold pins react to cap or
extreme-tariff events.  Rounds repeat until forecasts match outcomes, the
actors revisit an earlier joint position (a cycle), or the round budget
runs out.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import energy_market, imbalance
from .agents import (
    ForecastParameters,
    optimize_producer,
    optimize_retailer,
    producer_energy_offers,
    producer_reserve_bids,
)
from .agents.forecast import forecast as make_forecast
from .agents.producer import fleet_capacity
from .energy_market import DEMAND, EnergyOffer
from .reserve_market import ModulationBid, ReserveProcurement, clear_reserve
from .scenario import OPEN, Scenario, ScenarioConfig, generate_scenario

VOLUME_TOL = 1e-9


class RoundError(RuntimeError):
    """A module failure, annotated with round, stage and actor."""


@dataclass
class RoundMetrics:
    mean_price: float
    price_variability: float
    total_imbalance: float
    procurement_cost: float
    non_contracted: float

    def as_tuple(self):
        return (
            self.mean_price,
            self.price_variability,
            self.total_imbalance,
            self.procurement_cost,
            self.non_contracted,
        )


@dataclass
class RoundRecord:
    index: int
    energy_price: np.ndarray
    tariff_up: np.ndarray
    tariff_down: np.ndarray
    submitted_demand: dict[str, np.ndarray]
    submitted_sale: dict[str, np.ndarray]
    retailer_positions: dict[str, object]
    producer_positions: dict[str, object]
    offers: list[EnergyOffer]
    clearing: energy_market.ClearingResult
    procurement: ReserveProcurement
    settlement: imbalance.SettlementResult
    fees: dict[str, float]
    metrics: RoundMetrics
    state: np.ndarray = field(repr=False, default=None)

    def recompute_metrics(self, period_hours: float) -> RoundMetrics:
        return _round_metrics(
            self.energy_price, self.procurement, self.settlement, period_hours
        )


@dataclass
class SimulationOutcome:
    termination: str                     # converged | cycle | max_rounds
    cycle_start: int | None
    cycle_length: int | None
    rounds: list[RoundRecord]
    cycle_metrics: RoundMetrics
    config: ScenarioConfig

    def terminal_rounds(self) -> list[RoundRecord]:
        if self.termination == "cycle":
            return self.rounds[self.cycle_start : self.cycle_start + self.cycle_length]
        if self.termination == "converged":
            return self.rounds[-1:]
        tail = min(50, len(self.rounds))
        return self.rounds[-tail:]


def run(config: ScenarioConfig, scenario: Scenario | None = None) -> SimulationOutcome:
    """Simulate until convergence, a cycle, or the round budget."""
    config.validate()
    if scenario is None:
        scenario = generate_scenario(config)
    t_count = config.periods
    backend = config.solver
    params = ForecastParameters(
        alpha=config.forecast_alpha,
        window=config.forecast_window,
        price_cap=config.price_cap,
        non_contracted_price=config.non_contracted_price,
        energy_seed=config.energy_seed_price,
        tariff_seed=config.tariff_seed_price,
    )
    windows = scenario.config.bid_windows() if config.setting == OPEN else None

    price_history: list[np.ndarray] = []
    up_history: list[np.ndarray] = []
    down_history: list[np.ndarray] = []
    rounds: list[RoundRecord] = []
    states: list[np.ndarray] = []

    termination = "max_rounds"
    cycle_start = cycle_length = None

    for index in range(config.max_rounds):
        fc = make_forecast(price_history, up_history, down_history, params, t_count)
        record = _play_round(index, scenario, fc, windows, backend)
        rounds.append(record)

        _learn(scenario, record, config)
        # recurrence needs positions AND the learned state: a position match
        # while a threshold is still counting down to forgetting is not a
        # genuine cycle, the system will leave it again
        states.append(np.concatenate([record.state, _learning_state(scenario)]))
        price_history.append(record.energy_price)
        up_history.append(record.tariff_up)
        down_history.append(record.tariff_down)

        eps = config.convergence_tolerance
        if (
            np.max(np.abs(fc.energy - record.energy_price)) <= eps
            and np.max(np.abs(fc.imbalance_up - record.tariff_up)) <= eps
            and np.max(np.abs(fc.imbalance_down - record.tariff_down)) <= eps
        ):
            termination = "converged"
            break
        hit = _match_earlier(states, config.state_tolerance)
        if hit is not None:
            termination = "cycle"
            cycle_start, cycle_length = hit, index - hit
            break

    if termination == "cycle":
        window_records = rounds[cycle_start : cycle_start + cycle_length]
    elif termination == "converged":
        window_records = rounds[-1:]
    else:
        window_records = rounds[-min(50, len(rounds)) :]
    return SimulationOutcome(
        termination=termination,
        cycle_start=cycle_start,
        cycle_length=cycle_length,
        rounds=rounds,
        cycle_metrics=aggregate_metrics(window_records),
        config=config,
    )


def _play_round(index, scenario, fc, windows, backend):
    config = scenario.config
    t_count = config.periods

    # stage 1: day-ahead positions and the energy auction
    offers: list[EnergyOffer] = []
    retailer_stage1 = {}
    for portfolio in scenario.retailers:
        with _stage_guard(index, "day-ahead", portfolio.name):
            position = optimize_retailer(
                portfolio,
                fc,
                config.price_cap,
                config.non_contracted_price,
                windows=windows,
                modulation_price=config.modulation_capacity_price,
                backend=backend,
            )
        retailer_stage1[portfolio.name] = position
        for t in range(t_count):
            if position.demand[t] > VOLUME_TOL:
                offers.append(
                    EnergyOffer(
                        actor=portfolio.name,
                        period=t,
                        side=DEMAND,
                        volume=float(position.demand[t]),
                        price=config.price_cap,
                    )
                )
    producer_stage1 = {}
    for portfolio in scenario.producers:
        with _stage_guard(index, "day-ahead", portfolio.name):
            position = optimize_producer(
                portfolio, fc, config.price_cap, config.non_contracted_price, backend=backend
            )
        producer_stage1[portfolio.name] = position
        offers.extend(producer_energy_offers(position, portfolio, fc))

    with _stage_guard(index, "energy-clearing", "market"):
        clearing = energy_market.clear(offers, t_count, config.price_cap)

    # stage 2: reserve requirement from cleared consumption, then procurement
    cleared_consumption = np.zeros(t_count)
    for portfolio in scenario.retailers:
        cleared_consumption += clearing.demand_of(portfolio.name)
    required = config.reserve_rate * cleared_consumption

    classical = []
    bid_units: list[tuple[str, str]] = []  # (producer, unit) parallel to classical
    producer_stage2 = {}
    for portfolio in scenario.producers:
        with _stage_guard(index, "reserve-bidding", portfolio.name):
            position = optimize_producer(
                portfolio,
                fc,
                config.price_cap,
                config.non_contracted_price,
                fixed_sale=clearing.supply_of(portfolio.name),
                backend=backend,
            )
        producer_stage2[portfolio.name] = position
        for bid, unit_name in producer_reserve_bids(position, portfolio):
            classical.append(bid)
            bid_units.append((portfolio.name, unit_name))

    modulation = []
    bid_windows: list[tuple[str, int]] = []  # (retailer, window index) parallel
    if windows:
        for portfolio in scenario.retailers:
            amplitudes = retailer_stage1[portfolio.name].amplitudes
            for w, (start, length) in enumerate(windows):
                if amplitudes[w] > VOLUME_TOL:
                    modulation.append(
                        ModulationBid(
                            actor=portfolio.name,
                            start=start,
                            length=length,
                            amplitude=float(amplitudes[w]),
                            activation_price=0.0,
                            efficiency=config.modulation_efficiency,
                        )
                    )
                    bid_windows.append((portfolio.name, w))

    with _stage_guard(index, "reserve-clearing", "market"):
        procurement = clear_reserve(
            classical, modulation, required, required, config.reserve_prices(), backend=backend
        )

    # stage 3: reposition against cleared quantities
    producer_final = {}
    for portfolio in scenario.producers:
        fixed_up = {unit.name: np.zeros(t_count) for unit in portfolio.units}
        fixed_down = {unit.name: np.zeros(t_count) for unit in portfolio.units}
        for bid, (owner, unit_name), x in zip(
            procurement.classical, bid_units, procurement.classical_fraction
        ):
            if owner != portfolio.name:
                continue
            target = fixed_up if bid.direction == "up" else fixed_down
            target[unit_name][bid.period] += bid.volume * float(x)
        with _stage_guard(index, "reposition", portfolio.name):
            producer_final[portfolio.name] = optimize_producer(
                portfolio,
                fc,
                config.price_cap,
                config.non_contracted_price,
                fixed_sale=clearing.supply_of(portfolio.name),
                fixed_reserve_up=fixed_up,
                fixed_reserve_down=fixed_down,
                backend=backend,
            )

    retailer_final = {}
    for portfolio in scenario.retailers:
        fixed_amplitudes = None
        if windows:
            fixed_amplitudes = np.zeros(len(windows))
            for bid, (owner, w), x in zip(
                procurement.modulation, bid_windows, procurement.modulation_fraction
            ):
                if owner == portfolio.name:
                    fixed_amplitudes[w] = bid.amplitude * float(x)
        with _stage_guard(index, "reposition", portfolio.name):
            retailer_final[portfolio.name] = optimize_retailer(
                portfolio,
                fc,
                config.price_cap,
                config.non_contracted_price,
                windows=windows,
                modulation_price=config.modulation_capacity_price,
                fixed_demand=clearing.demand_of(portfolio.name),
                fixed_amplitudes=fixed_amplitudes,
                backend=backend,
            )

    # settlement of the resulting system imbalance
    system = np.zeros(t_count)
    actor_imbalances = {}
    for name, position in {**retailer_final, **producer_final}.items():
        system += position.imbalance_up - position.imbalance_down
        actor_imbalances[name] = (
            position.imbalance_up * config.period_hours,
            position.imbalance_down * config.period_hours,
        )
    with _stage_guard(index, "settlement", "operator"):
        settlement = imbalance.settle(
            system, procurement, config.non_contracted_price, backend=backend
        )
        tariff_up, tariff_down = imbalance.tariffs(settlement, config.non_contracted_price)
    charges = imbalance.fees(tariff_up, tariff_down, actor_imbalances)

    submitted_demand = {n: p.demand for n, p in retailer_stage1.items()}
    submitted_sale = {n: p.sale for n, p in producer_stage1.items()}
    state = _state_vector(
        clearing.price, tariff_up, tariff_down, submitted_demand, submitted_sale,
        retailer_final, producer_final, windows,
    )
    return RoundRecord(
        index=index,
        energy_price=clearing.price,
        tariff_up=tariff_up,
        tariff_down=tariff_down,
        submitted_demand=submitted_demand,
        submitted_sale=submitted_sale,
        retailer_positions=retailer_final,
        producer_positions=producer_final,
        offers=offers,
        clearing=clearing,
        procurement=procurement,
        settlement=settlement,
        fees=charges,
        metrics=_round_metrics(
            clearing.price, procurement, settlement, config.period_hours
        ),
        state=state,
    )


class _stage_guard:
    def __init__(self, round_index, stage, actor):
        self.context = (round_index, stage, actor)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not isinstance(exc, RoundError):
            round_index, stage, actor = self.context
            raise RoundError(
                f"round {round_index}, stage {stage!r}, actor {actor!r}: {exc}"
            ) from exc
        return False


def _state_vector(price, tariff_up, tariff_down, demand, sale, retailers, producers, windows):
    parts = [price, tariff_up, tariff_down]
    for name in sorted(demand):
        parts.append(demand[name])
        position = retailers[name]
        parts.append(position.imbalance_up)
        parts.append(position.imbalance_down)
        if windows:
            parts.append(position.amplitudes)
    for name in sorted(sale):
        parts.append(sale[name])
        position = producers[name]
        parts.append(position.imbalance_up)
        parts.append(position.imbalance_down)
    return np.concatenate(parts)


def _learning_state(scenario: Scenario) -> np.ndarray:
    parts = []
    for portfolio in sorted(scenario.retailers, key=lambda p: p.name):
        parts.append(portfolio.demand_threshold.state_vector())
        parts.append(portfolio.imbalance_up_threshold.state_vector())
        parts.append(portfolio.imbalance_down_threshold.state_vector())
    for portfolio in sorted(scenario.producers, key=lambda p: p.name):
        parts.append(portfolio.min_sale_threshold.state_vector())
        parts.append(portfolio.imbalance_up_threshold.state_vector())
        parts.append(portfolio.imbalance_down_threshold.state_vector())
    return np.concatenate(parts)


def _match_earlier(states: list[np.ndarray], tol: float) -> int | None:
    """Earliest previous round whose state matches the latest one."""
    if len(states) < 2:
        return None
    current = states[-1]
    history = np.vstack(states[:-1])
    gaps = np.max(np.abs(history - current[None, :]), axis=1)
    hits = np.flatnonzero(gaps <= tol)
    return int(hits[0]) if hits.size else None


def detect_cycle(states: list[np.ndarray], tol: float = 1e-6) -> tuple[int, int] | None:
    """First (start, length) with a repeated joint state, scanning forward."""
    for r in range(1, len(states)):
        hit = _match_earlier(states[: r + 1], tol)
        if hit is not None:
            return hit, r - hit
    return None


def _round_metrics(price, procurement, settlement, period_hours) -> RoundMetrics:
    non_contracted = float(
        np.sum(settlement.non_contracted_up + settlement.non_contracted_down) * period_hours
    )
    total = float(
        np.sum(settlement.activated_up + settlement.activated_down) * period_hours
    )
    return RoundMetrics(
        mean_price=float(np.mean(price)),
        price_variability=float(np.max(price) - np.min(price)),
        total_imbalance=total,
        procurement_cost=float(procurement.contracted_cost),
        non_contracted=non_contracted,
    )


def aggregate_metrics(records: list[RoundRecord]) -> RoundMetrics:
    """Plain means of the per-round metrics over a window of rounds."""
    if not records:
        raise ValueError("cannot aggregate an empty set of rounds")
    rows = np.array([r.metrics.as_tuple() for r in records])
    means = rows.mean(axis=0)
    return RoundMetrics(*[float(v) for v in means])


def _learn(scenario: Scenario, record: RoundRecord, config: ScenarioConfig) -> None:
    capped = record.energy_price >= config.price_cap - 1e-9
    up_extreme = (record.tariff_up <= 1e-9) | (
        record.tariff_up >= config.non_contracted_price - 1e-9
    )
    down_extreme = (record.tariff_down <= 1e-9) | (
        record.tariff_down >= config.non_contracted_price - 1e-9
    )
    for portfolio in scenario.retailers:
        position = record.retailer_positions[portfolio.name]
        portfolio.demand_threshold.update(capped, record.submitted_demand[portfolio.name])
        portfolio.imbalance_up_threshold.update(up_extreme, position.imbalance_up)
        portfolio.imbalance_down_threshold.update(down_extreme, position.imbalance_down)
    for portfolio in scenario.producers:
        position = record.producer_positions[portfolio.name]
        # a cap round means the fleet withheld too much at the forecast; the
        # learned floor anchors to what the fleet could deliver, so supply
        # actually returns next round instead of re-pinning the cap
        portfolio.min_sale_threshold.update(capped, fleet_capacity(portfolio))
        portfolio.imbalance_up_threshold.update(up_extreme, position.imbalance_up)
        portfolio.imbalance_down_threshold.update(down_extreme, position.imbalance_down)
