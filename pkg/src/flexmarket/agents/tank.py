"""Tank model of a flexible load, and the modulation coverage check.

A load consumes bounded power each period and fills an energy tank with
bounded state, conversion efficiency and per-period standing losses.  A
modulation commitment around a baseline schedule is summarized by two
extreme consumption scenarios: one that runs high for the first half of the
block and recovers low, and its mirror image.  If both extremes are
feasible, every energy-neutral dispatch the operator can request inside the
band is feasible too; :func:`verify_scenario_coverage` probes that claim
with random dispatches.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class TankLoad:
    """Flexible load with per-period power bounds and a bounded energy tank.

    ``energy_min``/``energy_max`` have one more entry than the horizon: they
    bound the tank state at the start of every period plus the final state.
    ``total_min``/``total_max`` bound the energy drawn over the whole
    horizon.
    """

    name: str
    power_min: np.ndarray
    power_max: np.ndarray
    energy_min: np.ndarray
    energy_max: np.ndarray
    efficiency: float
    loss: np.ndarray
    total_min: float
    total_max: float
    energy_start: float
    period_hours: float = 1.0

    def __post_init__(self):
        self.power_min = np.asarray(self.power_min, dtype=float)
        self.power_max = np.asarray(self.power_max, dtype=float)
        self.energy_min = np.asarray(self.energy_min, dtype=float)
        self.energy_max = np.asarray(self.energy_max, dtype=float)
        self.loss = np.asarray(self.loss, dtype=float)
        t = len(self.power_min)
        if len(self.power_max) != t or len(self.loss) != t:
            raise ValueError(f"load {self.name!r}: power/loss series length mismatch")
        if len(self.energy_min) != t + 1 or len(self.energy_max) != t + 1:
            raise ValueError(f"load {self.name!r}: energy bounds must have {t + 1} entries")
        if np.any(self.power_min > self.power_max):
            raise ValueError(f"load {self.name!r}: power_min above power_max")
        if np.any(self.energy_min > self.energy_max):
            raise ValueError(f"load {self.name!r}: energy_min above energy_max")
        if not 0.0 < self.efficiency <= 1.0:
            raise ValueError(f"load {self.name!r}: efficiency must lie in (0, 1]")
        if self.total_min > self.total_max:
            raise ValueError(f"load {self.name!r}: total energy bounds inverted")
        if not self.energy_min[0] - 1e-9 <= self.energy_start <= self.energy_max[0] + 1e-9:
            raise ValueError(f"load {self.name!r}: starting energy outside bounds")
        if self.period_hours <= 0:
            raise ValueError(f"load {self.name!r}: period length must be positive")

    @property
    def horizon(self) -> int:
        return len(self.power_min)

    def energy_trajectory(self, schedule: np.ndarray) -> np.ndarray:
        """Tank states induced by a consumption schedule, start included."""
        schedule = np.asarray(schedule, dtype=float)
        gain = self.efficiency * schedule * self.period_hours - self.loss
        return np.concatenate([[self.energy_start], self.energy_start + np.cumsum(gain)])

    def schedule_violations(self, schedule: np.ndarray, tol: float = 1e-9) -> list[str]:
        """Human-readable bound violations of a schedule; empty when feasible."""
        schedule = np.asarray(schedule, dtype=float)
        problems = []
        if np.any(schedule < self.power_min - tol) or np.any(schedule > self.power_max + tol):
            problems.append("power bounds")
        states = self.energy_trajectory(schedule)
        if np.any(states < self.energy_min - tol) or np.any(states > self.energy_max + tol):
            problems.append("energy bounds")
        drawn = float(np.sum(schedule) * self.period_hours)
        if drawn < self.total_min - tol or drawn > self.total_max + tol:
            problems.append("total energy bounds")
        return problems


@dataclass
class CoverageReport:
    samples: int
    failures: int
    first_failure: dict | None = field(default=None)

    @property
    def passed(self) -> bool:
        return self.failures == 0


def verify_scenario_coverage(
    load: TankLoad,
    baseline: np.ndarray,
    up_scenario: np.ndarray,
    down_scenario: np.ndarray,
    samples: int = 1000,
    seed: int = 0,
) -> CoverageReport:
    """Probe that the two extreme scenarios cover every dispatch in between.

    Draws ``samples`` random schedules inside the per-half envelopes with
    the same total consumption as the baseline, then checks each against
    the load's power, energy and total-energy limits.  Any failure would
    expose an inconsistency in the scenario construction, so a correct
    model always reports zero.
    """
    n = load.horizon
    if n % 2 != 0:
        raise ValueError("coverage check needs an even number of periods")
    baseline = np.asarray(baseline, dtype=float)
    up = np.asarray(up_scenario, dtype=float)
    down = np.asarray(down_scenario, dtype=float)

    for label, schedule in (("baseline", baseline), ("up", up), ("down", down)):
        problems = load.schedule_violations(schedule)
        if problems:
            raise ValueError(f"{label} scenario infeasible for {load.name!r}: {problems}")
    half = n // 2
    lo = np.concatenate([down[:half], up[half:]])
    hi = np.concatenate([up[:half], down[half:]])
    if np.any(lo > hi + 1e-9):
        raise ValueError("scenario envelopes are not ordered half-by-half")
    target = float(np.sum(baseline))
    if not np.sum(lo) - 1e-7 <= target <= np.sum(hi) + 1e-7:
        raise ValueError("scenarios are not energy neutral around the baseline")

    rng = np.random.default_rng(seed)
    failures = 0
    first_failure = None
    for k in range(samples):
        draw = _random_fixed_sum(rng, lo, hi, target)
        problems = load.schedule_violations(draw, tol=1e-7)
        terminal_gap = abs(
            load.energy_trajectory(draw)[-1] - load.energy_trajectory(baseline)[-1]
        )
        if terminal_gap > 1e-7:
            problems.append("terminal energy differs from baseline")
        if problems:
            failures += 1
            if first_failure is None:
                first_failure = {"sample": k, "schedule": draw, "problems": problems}
    return CoverageReport(samples=samples, failures=failures, first_failure=first_failure)


def _random_fixed_sum(rng, lo, hi, target):
    """Uniform-ish draw from a box restricted to a fixed coordinate sum."""
    n = len(lo)
    out = np.empty(n)
    remaining = target
    tail_lo = np.concatenate([np.cumsum(lo[::-1])[::-1], [0.0]])
    tail_hi = np.concatenate([np.cumsum(hi[::-1])[::-1], [0.0]])
    for t in range(n):
        low = max(lo[t], remaining - tail_hi[t + 1])
        high = min(hi[t], remaining - tail_lo[t + 1])
        value = rng.uniform(low, high) if high > low else low
        out[t] = value
        remaining -= value
    return out


def random_feasible_modulation(rng: np.random.Generator, periods: int | None = None):
    """A random load together with a feasible (baseline, up, down) triple.

    Construction order guarantees feasibility: draw the three schedules
    first, then wrap bounds around whatever they need.  Used by the
    coverage property tests and the command-line ``verify`` run.
    """
    n = int(periods if periods is not None else rng.choice([2, 4, 6, 8]))
    half = n // 2
    base = rng.uniform(1.0, 8.0, size=n)
    swing = rng.uniform(0.2, 3.0)
    # equal per-period deviation keeps the halves energy neutral
    delta = np.concatenate([np.full(half, swing), np.full(half, -swing)])
    up = base + delta
    down = base - delta

    efficiency = float(rng.uniform(0.6, 1.0))
    loss = rng.uniform(0.0, 0.5, size=n)
    energy_start = float(rng.uniform(5.0, 15.0))

    def trajectory(schedule):
        gain = efficiency * schedule - loss
        return np.concatenate([[energy_start], energy_start + np.cumsum(gain)])

    states = [trajectory(s) for s in (base, up, down)]
    load = TankLoad(
        name="random-load",
        power_min=np.minimum.reduce([base, up, down]) - rng.uniform(0.0, 1.0, size=n),
        power_max=np.maximum.reduce([base, up, down]) + rng.uniform(0.0, 1.0, size=n),
        energy_min=np.minimum.reduce(states) - rng.uniform(0.0, 0.5, size=n + 1),
        energy_max=np.maximum.reduce(states) + rng.uniform(0.0, 0.5, size=n + 1),
        efficiency=efficiency,
        loss=loss,
        total_min=float(np.sum(base) - 1e-9),
        total_max=float(np.sum(base) + 1e-9),
        energy_start=energy_start,
        period_hours=1.0,
    )
    return load, base, up, down
