"""CSV interchange for portfolio building blocks.

Long format, one row per (entity, period); scalar attributes repeat on each
row.  Tank loads carry one extra row per load (period column equal to the
horizon) holding only the final-state energy bounds.
"""

from __future__ import annotations

import csv
from collections import defaultdict

import numpy as np

from .producer import GenerationUnit
from .tank import TankLoad

LOAD_COLUMNS = [
    "name", "period", "power_min", "power_max", "energy_min", "energy_max", "loss",
    "efficiency", "total_min", "total_max", "energy_start", "period_hours",
]
UNIT_COLUMNS = [
    "name", "period", "power_min", "power_max", "cost",
    "ramp_up", "ramp_down", "initial_output",
]


def write_loads_csv(loads: list[TankLoad], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(LOAD_COLUMNS)
        for load in loads:
            for t in range(load.horizon + 1):
                final = t == load.horizon
                writer.writerow(
                    [
                        load.name,
                        t,
                        "" if final else repr(float(load.power_min[t])),
                        "" if final else repr(float(load.power_max[t])),
                        repr(float(load.energy_min[t])),
                        repr(float(load.energy_max[t])),
                        "" if final else repr(float(load.loss[t])),
                        repr(load.efficiency),
                        repr(load.total_min),
                        repr(load.total_max),
                        repr(load.energy_start),
                        repr(load.period_hours),
                    ]
                )


def read_loads_csv(path) -> list[TankLoad]:
    grouped: dict[str, list[dict]] = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            grouped[row["name"]].append(row)
    loads = []
    for name, rows in grouped.items():
        rows.sort(key=lambda r: int(r["period"]))
        horizon = len(rows) - 1
        body = rows[:horizon]
        scalars = rows[0]
        loads.append(
            TankLoad(
                name=name,
                power_min=np.array([float(r["power_min"]) for r in body]),
                power_max=np.array([float(r["power_max"]) for r in body]),
                energy_min=np.array([float(r["energy_min"]) for r in rows]),
                energy_max=np.array([float(r["energy_max"]) for r in rows]),
                efficiency=float(scalars["efficiency"]),
                loss=np.array([float(r["loss"]) for r in body]),
                total_min=float(scalars["total_min"]),
                total_max=float(scalars["total_max"]),
                energy_start=float(scalars["energy_start"]),
                period_hours=float(scalars["period_hours"]),
            )
        )
    return loads


def write_units_csv(units: list[GenerationUnit], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(UNIT_COLUMNS)
        for unit in units:
            for t in range(len(unit.power_max)):
                writer.writerow(
                    [
                        unit.name,
                        t,
                        repr(float(unit.power_min[t])),
                        repr(float(unit.power_max[t])),
                        repr(float(unit.cost[t])),
                        repr(unit.ramp_up),
                        repr(unit.ramp_down),
                        repr(unit.initial_output),
                    ]
                )


def read_units_csv(path) -> list[GenerationUnit]:
    grouped: dict[str, list[dict]] = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.DictReader(handle):
            grouped[row["name"]].append(row)
    units = []
    for name, rows in grouped.items():
        rows.sort(key=lambda r: int(r["period"]))
        scalars = rows[0]
        units.append(
            GenerationUnit(
                name=name,
                power_min=np.array([float(r["power_min"]) for r in rows]),
                power_max=np.array([float(r["power_max"]) for r in rows]),
                ramp_up=float(scalars["ramp_up"]),
                ramp_down=float(scalars["ramp_down"]),
                cost=np.array([float(r["cost"]) for r in rows]),
                initial_output=float(scalars["initial_output"]),
            )
        )
    return units


def write_series_csv(values: np.ndarray, path, column: str = "value") -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["period", column])
        for t, value in enumerate(values):
            writer.writerow([t, repr(float(value))])


def read_series_csv(path) -> np.ndarray:
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        for row in csv.reader(handle):
            rows.append(row)
    body = sorted(rows[1:], key=lambda r: int(r[0]))
    return np.array([float(r[1]) for r in body])
