import csv
import filecmp

import numpy as np
import pytest

from flexmarket.cli import main
from flexmarket.scenario import (
    ScenarioConfig,
    config_from_text,
    config_to_text,
    generate_scenario,
)
from flexmarket.agents.retailer import ConfigurationError


def fast_config_file(tmp_path, **overrides):
    config = ScenarioConfig(periods=8, max_rounds=30, forecast_window=8, **overrides)
    path = tmp_path / "scenario.cfg"
    path.write_text(config_to_text(config))
    return path


def read_metrics(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


def test_config_text_round_trip():
    config = ScenarioConfig(seed=7, flexibility_rate=0.04, setting="open", max_rounds=123)
    parsed = config_from_text(config_to_text(config))
    assert parsed == config


def test_config_rejects_unknown_keys_and_bad_values():
    with pytest.raises(ConfigurationError):
        config_from_text("bogus_key = 3\n")
    with pytest.raises(ConfigurationError):
        config_from_text("flexibility_rate = 1.5\n")
    with pytest.raises(ConfigurationError):
        config_from_text("setting = sideways\n")


def test_generate_scenario_same_seed_identical():
    a = generate_scenario(ScenarioConfig(seed=11))
    b = generate_scenario(ScenarioConfig(seed=11))
    assert all(
        np.array_equal(ua.cost, ub.cost)
        for pa, pb in zip(a.producers, b.producers)
        for ua, ub in zip(pa.units, pb.units)
    )
    c = generate_scenario(ScenarioConfig(seed=12))
    assert any(
        not np.array_equal(ua.cost, uc.cost)
        for pa, pc in zip(a.producers, c.producers)
        for ua, uc in zip(pa.units, pc.units)
    )


def test_run_emits_reloadable_metrics(tmp_path):
    from flexmarket.simulator import run as run_simulation

    config_path = fast_config_file(tmp_path)
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_path), "--out-dir", str(out)]) == 0
    rows = read_metrics(out / "metrics.csv")
    assert rows, "metrics.csv must not be empty"

    # the file reproduces the in-memory metrics exactly (repr round-trips)
    outcome = run_simulation(config_from_text(config_path.read_text()))
    assert len(rows) == len(outcome.rounds)
    for row, record in zip(rows, outcome.rounds):
        assert float(row["mean_price"]) == record.metrics.mean_price
        assert float(row["price_variability"]) == record.metrics.price_variability
        assert float(row["total_imbalance_mwh"]) == record.metrics.total_imbalance
        assert float(row["procurement_cost_eur"]) == record.metrics.procurement_cost
        assert float(row["non_contracted_mwh"]) == record.metrics.non_contracted
    assert (out / "manifest.txt").exists()
    assert (out / "figures" / "mean_price_by_round.svg").exists()
    assert (out / "rounds" / "0" / "settlement.csv").exists()


def test_replay_reproduces_byte_identical_outputs(tmp_path):
    config_path = fast_config_file(tmp_path)
    first = tmp_path / "first"
    again = tmp_path / "again"
    main(["run", "--config", str(config_path), "--out-dir", str(first)])
    main(["replay", str(first / "manifest.txt"), "--out-dir", str(again)])
    assert (first / "metrics.csv").read_bytes() == (again / "metrics.csv").read_bytes()
    comparison = filecmp.dircmp(first, again)
    assert not comparison.diff_files


def test_flag_overrides_reach_the_manifest(tmp_path):
    out = tmp_path / "out"
    main(
        [
            "run",
            "--config",
            str(fast_config_file(tmp_path)),
            "--out-dir",
            str(out),
            "--seed",
            "5",
            "--rate",
            "0.02",
            "--setting",
            "open",
            "--max-rounds",
            "12",
        ]
    )
    config = config_from_text((out / "manifest.txt").read_text())
    assert config.seed == 5
    assert config.flexibility_rate == 0.02
    assert config.setting == "open"
    assert config.max_rounds == 12


def test_sweep_identical_settings_at_zero_rate(tmp_path):
    out = tmp_path / "sweep"
    assert (
        main(
            [
                "sweep",
                "--config",
                str(fast_config_file(tmp_path)),
                "--out-dir",
                str(out),
                "--rates",
                "0",
            ]
        )
        == 0
    )
    with open(out / "sweep.csv", newline="") as handle:
        rows = {row["setting"]: row for row in csv.DictReader(handle)}
    assert rows["closed"]["status"] == "ok" and rows["open"]["status"] == "ok"
    for column in ("mean_price", "procurement_cost_eur", "total_imbalance_mwh"):
        assert rows["closed"][column] == rows["open"][column]
    for name in ("price_variability", "total_imbalance", "procurement_cost", "non_contracted"):
        assert (out / "figures" / f"{name}.svg").exists()


def test_sweep_survives_failing_cell(tmp_path):
    out = tmp_path / "sweep"
    # 2.5 is an illegal flexibility rate; those cells must fail without
    # aborting the healthy rate-0 cells
    assert (
        main(
            [
                "sweep",
                "--config",
                str(fast_config_file(tmp_path)),
                "--out-dir",
                str(out),
                "--rates",
                "0,2.5",
            ]
        )
        == 0
    )
    with open(out / "sweep.csv", newline="") as handle:
        rows = list(csv.DictReader(handle))
    by_rate = {(row["rate"], row["setting"]): row for row in rows}
    assert by_rate[("0.0", "closed")]["status"] == "ok"
    assert by_rate[("2.5", "closed")]["status"].startswith("error")
    assert by_rate[("2.5", "open")]["status"].startswith("error")


def test_verify_runs_clean():
    assert main(["verify", "--loads", "2", "--samples", "100", "--seed", "3"]) == 0
