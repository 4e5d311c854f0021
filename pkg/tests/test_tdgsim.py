"""Grid mechanics: delegation, isolation, attack injection, determinism."""

import pytest

from sostrust.metrics import MetricConfig
from sostrust.tdgsim import (
    ADAPTIVE,
    EGOISTIC,
    ScenarioConfig,
    new_grid,
    run_scenario,
    step,
)


def small(**overrides):
    base = dict(
        seed=1,
        metric="wses",
        initial_benevolent=6,
        attack_tick=20,
        attacker_count=4,
        total_ticks=60,
        tasks_per_tick=8,
    )
    base.update(overrides)
    return ScenarioConfig(**base)


# --- configuration ----------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(metric="nope")
    with pytest.raises(ValueError):
        ScenarioConfig(initial_benevolent=0, initial_egoistic=0)
    with pytest.raises(ValueError):
        small(attack_tick=60, total_ticks=60)     # must be < total
    with pytest.raises(ValueError):
        small(adaptive_band=(0.9, 0.2))
    with pytest.raises(ValueError):
        small(egoistic_band=(-2.0, -0.5))


def test_config_attack_tick_ignored_without_attackers():
    cfg = ScenarioConfig(initial_benevolent=3, attacker_count=0,
                         attack_tick=2000, total_ticks=5)
    result = run_scenario(cfg)
    assert all(row[3] == 3 for row in result.rows)


def test_config_dict_round_trip():
    cfg = small(metric="weighted",
                metric_config=MetricConfig(alpha=0.8, storage_cap=30))
    again = ScenarioConfig.from_dict(cfg.to_dict())
    assert again == cfg


def test_config_rejects_unknown_fields():
    with pytest.raises(ValueError, match="unknown scenario fields"):
        ScenarioConfig.from_dict({"seed": 1, "warp_speed": True})


# --- stepping ---------------------------------------------------------------


def test_zero_tick_scenario_logs_only_initial_entries():
    cfg = ScenarioConfig(initial_benevolent=4, attacker_count=0, total_ticks=0)
    result = run_scenario(cfg)
    assert result.rows == [(0, ADAPTIVE, 0.0, 4)]


def test_step_past_end_raises():
    cfg = ScenarioConfig(initial_benevolent=2, attacker_count=0, total_ticks=1)
    grid = new_grid(cfg)
    step(grid, cfg)
    with pytest.raises(RuntimeError, match="scenario complete"):
        step(grid, cfg)


def test_population_changes_only_at_attack_tick():
    cfg = small()
    result = run_scenario(cfg)
    per_tick = {}
    for tick, _, _, population in result.rows:
        per_tick[tick] = per_tick.get(tick, 0) + population
    for tick in range(cfg.total_ticks + 1):
        expected = 6 if tick < cfg.attack_tick else 10
        assert per_tick[tick] == expected, tick


def test_no_attackers_keeps_population_constant():
    result = run_scenario(small(attacker_count=0))
    assert all(row[3] == 6 for row in result.rows)
    assert all(row[1] == ADAPTIVE for row in result.rows)


def test_same_seed_same_series():
    cfg = small()
    assert run_scenario(cfg).rows == run_scenario(cfg).rows


def test_different_seed_differs():
    # The smoothing metric saturates at exactly +-1 here, so compare under
    # the mean metric, where logged values reflect the actual draws.
    assert run_scenario(small(seed=1, metric="continuous")).rows != \
        run_scenario(small(seed=2, metric="continuous")).rows


def test_reputation_bounded():
    for metric in ("wses", "continuous", "weighted"):
        result = run_scenario(small(metric=metric))
        assert all(-1.0 <= row[2] <= 1.0 for row in result.rows)


def test_isolation_soundness():
    # An agent below the threshold at tick start must receive no work that
    # tick: its trust state cannot change once isolated (egoists can only
    # be rated further down, never up, so a frozen value means no work).
    cfg = small()
    grid = new_grid(cfg)
    frozen = {}
    for _ in range(cfg.total_ticks):
        isolated_before = {
            a.agent_id: grid.trust[a.agent_id]
            for a in grid.agents
            if grid.trust[a.agent_id] < cfg.isolation_threshold
        }
        step(grid, cfg)
        for agent_id, value in isolated_before.items():
            assert grid.trust[agent_id] == value
        frozen = isolated_before
    assert frozen  # the attack must actually have produced isolated agents


def test_adaptive_agents_converge_high_without_attack():
    cfg = ScenarioConfig(seed=3, initial_benevolent=20, attacker_count=0,
                         total_ticks=2000, tasks_per_tick=25,
                         metric_config=MetricConfig(alpha=0.9))
    result = run_scenario(cfg)
    assert result.final_mean(ADAPTIVE) >= 0.8


def test_attackers_fall_and_are_isolated():
    result = run_scenario(small(total_ticks=120))
    assert result.final_mean(EGOISTIC) <= -0.5
    assert result.final_mean(ADAPTIVE) >= 0.8
    cross = result.first_tick_at_or_below(EGOISTIC, -0.5)
    assert cross is not None
    ticks, means = result.series(EGOISTIC)
    upto = [m for t, m in zip(ticks, means) if t <= cross]
    assert all(b - a <= 1e-12 for a, b in zip(upto, upto[1:]))


def test_initial_egoistic_agents_probe():
    # Pre-seeded egoists exist from tick 0 and get rated down immediately.
    cfg = ScenarioConfig(seed=5, initial_benevolent=5, initial_egoistic=2,
                         attacker_count=0, total_ticks=30, tasks_per_tick=10)
    result = run_scenario(cfg)
    assert result.rows[1] == (0, EGOISTIC, 0.0, 2)
    assert result.final_mean(EGOISTIC) < 0.0


# --- result artifacts -------------------------------------------------------


def test_summary_shape():
    result = run_scenario(small(total_ticks=40))
    summary = result.summary()
    assert [entry["type"] for entry in summary] == [ADAPTIVE, EGOISTIC]
    for entry in summary:
        assert set(entry) == {"metric", "type", "mean_reputation_final",
                              "mean_reputation_overall"}
        assert entry["metric"] == "wses"


def test_csv_output(tmp_path):
    result = run_scenario(small(total_ticks=25))
    path = tmp_path / "series.csv"
    result.write_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "tick,agent_type,mean_reputation,population"
    assert lines[1] == "0,adaptive,0.0,6"
    assert len(lines) == 1 + len(result.rows)


def test_csv_byte_identical_across_runs(tmp_path):
    cfg = small(total_ticks=30)
    paths = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        run_scenario(cfg).write_csv(path)
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]
