"""Reputation-driven desktop-grid simulator.

Agents submit work units every tick; each unit is delegated to the
best-reputed agent still free this tick, the assignee's work quality is
drawn from a band fixed by its behaviour (adaptive workers near +1,
egoistic workers near -1), and the honest submitter's rating is folded
into the assignee's trust state. Agents whose trust drops below the
isolation threshold receive no further delegations, although they can
still submit work of their own. Mid-run a wave of egoistic attackers can
join; the per-tick mean reputation of each behaviour type is logged so
the speed and strength of their isolation can be read off the series.

A run is fully determined by its (seed, config) pair: all randomness
flows through one PCG64 generator seeded once.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterator

import numpy as np

from .metrics import MetricConfig, TrustMetric, make_metric, METRIC_NAMES

__all__ = [
    "ADAPTIVE",
    "EGOISTIC",
    "Agent",
    "Task",
    "ScenarioConfig",
    "GridState",
    "ScenarioResult",
    "new_grid",
    "step",
    "run_scenario",
    "SERIES_CSV_HEADER",
]

ADAPTIVE = "adaptive"
EGOISTIC = "egoistic"

SERIES_CSV_HEADER = ("tick", "agent_type", "mean_reputation", "population")


@dataclass
class Agent:
    agent_id: int
    behavior: str  # fixed for life
    state: object  # metric-specific trust state
    joined_at: int


@dataclass(frozen=True)
class Task:
    task_id: int
    submitter: int


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative, seeded description of one simulation run."""

    seed: int = 7
    metric: str = "wses"
    metric_config: MetricConfig = field(default_factory=MetricConfig)
    initial_benevolent: int = 20
    initial_egoistic: int = 0
    attack_tick: int = 2000
    attacker_count: int = 20
    total_ticks: int = 6000
    tasks_per_tick: int = 25
    isolation_threshold: float = 0.0
    adaptive_band: tuple[float, float] = (0.7, 1.0)
    egoistic_band: tuple[float, float] = (-1.0, -0.5)

    def __post_init__(self) -> None:
        if self.metric not in METRIC_NAMES:
            raise ValueError(f"unknown metric {self.metric!r}")
        for name in ("initial_benevolent", "initial_egoistic", "attacker_count",
                     "total_ticks", "tasks_per_tick"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.initial_benevolent + self.initial_egoistic < 1:
            raise ValueError("scenario needs at least one initial agent")
        if self.attacker_count > 0 and not 1 <= self.attack_tick < self.total_ticks:
            raise ValueError("attack_tick must lie in [1, total_ticks)")
        for band in (self.adaptive_band, self.egoistic_band):
            lo, hi = band
            if not (-1.0 <= lo <= hi <= 1.0):
                raise ValueError(f"rating band {band} must be ordered within [-1, 1]")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["adaptive_band"] = list(self.adaptive_band)
        data["egoistic_band"] = list(self.egoistic_band)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown scenario fields: {sorted(unknown)}")
        if "metric_config" in data and isinstance(data["metric_config"], dict):
            data["metric_config"] = MetricConfig(**data["metric_config"])
        for key in ("adaptive_band", "egoistic_band"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


class GridState:
    """Mutable world state of one run: agents, trust ledger, series log.

    Owns the run's random generator and metric instance, so the state plus
    the config is everything a run needs.
    """

    def __init__(self, cfg: ScenarioConfig):
        self.tick: int = 0
        self.metric: TrustMetric = make_metric(cfg.metric, cfg.metric_config)
        self.rng = np.random.default_rng(cfg.seed)
        self.agents: list[Agent] = []
        self.trust: dict[int, float] = {}
        self.pending: list[Task] = []
        self.series: list[tuple[int, str, float, int]] = []
        self._next_task_id = 0
        for _ in range(cfg.initial_benevolent):
            self._add_agent(ADAPTIVE)
        for _ in range(cfg.initial_egoistic):
            self._add_agent(EGOISTIC)
        self._log_tick()

    def _add_agent(self, behavior: str) -> None:
        agent = Agent(len(self.agents), behavior,
                      self.metric.initial_state(), self.tick)
        self.agents.append(agent)
        self.trust[agent.agent_id] = self.metric.trust(agent.state)

    def _log_tick(self) -> None:
        by_type: dict[str, list[float]] = {}
        for agent in self.agents:
            by_type.setdefault(agent.behavior, []).append(self.trust[agent.agent_id])
        for behavior in (ADAPTIVE, EGOISTIC):
            values = by_type.get(behavior)
            if values:
                self.series.append(
                    (self.tick, behavior, sum(values) / len(values), len(values)))


def new_grid(cfg: ScenarioConfig) -> GridState:
    """Initial grid state; the tick-0 reputation rows are already logged."""
    return GridState(cfg)


def step(state: GridState, cfg: ScenarioConfig) -> GridState:
    """Advance the grid by one tick (mutates and returns the state).

    Per tick: spawn tasks from random submitters, delegate each to the
    highest-reputation non-isolated agent not yet busy this tick (ties go
    to the lowest id, the submitter never works its own unit), rate the
    assignee per its behaviour band, fold the rating into its state, admit
    the attacker wave when due, and log per-type mean reputation. Tasks
    that find no eligible worker expire. One agent handles at most one
    unit per tick; isolated agents keep submitting but never work.
    """
    if state.tick >= cfg.total_ticks:
        raise RuntimeError("scenario complete")
    state.tick += 1
    rng = state.rng
    metric = state.metric
    n_agents = len(state.agents)

    # Spawn: any agent may submit, isolation only blocks inbound work.
    submitter_idx = rng.integers(0, n_agents, size=cfg.tasks_per_tick)
    state.pending = [
        Task(state._next_task_id + j, state.agents[int(i)].agent_id)
        for j, i in enumerate(submitter_idx)
    ]
    state._next_task_id += cfg.tasks_per_tick

    # Delegation order fixed at tick start: reputation desc, id asc.
    eligible = [a for a in state.agents
                if state.trust[a.agent_id] >= cfg.isolation_threshold]
    eligible.sort(key=lambda a: (-state.trust[a.agent_id], a.agent_id))
    busy: set[int] = set()
    for task in state.pending:
        assignee = None
        for agent in eligible:
            if agent.agent_id in busy or agent.agent_id == task.submitter:
                continue
            assignee = agent
            break
        if assignee is None:
            continue  # expires: nobody left to take it
        busy.add(assignee.agent_id)
        lo, hi = (cfg.adaptive_band if assignee.behavior == ADAPTIVE
                  else cfg.egoistic_band)
        rating = float(rng.uniform(lo, hi))
        assignee.state = metric.update(assignee.state, rating)
        state.trust[assignee.agent_id] = metric.trust(assignee.state)
    state.pending = []

    if cfg.attacker_count > 0 and state.tick == cfg.attack_tick:
        for _ in range(cfg.attacker_count):
            state._add_agent(EGOISTIC)

    state._log_tick()
    return state


@dataclass
class ScenarioResult:
    """Completed run: the per-tick series plus summary accessors."""

    config: ScenarioConfig
    rows: list[tuple[int, str, float, int]]

    def series(self, behavior: str) -> tuple[list[int], list[float]]:
        ticks = [r[0] for r in self.rows if r[1] == behavior]
        means = [r[2] for r in self.rows if r[1] == behavior]
        return ticks, means

    def final_mean(self, behavior: str) -> float | None:
        _, means = self.series(behavior)
        return means[-1] if means else None

    def overall_mean(self, behavior: str) -> float | None:
        _, means = self.series(behavior)
        return sum(means) / len(means) if means else None

    def first_tick_at_or_below(self, behavior: str, threshold: float) -> int | None:
        for tick, mean in zip(*self.series(behavior)):
            if mean <= threshold:
                return tick
        return None

    def summary(self) -> list[dict]:
        out = []
        for behavior in (ADAPTIVE, EGOISTIC):
            final = self.final_mean(behavior)
            if final is None:
                continue
            out.append({
                "metric": self.config.metric,
                "type": behavior,
                "mean_reputation_final": final,
                "mean_reputation_overall": self.overall_mean(behavior),
            })
        return out

    def iter_csv_rows(self) -> Iterator[tuple]:
        yield SERIES_CSV_HEADER
        yield from self.rows

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            for row in self.iter_csv_rows():
                writer.writerow(row)

    def write_summary_json(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Run a scenario start to finish and return the logged series."""
    state = new_grid(cfg)
    for _ in range(cfg.total_ticks):
        step(state, cfg)
    return ScenarioResult(cfg, state.series)
