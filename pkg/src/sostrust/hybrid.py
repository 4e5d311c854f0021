"""Combining tag similarity with smoothed explicit ratings.

Two schemes:

Audience-specific item ratings
    A numeric rating is enriched with the rater's tags. When a viewer asks
    for an item's trust value, only ratings from raters whose interests
    are similar enough to the viewer's are folded (in arrival order)
    through the smoothing metric. A buyer who cares about looks sees the
    verdict of look-minded raters, not of material-quality testers.

Skill-tag task routing
    An agent keeps one smoothed rating state per skill tag instead of a
    single global reputation. Tasks declare a required skill and go to the
    agent with the best reputation on exactly that skill, and each rated
    outcome updates only that skill. Good performers attract more of the
    work they are good at, so the population specializes.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .metrics import MetricConfig, Rating, RatingState, wses_trust, wses_update
from .simtrust import Corpus, SimTrustConfig, UserProfile, derive_tag_semantics, user_trust

__all__ = [
    "TaggedRating",
    "SkillProfile",
    "TypedTask",
    "star_to_rating",
    "audience_rating",
    "skill_trust",
    "match_task",
    "record_outcome",
    "SpecializationConfig",
    "SpecializationResult",
    "specialization_run",
    "load_tagged_ratings",
    "save_tagged_ratings",
    "SPECIALIZATION_CSV_HEADER",
]

SPECIALIZATION_CSV_HEADER = ("round", "agent", "skill", "tau", "delegated")


@dataclass(frozen=True)
class TaggedRating:
    """One explicit rating enriched with the rater's tags at rating time."""

    rater: str
    item: str
    rating: float  # in [-1, 1]
    tags: tuple[str, ...] = ()
    seq: int = 0


def star_to_rating(stars: int) -> Rating:
    """Map a 1..5 star verdict linearly onto [-1, 1]: (stars - 3) / 2."""
    if not isinstance(stars, (int, np.integer)) or isinstance(stars, bool):
        raise ValueError(f"stars must be an integer, got {stars!r}")
    if not 1 <= stars <= 5:
        raise ValueError(f"stars must be in 1..5, got {stars}")
    return Rating((stars - 3) / 2)


def _profile_from_tags(name: str, tags: Sequence[str],
                       corpus: Corpus | None) -> UserProfile:
    profile = UserProfile(user_id=name, tags=tuple(tags))
    return derive_tag_semantics(profile, corpus if corpus is not None else Corpus([]))


def audience_rating(item_id: str, ratings: Iterable[TaggedRating],
                    viewer: UserProfile, cfg: MetricConfig | None = None, *,
                    theta_trust: float = SimTrustConfig.theta_trust,
                    rater_profiles: dict[str, UserProfile] | None = None,
                    corpus: Corpus | None = None) -> float:
    """Item trust for one viewer, folding only ratings from similar raters.

    The audience of each rating is its attached tag set; a rating without
    tags falls back to the rater's registered profile, and with neither it
    counts globally. Qualifying ratings (interest trust to the viewer at
    least ``theta_trust``) are folded through the smoothing update in
    arrival (``seq``) order. No qualifying ratings means the configured
    newcomer trust. With ``theta_trust`` 0 every rating qualifies and the
    result collapses to the plain smoothing metric.
    """
    cfg = cfg if cfg is not None else MetricConfig()
    if viewer.semantics is None:
        viewer = derive_tag_semantics(viewer, corpus if corpus is not None else Corpus([]))
    relevant = sorted((r for r in ratings if r.item == item_id),
                      key=lambda r: r.seq)
    audience_cache: dict[tuple[str, ...], float] = {}
    state = RatingState()
    for tagged in relevant:
        tags = tuple(tagged.tags)
        if not tags and rater_profiles and tagged.rater in rater_profiles:
            tags = tuple(rater_profiles[tagged.rater].tags)
        if tags:
            trust = audience_cache.get(tags)
            if trust is None:
                rater = _profile_from_tags(tagged.rater, tags, corpus)
                trust = user_trust(viewer, rater)
                audience_cache[tags] = trust
            if trust < theta_trust:
                continue
        state = wses_update(state, tagged.rating, cfg)
    return wses_trust(state, cfg.initial_trust)


# ---------------------------------------------------------------------------
# Per-skill reputation and task routing.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SkillProfile:
    """An agent's smoothed rating state per skill tag.

    Skills appear implicitly, on the first rated task of that type;
    unknown skills report the configured newcomer trust.
    """

    agent_id: str
    skills: dict[str, RatingState] = field(default_factory=dict)


@dataclass(frozen=True)
class TypedTask:
    task_id: str
    required_skill: str


def skill_trust(profile: SkillProfile, skill: str,
                cfg: MetricConfig | None = None) -> float:
    cfg = cfg if cfg is not None else MetricConfig()
    state = profile.skills.get(skill)
    if state is None:
        return cfg.initial_trust
    return wses_trust(state, cfg.initial_trust)


def match_task(task: TypedTask, agents: Sequence[SkillProfile],
               cfg: MetricConfig | None = None) -> str:
    """Route a task to the agent with the best reputation on its skill.

    Ties break toward the lowest agent id, which is what hands work to
    untried newcomers when nobody has a track record yet.
    """
    if not agents:
        raise ValueError("agent pool is empty")
    cfg = cfg if cfg is not None else MetricConfig()
    best = min(agents,
               key=lambda p: (-skill_trust(p, task.required_skill, cfg), p.agent_id))
    return best.agent_id


def record_outcome(profile: SkillProfile, skill: str, r: float,
                   cfg: MetricConfig | None = None) -> SkillProfile:
    """Fold a rated outcome into exactly one skill; others are untouched."""
    cfg = cfg if cfg is not None else MetricConfig()
    skills = dict(profile.skills)
    skills[skill] = wses_update(skills.get(skill, RatingState()), r, cfg)
    return replace(profile, skills=skills)


@dataclass(frozen=True)
class SpecializationConfig:
    """Closed-loop routing experiment over hidden per-skill competence.

    ``competence`` maps agent id -> skill -> probability of a good
    outcome. Successful work is rated from ``success_band``, failed work
    from ``failure_band``. The default smoothing factor is deliberately
    snappier than the grid default: leadership on a skill should flip
    after a single bad result, not after a streak of six. ``exploration``
    is the per-task probability of routing to a uniformly random agent
    instead of the reputation argmax; without it, an agent whose very
    first task fails is pinned at the minimum trust value and can never
    re-enter the rotation.
    """

    competence: dict[str, dict[str, float]]
    skills: tuple[str, ...]
    rounds: int = 500
    seed: int = 3
    metric_config: MetricConfig = field(
        default_factory=lambda: MetricConfig(alpha=0.5))
    success_band: tuple[float, float] = (0.7, 1.0)
    failure_band: tuple[float, float] = (-1.0, -0.5)
    exploration: float = 0.08

    def __post_init__(self) -> None:
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")
        if not 0.0 <= self.exploration <= 1.0:
            raise ValueError("exploration must be in [0, 1]")
        if not self.skills:
            raise ValueError("at least one skill is required")
        if not self.competence:
            raise ValueError("at least one agent is required")
        for agent, per_skill in self.competence.items():
            for skill, p in per_skill.items():
                if not 0.0 <= p <= 1.0:
                    raise ValueError(
                        f"competence[{agent!r}][{skill!r}] must be in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "competence": {a: dict(s) for a, s in self.competence.items()},
            "skills": list(self.skills),
            "rounds": self.rounds,
            "seed": self.seed,
            "metric_config": {
                "alpha": self.metric_config.alpha,
                "storage_cap": self.metric_config.storage_cap,
                "initial_trust": self.metric_config.initial_trust,
            },
            "success_band": list(self.success_band),
            "failure_band": list(self.failure_band),
            "exploration": self.exploration,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SpecializationConfig":
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown specialization fields: {sorted(unknown)}")
        if "metric_config" in data and isinstance(data["metric_config"], dict):
            data["metric_config"] = MetricConfig(**data["metric_config"])
        if "skills" in data:
            data["skills"] = tuple(data["skills"])
        for key in ("success_band", "failure_band"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)


@dataclass
class SpecializationResult:
    """Round-by-round per-agent per-skill reputation and routing log."""

    config: SpecializationConfig
    rows: list[tuple[int, str, str, float, int]]

    def share(self, skill: str, agent: str, last_n: int | None = None) -> float:
        """Fraction of the skill's tasks routed to the agent."""
        first_round = 1
        if last_n is not None:
            first_round = max(1, self.config.rounds - last_n + 1)
        delegated = [r[4] for r in self.rows
                     if r[2] == skill and r[0] >= first_round]
        won = [r[4] for r in self.rows
               if r[2] == skill and r[0] >= first_round and r[1] == agent]
        total = sum(delegated)
        return sum(won) / total if total else 0.0

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(SPECIALIZATION_CSV_HEADER)
            for row in self.rows:
                writer.writerow(row)

    def shares_summary(self, last_n: int | None = None) -> dict:
        agents = sorted(self.config.competence)
        return {
            skill: {agent: self.share(skill, agent, last_n) for agent in agents}
            for skill in self.config.skills
        }


def specialization_run(cfg: SpecializationConfig) -> SpecializationResult:
    """Closed loop of match -> simulated outcome -> per-skill update.

    Each round issues one task per skill: the reputation argmax wins it,
    except for an ``exploration``-sized slice routed to a random agent.
    The winner's hidden competence decides success, the resulting rating
    lands on that skill only, and every agent's per-skill trust is logged
    together with a delegated flag. Deterministic for a fixed
    (seed, config).
    """
    rng = np.random.default_rng(cfg.seed)
    agent_ids = sorted(cfg.competence)
    profiles = {a: SkillProfile(a) for a in agent_ids}
    mcfg = cfg.metric_config
    rows: list[tuple[int, str, str, float, int]] = []
    for rnd in range(1, cfg.rounds + 1):
        winners: dict[str, str] = {}
        for skill in cfg.skills:
            task = TypedTask(f"{skill}-{rnd}", skill)
            if rng.random() < cfg.exploration:
                winner = agent_ids[int(rng.integers(len(agent_ids)))]
            else:
                winner = match_task(task, [profiles[a] for a in agent_ids], mcfg)
            winners[skill] = winner
            success = rng.random() < cfg.competence[winner].get(skill, 0.0)
            band = cfg.success_band if success else cfg.failure_band
            rating = float(rng.uniform(*band))
            profiles[winner] = record_outcome(profiles[winner], skill, rating, mcfg)
        for skill in cfg.skills:
            for agent in agent_ids:
                rows.append((rnd, agent, skill,
                             skill_trust(profiles[agent], skill, mcfg),
                             int(winners[skill] == agent)))
    return SpecializationResult(cfg, rows)


# ---------------------------------------------------------------------------
# Tagged-rating ledger files.
# ---------------------------------------------------------------------------


def load_tagged_ratings(path: str | Path) -> list[TaggedRating]:
    """Read a JSON-lines ledger of {"rater", "item", "stars", "tags", "seq"}
    records, mapping stars onto the [-1, 1] rating domain."""
    ratings = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            ratings.append(TaggedRating(
                rater=rec["rater"],
                item=rec["item"],
                rating=float(star_to_rating(rec["stars"])),
                tags=tuple(rec.get("tags", ())),
                seq=int(rec.get("seq", 0)),
            ))
    ratings.sort(key=lambda r: r.seq)
    return ratings


def save_tagged_ratings(records: Iterable[dict], path: str | Path) -> None:
    """Write raw ledger records (dicts with rater/item/stars/tags/seq)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
