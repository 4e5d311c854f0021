"""Explicit-rating trust metrics and their fairness requirements.

Reputation is a scalar in [-1, 1] (1 best, -1 worst) accumulated from
explicit ratings in the same range. Three accumulation schemes live here:

``wses``
    Weighted simple exponential smoothing. Keeps two smoothed weights,
    one for positive and one for negative rating mass::

        r > 0:  (p_pos, p_neg) -> (p_pos * a + (1 - a) * r,  p_neg * a)
        r < 0:  (p_pos, p_neg) -> (p_pos * a,  p_neg * a - (1 - a) * r)
        r = 0:  state unchanged

    and reports trust ``(p_pos - p_neg) / (p_pos + p_neg)``. Constant
    memory, and newer ratings dominate older ones at a rate set by the
    smoothing factor ``alpha``.

``continuous``
    Running arithmetic mean of all ratings. The naive baseline.

``weighted``
    Signed-mass accumulator over a bounded FIFO window: positive ratings
    add to the positive mass, negative ratings add their magnitude to the
    negative mass, and once ``storage_cap`` ratings are stored the oldest
    is evicted before a new one enters.

Two fairness requirements are checked by the harness in this module:

R1 (rank preservation)
    Appending a larger positive rating never yields lower trust than
    appending a smaller one, unless the smaller one already reaches the
    maximum trust value.

R2 (positive progress)
    Every positive rating strictly increases trust, unless trust is
    already maximal.

The smoothing metric satisfies both everywhere on its state space. The
running mean violates R2 whenever a positive rating falls below the
current (non-maximal) mean, and the windowed accumulator violates R2
exactly when eviction kicks in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Rating",
    "RatingHistory",
    "RatingState",
    "WeightedState",
    "MetricConfig",
    "normalized_average",
    "wses_update",
    "wses_trust",
    "continuous_update",
    "continuous_trust",
    "weighted_update",
    "weighted_trust",
    "TrustMetric",
    "WsesMetric",
    "ContinuousMetric",
    "WeightedMetric",
    "make_metric",
    "METRIC_NAMES",
    "Witness",
    "RequirementReport",
    "check_r1",
    "check_r2",
    "search_witnesses",
    "check_requirements",
    "DEFAULT_SLACK",
]


class Rating(float):
    """A single explicit rating, restricted to [-1, 1]."""

    __slots__ = ()

    def __new__(cls, value: float) -> "Rating":
        v = float(value)
        if math.isnan(v) or not -1.0 <= v <= 1.0:
            raise ValueError(f"rating must be in [-1, 1], got {value!r}")
        return super().__new__(cls, v)


# Arrival-ordered ratings, oldest first.
RatingHistory = tuple[float, ...]


@dataclass(frozen=True)
class RatingState:
    """Two-weight accumulator: positive and negative rating mass.

    The smoothing metric keeps this pair in [0, 1] x [0, 1]; nothing else
    about a partner's history needs to be remembered.
    """

    p_pos: float = 0.0
    p_neg: float = 0.0

    def __post_init__(self) -> None:
        if self.p_pos < 0.0 or self.p_neg < 0.0:
            raise ValueError(
                f"rating mass must be non-negative, got ({self.p_pos}, {self.p_neg})"
            )

    def to_dict(self) -> dict:
        """JSON form used by scenario checkpoints."""
        return {"p_pos": self.p_pos, "p_neg": self.p_neg}

    @classmethod
    def from_dict(cls, data: dict) -> "RatingState":
        return cls(float(data["p_pos"]), float(data["p_neg"]))


@dataclass(frozen=True)
class WeightedState:
    """Bounded window of ratings plus the signed masses they contribute."""

    ratings: RatingHistory = ()
    p_pos: float = 0.0
    p_neg: float = 0.0

    @property
    def count(self) -> int:
        return len(self.ratings)


@dataclass(frozen=True)
class MetricConfig:
    """Shared knobs for the three metrics.

    alpha
        Smoothing factor in (0, 1). Larger alpha remembers more history;
        with 0.9 the last ~10 ratings dominate.
    storage_cap
        Per-partner rating capacity of the weighted metric's window.
    initial_trust
        Trust reported for a partner with no rating mass at all.
    """

    alpha: float = 0.9
    storage_cap: int = 100
    initial_trust: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.storage_cap < 1:
            raise ValueError(f"storage_cap must be >= 1, got {self.storage_cap}")
        if not -1.0 <= self.initial_trust <= 1.0:
            raise ValueError(
                f"initial_trust must be in [-1, 1], got {self.initial_trust}"
            )


def normalized_average(history: Sequence[float]) -> float:
    """Plain mean of a rating sequence.

    This is the intuitive-but-unfair aggregate: an entity that earns three
    top ratings plus three medium ones ends up *below* an entity with just
    the three top ratings, even though it did twice the work. Kept on raw
    sequences (any scale) so that pathology can be reproduced exactly.
    """
    if len(history) == 0:
        raise ValueError("no ratings")
    return sum(history) / len(history)


def wses_update(state: RatingState, r: float, cfg: MetricConfig) -> RatingState:
    """Fold one rating into the smoothed two-weight state.

    A zero rating carries no information and leaves the state untouched.
    For states in [0,1]^2 and ratings in [-1,1] the result stays in
    [0,1]^2: each weight contracts by ``alpha`` and gains at most
    ``1 - alpha``.
    """
    a = cfg.alpha
    if r > 0.0:
        return RatingState(state.p_pos * a + (1.0 - a) * r, state.p_neg * a)
    if r < 0.0:
        return RatingState(state.p_pos * a, state.p_neg * a - (1.0 - a) * r)
    return state


def wses_trust(state: RatingState, initial_trust: float = 0.0) -> float:
    """Trust readout ``(p_pos - p_neg) / (p_pos + p_neg)``.

    The all-zero state has no defined ratio and reports ``initial_trust``
    instead (a neutral newcomer by default).
    """
    total = state.p_pos + state.p_neg
    if total == 0.0:
        return initial_trust
    return (state.p_pos - state.p_neg) / total


def continuous_update(history: RatingHistory, r: float) -> RatingHistory:
    """Append a rating to the stored history."""
    return tuple(history) + (float(r),)


def continuous_trust(history: RatingHistory, initial_trust: float = 0.0) -> float:
    """Arithmetic mean of all ratings seen so far."""
    if not history:
        return initial_trust
    return sum(history) / len(history)


def weighted_update(state: WeightedState, r: float, cfg: MetricConfig) -> WeightedState:
    """Fold one rating into the bounded signed-mass window.

    When the window is full the oldest rating's contribution is evicted
    before the new one enters; this is the only point where the metric can
    lose ground on a positive rating. Zero ratings carry no signed mass
    and are skipped entirely.
    """
    r = float(r)
    if r == 0.0:
        return state
    ratings, p_pos, p_neg = state.ratings, state.p_pos, state.p_neg
    while len(ratings) >= cfg.storage_cap:
        evicted = ratings[0]
        ratings = ratings[1:]
        if evicted > 0.0:
            p_pos = max(p_pos - evicted, 0.0)
        else:
            p_neg = max(p_neg + evicted, 0.0)
    if r > 0.0:
        p_pos += r
    else:
        p_neg -= r
    return WeightedState(ratings + (r,), p_pos, p_neg)


def weighted_trust(state: WeightedState, initial_trust: float = 0.0) -> float:
    """Trust readout for the windowed accumulator, same ratio as smoothing."""
    total = state.p_pos + state.p_neg
    if total == 0.0:
        return initial_trust
    return (state.p_pos - state.p_neg) / total


# ---------------------------------------------------------------------------
# Metric abstraction: an update rule paired with a trust readout.
# ---------------------------------------------------------------------------


class TrustMetric:
    """Pairs a state-update rule with a trust readout over that state."""

    name: str = "abstract"

    def __init__(self, cfg: MetricConfig | None = None):
        self.cfg = cfg if cfg is not None else MetricConfig()

    def initial_state(self):
        raise NotImplementedError

    def update(self, state, r: float):
        raise NotImplementedError

    def trust(self, state) -> float:
        raise NotImplementedError

    def state_from_history(self, ratings: Iterable[float]):
        """Fold a rating sequence, oldest first, from the initial state."""
        state = self.initial_state()
        for r in ratings:
            state = self.update(state, r)
        return state

    def sample_state(self, rng: np.random.Generator, min_history: int = 0,
                     max_history: int = 40):
        """One random base state for the requirement harness."""
        return self.sample_states(rng, 1, min_history, max_history)[0]

    def sample_states(self, rng: np.random.Generator, n: int,
                      min_history: int = 0, max_history: int = 40) -> list:
        """Random base states built by folding random rating histories."""
        lengths = rng.integers(min_history, max_history + 1, size=n)
        pool = rng.uniform(-1.0, 1.0, size=int(lengths.sum()))
        states = []
        start = 0
        for length in lengths:
            states.append(self.state_from_history(pool[start:start + length]))
            start += length
        return states

    def describe_state(self, state) -> dict:
        """JSON-able view of a state, for witness reports."""
        return {"state": repr(state)}


class WsesMetric(TrustMetric):
    """Weighted simple exponential smoothing over a two-weight state."""

    name = "wses"

    def initial_state(self) -> RatingState:
        return RatingState()

    def update(self, state: RatingState, r: float) -> RatingState:
        return wses_update(state, r, self.cfg)

    def trust(self, state: RatingState) -> float:
        return wses_trust(state, self.cfg.initial_trust)

    def sample_states(self, rng, n, min_history=0, max_history=40):
        # The reachable state space is the full unit square; sample it
        # directly instead of folding histories.
        masses = rng.random((n, 2))
        return [RatingState(p1, p2) for p1, p2 in masses]

    def describe_state(self, state: RatingState) -> dict:
        return state.to_dict()


class ContinuousMetric(TrustMetric):
    """Running mean; state is the pair (count, total)."""

    name = "continuous"

    def initial_state(self) -> tuple[int, float]:
        return (0, 0.0)

    def update(self, state: tuple[int, float], r: float) -> tuple[int, float]:
        n, total = state
        return (n + 1, total + float(r))

    def trust(self, state: tuple[int, float]) -> float:
        n, total = state
        if n == 0:
            return self.cfg.initial_trust
        return total / n

    def describe_state(self, state) -> dict:
        return {"count": state[0], "total": state[1]}


class WeightedMetric(TrustMetric):
    """Bounded signed-mass window with FIFO eviction."""

    name = "weighted"

    def initial_state(self) -> WeightedState:
        return WeightedState()

    def update(self, state: WeightedState, r: float) -> WeightedState:
        return weighted_update(state, r, self.cfg)

    def trust(self, state: WeightedState) -> float:
        return weighted_trust(state, self.cfg.initial_trust)

    def describe_state(self, state: WeightedState) -> dict:
        return {
            "ratings": list(state.ratings),
            "p_pos": state.p_pos,
            "p_neg": state.p_neg,
        }


METRIC_NAMES = ("wses", "continuous", "weighted")

_METRIC_CLASSES = {
    "wses": WsesMetric,
    "continuous": ContinuousMetric,
    "weighted": WeightedMetric,
}


def make_metric(name: str, cfg: MetricConfig | None = None) -> TrustMetric:
    """Instantiate a metric by name: wses, continuous or weighted."""
    try:
        cls = _METRIC_CLASSES[name]
    except KeyError:
        raise ValueError(f"unknown metric {name!r}, expected one of {METRIC_NAMES}")
    return cls(cfg)


# ---------------------------------------------------------------------------
# Requirement harness.
# ---------------------------------------------------------------------------

# Strict inequalities are checked with this absolute slack so float noise
# in the trust ratios cannot masquerade as a violation.
DEFAULT_SLACK = 1e-12


@dataclass(frozen=True)
class Witness:
    """A concrete counterexample to R1 or R2.

    The requirement demands ``got > bound``; the witness records a case
    where ``got`` fell short by more than the permitted slack. For R1,
    ``got``/``bound`` are the trust values after adding the larger/smaller
    rating; for R2 they are the trust values after/before the rating.
    """

    requirement: str
    state: dict
    ratings: tuple[float, ...]
    got: float
    bound: float

    @property
    def violation(self) -> float:
        return self.bound - self.got

    def to_dict(self) -> dict:
        return {
            "requirement": self.requirement,
            "state": self.state,
            "ratings": list(self.ratings),
            "got": self.got,
            "bound": self.bound,
            "violation": self.violation,
        }


@dataclass
class RequirementReport:
    """Outcome of a randomized witness search for one requirement."""

    metric: str
    requirement: str
    trials: int
    witness_count: int
    witnesses: list[Witness]

    @property
    def passed(self) -> bool:
        return self.witness_count == 0

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "requirement": self.requirement,
            "trials": self.trials,
            "witness_count": self.witness_count,
            "witnesses": [w.to_dict() for w in self.witnesses],
        }


def check_r1(metric: TrustMetric, state, r1: float, r2: float,
             slack: float = DEFAULT_SLACK) -> Witness | None:
    """Check rank preservation on one base state.

    Requires ``r1 > r2 > 0``. Returns None when the requirement holds
    (including the escape case where the smaller rating already reaches
    maximum trust) and a Witness otherwise; failure is a value, never an
    exception.
    """
    if not (r1 > 0.0 and r2 > 0.0):
        raise ValueError("R1 requires positive ratings")
    if not r1 > r2:
        raise ValueError("R1 requires r1 > r2")
    hi = metric.trust(metric.update(state, r1))
    lo = metric.trust(metric.update(state, r2))
    if lo >= 1.0:
        return None
    if lo - hi > slack:
        return Witness("R1", metric.describe_state(state), (r1, r2), hi, lo)
    return None


def check_r2(metric: TrustMetric, state, r: float,
             slack: float = DEFAULT_SLACK) -> Witness | None:
    """Check positive progress on one base state.

    Requires ``r > 0``. A positive rating must strictly increase trust
    unless trust is already maximal. Returns None on pass, a Witness on
    failure.
    """
    if not r > 0.0:
        raise ValueError("R2 requires a positive rating")
    before = metric.trust(state)
    if before >= 1.0:
        return None
    after = metric.trust(metric.update(state, r))
    if before - after > slack:
        return Witness("R2", metric.describe_state(state), (r,), after, before)
    return None


def _positive_ratings(rng: np.random.Generator, n: int) -> np.ndarray:
    # (0, 1]: rng.random() is [0, 1), so 1 - it is strictly positive.
    return 1.0 - rng.random(n)


def search_witnesses(metric: TrustMetric, requirement: str, trials: int,
                     rng: np.random.Generator | int, *,
                     min_history: int = 0, max_history: int = 40,
                     slack: float = DEFAULT_SLACK,
                     max_witnesses: int = 10) -> RequirementReport:
    """Randomized witness search for one requirement over one metric.

    Base states come from the metric's own sampler (the full unit square
    for smoothing, folded random histories for the others); ratings are
    uniform. At most ``max_witnesses`` witnesses are retained, but all of
    them are counted.
    """
    if requirement not in ("R1", "R2"):
        raise ValueError(f"unknown requirement {requirement!r}")
    if trials < 1:
        raise ValueError("trials must be positive")
    if isinstance(rng, (int, np.integer)):
        rng = np.random.default_rng(int(rng))

    states = metric.sample_states(rng, trials, min_history, max_history)
    ra = _positive_ratings(rng, trials)
    rb = _positive_ratings(rng, trials)

    witnesses: list[Witness] = []
    count = 0
    for i in range(trials):
        if requirement == "R1":
            r1, r2 = ra[i], rb[i]
            while r1 == r2:
                r2 = 1.0 - rng.random()
            if r2 > r1:
                r1, r2 = r2, r1
            w = check_r1(metric, states[i], r1, r2, slack)
        else:
            w = check_r2(metric, states[i], ra[i], slack)
        if w is not None:
            count += 1
            if len(witnesses) < max_witnesses:
                witnesses.append(w)
    return RequirementReport(metric.name, requirement, trials, count, witnesses)


def check_requirements(metric: TrustMetric, trials: int,
                       seed: int | np.random.Generator = 0, *,
                       min_history: int = 0, max_history: int = 40,
                       slack: float = DEFAULT_SLACK,
                       max_witnesses: int = 10) -> dict[str, RequirementReport]:
    """Run the R1 and R2 searches and key the reports by requirement."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return {
        req: search_witnesses(
            metric, req, trials, rng,
            min_history=min_history, max_history=max_history,
            slack=slack, max_witnesses=max_witnesses,
        )
        for req in ("R1", "R2")
    }
