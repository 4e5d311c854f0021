"""Trust establishment for open self-organising systems.

Two complementary routes to trust, one library:

* :mod:`sostrust.metrics` - explicit-rating metrics (exponentially
  smoothed two-weight state, running mean, bounded signed-mass window)
  plus a randomized harness for the R1/R2 fairness requirements.
* :mod:`sostrust.simtrust` - tag-based interest similarity grounded in
  tf-idf keyword space, a recommender on top of it, and a Jaccard CF
  baseline with precision/recall/F1 evaluation.
* :mod:`sostrust.tdgsim` - a deterministic desktop-grid simulator in
  which reputation decides delegation and misbehaving agents are isolated.
* :mod:`sostrust.hybrid` - the two combinations: audience-specific
  tag-enriched ratings and per-skill reputations for task routing.
* :mod:`sostrust.cli` - the ``sostrust`` command for reproducible runs.
"""

from .metrics import (
    Rating,
    RatingState,
    WeightedState,
    MetricConfig,
    normalized_average,
    wses_update,
    wses_trust,
    continuous_update,
    continuous_trust,
    weighted_update,
    weighted_trust,
    TrustMetric,
    WsesMetric,
    ContinuousMetric,
    WeightedMetric,
    make_metric,
    Witness,
    RequirementReport,
    check_r1,
    check_r2,
    search_witnesses,
    check_requirements,
)
from .simtrust import (
    Item,
    Corpus,
    TagSemantics,
    UserProfile,
    RecommendationResult,
    EvalScores,
    SimTrustConfig,
    tokenize,
    tf_idf,
    derive_tag_semantics,
    derive_all,
    tag_similarity,
    interest_vector,
    user_trust,
    jaccard_cf_trust,
    recommend,
    evaluate,
    synth_corpus,
    cold_start_evaluation,
)
from .tdgsim import (
    ADAPTIVE,
    EGOISTIC,
    Agent,
    Task,
    ScenarioConfig,
    GridState,
    ScenarioResult,
    new_grid,
    step,
    run_scenario,
)
from .hybrid import (
    TaggedRating,
    SkillProfile,
    TypedTask,
    star_to_rating,
    audience_rating,
    skill_trust,
    match_task,
    record_outcome,
    SpecializationConfig,
    SpecializationResult,
    specialization_run,
)

__version__ = "0.1.0"
