"""Tag semantics, interest trust, recommendation and evaluation."""

import itertools
import json
import math

import pytest
from hypothesis import given, strategies as st

from sostrust.simtrust import (
    Corpus,
    Item,
    RecommendationResult,
    SimTrustConfig,
    TagSemantics,
    UserProfile,
    cold_start_evaluation,
    derive_all,
    derive_tag_semantics,
    evaluate,
    interest_vector,
    jaccard_cf_trust,
    load_corpus,
    load_profiles,
    mean_f1,
    recommend,
    save_corpus,
    save_profiles,
    synth_corpus,
    tag_similarity,
    tf_idf,
    tokenize,
    user_trust,
)


def profile(user_id, tags=(), items=(), preferred=()):
    return UserProfile(user_id=user_id, tags=tuple(tags),
                       items=frozenset(items), preferred=frozenset(preferred))


# --- tokenizer and tf-idf ---------------------------------------------------


def test_tokenize_lowercases_and_splits():
    assert tokenize("Hello, World! x a_b c42") == ["hello", "world", "c42"]


def test_tokenize_unicode():
    assert tokenize("Fußball-Training über ALLES") == ["fußball", "training", "über", "alles"]


def test_corpus_rejects_duplicate_ids():
    with pytest.raises(ValueError):
        Corpus([Item("a", "x y"), Item("a", "z")])


def test_tf_idf_empty_corpus_errors():
    with pytest.raises(ValueError):
        tf_idf(Corpus([]))


def test_tf_idf_ubiquitous_term_weighs_zero():
    corpus = Corpus([Item("a", "shared apple"), Item("b", "shared banana")])
    weights = tf_idf(corpus)
    assert weights["a"].get("shared", 0.0) == 0.0
    assert weights["b"].get("shared", 0.0) == 0.0
    assert weights["a"]["apple"] == pytest.approx(math.log(2))


def test_tf_idf_single_document_all_zero():
    weights = tf_idf(Corpus([Item("a", "term term other")]))
    assert weights["a"] == {}


def test_tf_idf_hand_computed_weight():
    corpus = Corpus([
        Item("a", "rare rare rare filler"),
        Item("b", "filler other"),
        Item("c", "filler other"),
        Item("d", "filler other"),
    ])
    weights = tf_idf(corpus)
    assert weights["a"]["rare"] == pytest.approx(3 * math.log(4), abs=1e-12)


def test_tf_idf_empty_description_gives_empty_vector():
    corpus = Corpus([Item("a", ""), Item("b", "word things")])
    assert tf_idf(corpus)["a"] == {}


# --- tag semantics ----------------------------------------------------------


def test_tag_semantics_single_item_equals_its_vector():
    corpus = Corpus([
        Item("a", "guitar guitar strings", tags=("music",)),
        Item("b", "piano keys", tags=("music",)),
        Item("c", "running shoes", tags=("sport",)),
    ])
    p = derive_tag_semantics(profile("u", tags=("music",), items={"a"}), corpus)
    assert p.semantics["music"].keywords == tf_idf(corpus)["a"]


def test_tag_semantics_unmatched_tag_falls_back_to_label():
    corpus = Corpus([Item("a", "guitar strings", tags=())])
    p = derive_tag_semantics(profile("u", tags=("cooking",), items={"a"}), corpus)
    assert p.semantics["cooking"].keywords == {"cooking": 1.0}


def test_tag_semantics_two_items_average():
    corpus = Corpus([
        Item("a", "alpha alpha", tags=("t",)),
        Item("b", "beta", tags=("t",)),
        Item("c", "gamma gamma gamma", tags=()),
    ])
    p = derive_tag_semantics(profile("u", tags=("t",), items={"a", "b"}), corpus)
    weights = tf_idf(corpus)
    expected = {
        "alpha": weights["a"]["alpha"] / 2,
        "beta": weights["b"]["beta"] / 2,
    }
    assert p.semantics["t"].keywords == pytest.approx(expected)


def test_tag_association_via_description_token():
    # The tag label appearing in an item's description links them even
    # without an explicit item tag.
    corpus = Corpus([
        Item("a", "vintage camera lens", tags=()),
        Item("b", "cooking pots", tags=()),
    ])
    p = derive_tag_semantics(profile("u", tags=("camera",), items={"a", "b"}), corpus)
    assert "lens" in p.semantics["camera"].keywords


# --- similarities -----------------------------------------------------------


def test_tag_similarity_examples():
    a = TagSemantics("a", {"x": 1.0, "y": 1.0})
    b = TagSemantics("b", {"x": 1.0})
    assert tag_similarity(a, a) == pytest.approx(1.0)
    assert tag_similarity(a, TagSemantics("c", {"z": 2.0})) == 0.0
    assert tag_similarity(a, b) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_tag_similarity_zero_vector():
    assert tag_similarity(TagSemantics("a", {}), TagSemantics("b", {"x": 1.0})) == 0.0


@given(st.dictionaries(st.sampled_from("abcdef"), st.floats(0.01, 10), min_size=1),
       st.dictionaries(st.sampled_from("abcdef"), st.floats(0.01, 10), min_size=1))
def test_similarities_symmetric_and_bounded(da, db):
    ta, tb = TagSemantics("a", da), TagSemantics("b", db)
    s_ab, s_ba = tag_similarity(ta, tb), tag_similarity(tb, ta)
    assert s_ab == pytest.approx(s_ba, abs=1e-12)
    assert -1e-12 <= s_ab <= 1 + 1e-12
    pa = UserProfile("a", tags=("t",), semantics={"t": ta})
    pb = UserProfile("b", tags=("t",), semantics={"t": tb})
    u_ab, u_ba = user_trust(pa, pb), user_trust(pb, pa)
    assert u_ab == pytest.approx(u_ba, abs=1e-12)
    assert 0.0 <= u_ab <= 1.0


def test_user_trust_examples():
    pa = UserProfile("a", tags=("t",), semantics={"t": TagSemantics("t", {"x": 2.0})})
    pb = UserProfile("b", tags=("t",), semantics={"t": TagSemantics("t", {"x": 1.0})})
    pc = UserProfile("c", tags=("t",), semantics={"t": TagSemantics("t", {"y": 1.0})})
    assert user_trust(pa, pa) == 1.0
    assert user_trust(pa, pb) == 0.5
    assert user_trust(pa, pc) == 0.0


def test_user_trust_requires_semantics():
    with pytest.raises(ValueError, match="not derived"):
        user_trust(profile("a", tags=("t",)), profile("b", tags=("t",)))


def test_user_trust_empty_profile_trusts_nobody():
    empty = UserProfile("a", tags=(), semantics={})
    other = UserProfile("b", tags=("t",), semantics={"t": TagSemantics("t", {"x": 1.0})})
    assert user_trust(empty, other) == 0.0
    assert user_trust(empty, empty) == 0.0


def test_jaccard_examples():
    assert jaccard_cf_trust(profile("a", items={"x", "y"}),
                            profile("b", items={"x", "y"})) == 1.0
    assert jaccard_cf_trust(profile("a", items={"x"}),
                            profile("b", items={"y"})) == 0.0
    assert jaccard_cf_trust(profile("a", items={"a", "b"}),
                            profile("b", items={"b", "c"})) == pytest.approx(1 / 3)
    assert jaccard_cf_trust(profile("a"), profile("b")) == 0.0


def test_jaccard_matches_exhaustive_enumeration():
    # Brute-force oracle over every pair of subsets of a 5-element universe.
    universe = ["v", "w", "x", "y", "z"]
    subsets = []
    for mask in range(32):
        subsets.append({universe[i] for i in range(5) if mask >> i & 1})
    for sa, sb in itertools.product(subsets, repeat=2):
        inter = sum(1 for e in universe if e in sa and e in sb)
        union = sum(1 for e in universe if e in sa or e in sb)
        expected = 0.0 if union == 0 else inter / union
        got = jaccard_cf_trust(profile("a", items=sa), profile("b", items=sb))
        assert got == expected


# --- recommendation ---------------------------------------------------------


def _semantic(user_id, vec, items=(), preferred=()):
    return UserProfile(user_id, tags=("t",), items=frozenset(items),
                       preferred=frozenset(preferred),
                       semantics={"t": TagSemantics("t", dict(vec))})


def test_recommend_single_trusted_neighbor():
    me = _semantic("me", {"x": 1.0}, items={"B"})
    other = _semantic("other", {"x": 1.0}, items={"A", "B"})
    result = recommend(me, [me, other], None, 5)
    assert result.recommended == ("A",)


def test_recommend_no_neighbor_above_threshold():
    me = _semantic("me", {"x": 1.0})
    stranger = _semantic("s", {"y": 1.0}, items={"A"})
    assert recommend(me, [me, stranger], None, 5).recommended == ()


def test_recommend_threshold_filters_weak_neighbor():
    me = _semantic("me", {"x": 1.0, "y": 0.9})
    strong = _semantic("strong", {"x": 1.0, "y": 1.0}, items={"A"})
    weak = _semantic("weak", {"x": 0.1, "z": 5.0}, items={"C"})
    result = recommend(me, [me, strong, weak], None, 2,
                       SimTrustConfig(theta_trust=0.5))
    assert result.recommended == ("A",)


def test_recommend_never_returns_held_items():
    corpus, profiles = synth_corpus(3, clusters=2, users_per_cluster=5,
                                    items_per_cluster=10)
    derived = derive_all(profiles, corpus)
    for p in derived:
        rec = recommend(p, derived, corpus, 10)
        assert not (set(rec.recommended) & (p.items | p.preferred))


def test_recommend_threshold_monotone():
    corpus, profiles = synth_corpus(11, clusters=2, users_per_cluster=5,
                                    items_per_cluster=10)
    derived = derive_all(profiles, corpus)
    me = derived[0]
    pools = []
    for theta in (0.0, 0.2, 0.4, 0.6, 0.8, 0.99):
        rec = recommend(me, derived, corpus, 1000, SimTrustConfig(theta_trust=theta))
        pools.append(set(rec.recommended))
    for bigger, smaller in zip(pools, pools[1:]):
        assert smaller <= bigger


def test_recommend_ties_break_by_item_id():
    me = _semantic("me", {"x": 1.0})
    other = _semantic("o", {"x": 1.0}, items={"zz", "aa", "mm"})
    rec = recommend(me, [me, other], None, 2)
    assert rec.recommended == ("aa", "mm")


# --- evaluation -------------------------------------------------------------


def test_evaluate_perfect_and_disjoint():
    perfect = evaluate(RecommendationResult("u", ("a", "b")), {"a", "b"})
    assert (perfect.precision, perfect.recall, perfect.f1) == (1.0, 1.0, 1.0)
    none = evaluate(RecommendationResult("u", ("a", "b")), {"c"})
    assert (none.precision, none.recall, none.f1) == (0.0, 0.0, 0.0)


def test_evaluate_hand_computed():
    scores = evaluate(RecommendationResult("u", ("a", "b", "c", "d")),
                      {"a", "b", "x", "y", "z"})
    assert scores.precision == pytest.approx(0.5)
    assert scores.recall == pytest.approx(0.4)
    assert scores.f1 == pytest.approx(4 / 9, abs=1e-12)


def test_evaluate_empty_recommendations():
    scores = evaluate(RecommendationResult("u", ()), {"a"})
    assert (scores.precision, scores.recall, scores.f1) == (0.0, 0.0, 0.0)


def test_evaluate_empty_ground_truth_errors():
    with pytest.raises(ValueError, match="undefined recall"):
        evaluate(RecommendationResult("u", ("a",)), set())


@given(st.sets(st.sampled_from("abcdefgh")),
       st.sets(st.sampled_from("abcdefgh"), min_size=1))
def test_f1_bounds(rec, truth):
    scores = evaluate(RecommendationResult("u", tuple(sorted(rec))), truth)
    assert scores.f1 <= min(2 * scores.precision, 2 * scores.recall) + 1e-12
    assert (scores.f1 == 0.0) == (scores.precision * scores.recall == 0.0)


# --- synthetic corpus -------------------------------------------------------


def test_synth_corpus_validation():
    with pytest.raises(ValueError):
        synth_corpus(1, clusters=0)
    with pytest.raises(ValueError):
        synth_corpus(1, items_per_cluster=4, items_per_user=3, preferred_per_user=3)
    with pytest.raises(ValueError):
        synth_corpus(1, mixing=1.5)


def test_synth_single_cluster_everyone_trusts_everyone():
    corpus, profiles = synth_corpus(5, clusters=1, users_per_cluster=5,
                                    items_per_cluster=8, mixing=0.0)
    derived = derive_all(profiles, corpus)
    for a, b in itertools.combinations(derived, 2):
        assert user_trust(a, b) == 1.0  # above any threshold < 1


def test_synth_disjoint_clusters_have_zero_cross_trust():
    corpus, profiles = synth_corpus(5, clusters=2, users_per_cluster=4,
                                    items_per_cluster=8, mixing=0.0)
    derived = derive_all(profiles, corpus)
    first = [p for p in derived if p.user_id.startswith("c0-")]
    second = [p for p in derived if p.user_id.startswith("c1-")]
    for a in first:
        for b in second:
            assert user_trust(a, b) == 0.0


def test_synth_corpus_deterministic():
    a_corpus, a_profiles = synth_corpus(99)
    b_corpus, b_profiles = synth_corpus(99)
    assert [(i.item_id, i.description, i.tags) for i in a_corpus] == \
           [(i.item_id, i.description, i.tags) for i in b_corpus]
    assert a_profiles == b_profiles


def test_cold_start_tag_route_beats_overlap_route():
    rows = cold_start_evaluation(0)
    assert mean_f1(rows, "simtrust") > mean_f1(rows, "jaccard_cf")
    assert {row[1] for row in rows} == {"simtrust", "jaccard_cf"}


# --- file formats -----------------------------------------------------------


def test_corpus_jsonl_round_trip(tmp_path):
    corpus, profiles = synth_corpus(4, clusters=2, users_per_cluster=2,
                                    items_per_cluster=6)
    path = tmp_path / "corpus.jsonl"
    save_corpus(corpus, path)
    loaded = load_corpus(path)
    assert [(i.item_id, i.description, i.tags) for i in corpus] == \
           [(i.item_id, i.description, i.tags) for i in loaded]
    first = json.loads(path.read_text().splitlines()[0])
    assert set(first) == {"id", "description", "tags"}


def test_profiles_jsonl_round_trip(tmp_path):
    profiles = [profile("u1", tags=("a", "b"), items={"x"}),
                profile("u2", tags=(), items=set())]
    path = tmp_path / "profiles.jsonl"
    save_profiles(profiles, path)
    loaded = load_profiles(path)
    assert [(p.user_id, p.tags, p.items) for p in loaded] == \
           [(p.user_id, p.tags, p.items) for p in profiles]
    first = json.loads(path.read_text().splitlines()[0])
    assert set(first) == {"user", "tags", "items"}
