import math
from itertools import combinations

import pytest
from hypothesis import given, settings, strategies as st

from conceptrealm.modelselect import (
    KRecord,
    WindowStats,
    choose_k,
    concept_coherence,
    jaccard,
    mean_pairwise_jaccard,
    npmi,
    select_k,
)
from conceptrealm.topicmodel import LdaConfig


def test_jaccard_by_hand():
    assert jaccard({"a", "b", "c"}, {"b", "c", "d"}) == 0.5
    assert jaccard(set(), set()) == 0.0
    assert jaccard({1}, {1}) == 1.0


sets = st.frozensets(st.integers(0, 12), max_size=8)


@given(sets, sets)
def test_jaccard_symmetric_and_bounded(a, b):
    j = jaccard(a, b)
    assert j == jaccard(b, a)
    assert 0.0 <= j <= 1.0
    assert (j == 1.0) == (a == b and bool(a))


def test_mean_pairwise_jaccard():
    assert mean_pairwise_jaccard([{1, 2}, {2, 3}, {4}]) == pytest.approx((1 / 3 + 0 + 0) / 3)
    assert mean_pairwise_jaccard([{1}]) == 0.0


def brute_windows(docs, terms, size):
    out = []
    for d in docs:
        spans = [d] if len(d) <= size else [d[i:i + size] for i in range(len(d) - size + 1)]
        out += [set(s) & set(terms) for s in spans]
    return out


@given(st.lists(st.lists(st.integers(0, 5), max_size=14), min_size=1, max_size=6), st.integers(1, 6))
def test_window_counts_match_brute_force(docs, size):
    terms = [0, 1, 2, 3]
    stats = WindowStats.from_documents(docs, terms, size)
    wins = brute_windows(docs, terms, size)
    assert stats.n_windows == len(wins)
    for t in terms:
        assert stats.single[t] == sum(t in w for w in wins)
    for a, b in combinations(terms, 2):
        assert stats.p_joint(a, b) * len(wins) == pytest.approx(sum(a in w and b in w for w in wins))


def test_npmi_exact_cases():
    perfect = WindowStats.from_documents([["a", "b"], ["c"]], "abc", 10)
    assert npmi("a", "b", perfect) == 1.0
    independent = WindowStats.from_documents([["a", "b"], ["a"], ["b"], []], "ab", 10)
    assert npmi("a", "b", independent) == 0.0
    never = WindowStats.from_documents([["a"], ["b"]], "ab", 10)
    assert npmi("a", "b", never) == -1.0
    everywhere = WindowStats.from_documents([["a", "b"], ["a", "b"]], "ab", 10)
    assert npmi("a", "b", everywhere) == 1.0
    with pytest.raises(ValueError):
        npmi("a", "z", never)


@given(st.lists(st.sets(st.sampled_from("abcd"), min_size=1), min_size=1, max_size=12))
def test_npmi_bounded_and_symmetric(windows):
    stats = WindowStats.from_documents([sorted(w) for w in windows], "abcd", 10)
    seen = [t for t in "abcd" if stats.p(t) > 0]
    for a, b in combinations(seen, 2):
        v = npmi(a, b, stats)
        assert -1.0 <= v <= 1.0
        assert v == npmi(b, a, stats)


def test_coherence_is_mean_over_pairs():
    stats = WindowStats.from_documents([["a", "b"], ["c"]], "abc", 10)
    # pairs: ab=1, ac=-1, bc=-1
    assert concept_coherence(["a", "b", "c"], stats) == pytest.approx(-1 / 3)
    assert -1 <= concept_coherence(["a", "b", "c"], stats, "cv") <= 1
    with pytest.raises(ValueError):
        concept_coherence(["a"], stats, "umass")


def test_choose_k_prefers_smaller_on_ties():
    recs = [KRecord(4, 0.5, 0.0, 0.5), KRecord(2, 0.7, 0.2, 0.5), KRecord(3, 0.1, 0.0, 0.1)]
    assert choose_k(recs) == 2
    with pytest.raises(ValueError):
        choose_k([])


@pytest.fixture(scope="module")
def planted():
    from conceptrealm.experiments import planted_corpus

    return planted_corpus(4, docs=120)[0]


def test_select_k_parallel_equals_serial(planted):
    cfg = LdaConfig(1, iterations=60, burn_in=20, lag=10)
    serial = select_k(planted.documents, planted.vocabulary, 1, 4, 3, cfg)
    parallel = select_k(planted.documents, planted.vocabulary, 1, 4, 3, cfg, jobs=3)
    assert serial.records == parallel.records
    assert serial.chosen_k == parallel.chosen_k


def test_select_k_records_failures(planted):
    cfg = LdaConfig(1, iterations=10, burn_in=0, lag=5)
    n_terms = len(planted.vocabulary)
    res = select_k(planted.documents, planted.vocabulary, n_terms, n_terms + 1, 0, cfg)
    assert list(res.failures) == [n_terms + 1]
    assert res.chosen_k == n_terms
