"""Analyses over a ConceptRealm: alignment, evolution, keepers, leavers, distribution."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Mapping, Sequence

import numpy as np

from .corpus import ISSUE, NotAnalyzable, ProcessedDoc, build_corpus, vectorize
from .modelselect import select_k
from .realm import (
    ALL,
    ConceptRealm,
    Window,
    absolute_frequency,
    build_realm,
    developer_frequencies,
    issue_frequency,
    quarter_of,
)
from .stats import paired_t_test
from .topicmodel import LdaConfig, infer_document, train_lda

EQUAL, UNEQUAL, NEITHER = "Equal", "Unequal", "Neither"


# --- alignment --------------------------------------------------------------


@dataclass(frozen=True)
class AlignmentConfig:
    n_topics: int | None = None  # None -> select K on the training half
    k_min: int = 1
    k_max: int = 10
    lda: LdaConfig = LdaConfig(n_topics=1)
    no_below: int = 15
    no_above: float = 0.5
    min_issues: int = 10
    top_n: int = 1
    fold_in_iterations: int = 50


@dataclass(frozen=True)
class AlignmentResult:
    project_key: str
    year: int
    n_topics: int
    n_test_issues: int
    mean_assignee_score: float
    mean_active_score: float
    mean_diff: float
    accuracy: float
    t_statistic: float
    degrees_of_freedom: int
    p_value: float
    degenerate: bool = False


def _ranked(freqs: Mapping[str, np.ndarray], concept: int) -> list[str]:
    return sorted(freqs, key=lambda d: (-freqs[d][concept], d))


def evaluate_alignment(
    processed: Sequence[ProcessedDoc],
    project_key: str,
    year: int,
    seed: int,
    config: AlignmentConfig = AlignmentConfig(),
) -> AlignmentResult:
    """Train on the first half of ``year`` and score assignees of second-half issues.

    For each assigned test issue the strongest concept is taken from the fold-in
    weights; the assignee's and the most active developer's first-half
    developer frequencies at that concept form the paired samples.
    """
    mid = datetime(year, 7, 1, tzinfo=timezone.utc)
    start = datetime(year, 1, 1, tzinfo=timezone.utc)
    end = datetime(year + 1, 1, 1, tzinfo=timezone.utc)
    train = [d for d in processed if start <= d.timestamp < mid]
    test = [d for d in processed if mid <= d.timestamp < end and d.kind == ISSUE]
    n_train_issues = sum(d.kind == ISSUE for d in train)
    if n_train_issues < config.min_issues or len(test) < config.min_issues:
        raise NotAnalyzable(f"{year}: {n_train_issues}/{len(test)} issues per half, need {config.min_issues}")

    corpus = build_corpus(project_key, train, config.no_below, config.no_above)
    if config.n_topics is None:
        k_max = min(config.k_max, len(corpus.vocabulary))
        sel = select_k(corpus.documents, corpus.vocabulary, config.k_min, k_max, seed, config.lda, keep_models=True)
        k = sel.chosen_k
        model = sel.models[k]
    else:
        k = config.n_topics
        model = train_lda(corpus.documents, corpus.vocabulary, replace(config.lda, n_topics=k), seed ^ k)
    realm = build_realm(corpus, model, seed, config.fold_in_iterations)

    counts = realm.comment_counts()
    if not counts:
        raise NotAnalyzable(f"{year}: no comments in the training half")
    most_active = min(counts, key=lambda d: (-counts[d], d))
    freqs = {d: fv.values for d, fv in developer_frequencies(realm).items()}

    assignee_scores, active_scores, hits = [], [], 0
    for doc in sorted(test, key=lambda d: d.doc_id):
        if doc.developer is None:
            continue
        w = infer_document(model, vectorize(doc, corpus.vocabulary), config.fold_in_iterations, seed)
        c = int(np.argmax(w))
        assignee_scores.append(float(freqs[doc.developer][c]) if doc.developer in freqs else 0.0)
        active_scores.append(float(freqs[most_active][c]))
        if doc.developer in _ranked(freqs, c)[: config.top_n]:
            hits += 1
    n = len(assignee_scores)
    if n < 2:
        raise NotAnalyzable(f"{year}: fewer than two assigned test issues")
    tt = paired_t_test(assignee_scores, active_scores)
    mean_a = math.fsum(assignee_scores) / n
    mean_b = math.fsum(active_scores) / n
    return AlignmentResult(project_key, year, k, n, mean_a, mean_b, mean_a - mean_b, hits / n,
                           tt.t, tt.df, tt.p_value, tt.degenerate)


# --- evolution, MSE, keepers -------------------------------------------------


def yearly_issue_frequencies(realm: ConceptRealm) -> tuple[list[int], np.ndarray]:
    """Years holding issues and the matching (n_years, K) frequency matrix."""
    years = realm.issue_years()
    if not years:
        return [], np.zeros((0, realm.n_topics))
    return years, np.array([issue_frequency(realm, Window.year(y)).values for y in years])


def volatility_from_frequencies(freqs: np.ndarray) -> float | None:
    """75th percentile (linear) across concepts of the population variance of year-to-year deltas."""
    if freqs.shape[0] < 3:
        return None
    deltas = np.diff(freqs, axis=0)
    return float(np.percentile(deltas.var(axis=0), 75))


def concept_volatility(realm: ConceptRealm) -> float | None:
    return volatility_from_frequencies(yearly_issue_frequencies(realm)[1])


def mse(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.mean((np.asarray(a) - np.asarray(b)) ** 2))


def issue_comment_mse(realm: ConceptRealm, window: Window = ALL) -> float | None:
    team = issue_frequency(realm, window)
    if team is None:
        return None
    devs = developer_frequencies(realm, window)
    if not devs:
        return None
    return float(np.mean([mse(team.values, fv.values) for fv in devs.values()]))


@dataclass(frozen=True)
class KeeperCount:
    project_key: str
    year: int
    concept_id: int
    threshold: float
    count: int
    n_developers: int


def keeper_count_from_shares(shares: Sequence[float], threshold: float = 0.5) -> int:
    """Shortest prefix of the descending shares reaching ``threshold``."""
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    total = 0.0
    ordered = sorted(shares, reverse=True)
    for i, s in enumerate(ordered, start=1):
        total += s
        if total >= threshold - 1e-12:
            return i
    return len(ordered)


def most_important_concept(realm: ConceptRealm, window: Window = ALL) -> int | None:
    fv = issue_frequency(realm, window)
    return None if fv is None else int(np.argmax(fv.values))


def normalized_shares(realm: ConceptRealm, concept: int, window: Window = ALL) -> dict[str, float]:
    """Per-developer share of the window's acf at ``concept``; empty if nobody commented."""
    acf = {d: float(absolute_frequency(realm, window, d).values[concept]) for d in realm.developers(window)}
    total = math.fsum(acf.values())
    if total <= 0:
        return {}
    return {d: v / total for d, v in acf.items()}


def count_keepers(realm: ConceptRealm, year: int, threshold: float = 0.5) -> KeeperCount | None:
    window = Window.year(year)
    concept = most_important_concept(realm, window)
    if concept is None:
        return None
    shares = normalized_shares(realm, concept, window)
    if not shares:
        return None
    ordered = sorted(shares, key=lambda d: (-shares[d], d))
    count = keeper_count_from_shares([shares[d] for d in ordered], threshold)
    return KeeperCount(realm.project_key, year, concept, threshold, count, len(shares))


# --- leavers and turnover impact -------------------------------------------


@dataclass(frozen=True)
class LeaverEvent:
    developer: str
    project_key: str
    quarter: int  # linear quarter index of the departure quarter
    trailing_avg: float
    comment_rank: int


def dense_rank(counts: Mapping[str, float], developer: str) -> int | None:
    """1-based dense rank by descending count among developers with count > 0."""
    mine = counts.get(developer, 0)
    if mine <= 0:
        return None
    return 1 + len({c for c in counts.values() if c > mine})


def comment_rank(realm: ConceptRealm, developer: str, first_quarter: int, last_quarter: int) -> int | None:
    return dense_rank(realm.comment_counts(Window.quarters(first_quarter, last_quarter)), developer)


def quarterly_comment_counts(realm: ConceptRealm) -> tuple[int, dict[str, list[int]]]:
    """Dense per-developer quarterly counts over the project's quarter range."""
    rng = realm.quarter_range()
    if rng is None:
        return 0, {}
    first, last = rng
    series = {}
    for d in realm.developers():
        series[d] = [0] * (last - first + 1)
    for e in realm.comments.values():
        series[e.developer][quarter_of(e.timestamp) - first] += 1
    return first, series


def detect_leavers(
    counts: Mapping[str, Sequence[int]],
    first_quarter: int = 0,
    threshold: float = 0.10,
    project_key: str = "",
) -> list[LeaverEvent]:
    """Earliest quarter t per developer with trailing mean (t-4..t-1) > 0 and
    every count in t..t+3 below ``threshold`` times that mean."""
    devs = sorted(counts)
    if not devs:
        return []
    arr = np.array([list(counts[d]) for d in devs], dtype=float)
    n_q = arr.shape[1]
    if n_q < 8:
        return []
    # candidate t runs over 4..n_q-4; window views are indexed by t-4
    trailing = np.lib.stride_tricks.sliding_window_view(arr, 4, axis=1)[:, : n_q - 7].mean(axis=2)
    ahead = np.lib.stride_tricks.sliding_window_view(arr, 4, axis=1)[:, 4:].max(axis=2)
    flagged = (trailing > 0) & (ahead < threshold * trailing)
    events = []
    for i, d in enumerate(devs):
        hits = np.flatnonzero(flagged[i])
        if hits.size == 0:
            continue
        t = int(hits[0]) + 4
        pre = {dev: float(arr[j, t - 4:t].sum()) for j, dev in enumerate(devs)}
        events.append(LeaverEvent(d, project_key, first_quarter + t, float(trailing[i, t - 4]), dense_rank(pre, d)))
    return events


def leavers_from_realm(realm: ConceptRealm, threshold: float = 0.10) -> list[LeaverEvent]:
    first, series = quarterly_comment_counts(realm)
    return detect_leavers(series, first, threshold, realm.project_key)


def proportionality(diff: float, median: float) -> str:
    """Label a concept's change against the median change over all concepts."""
    if diff < median:
        return "over-proportional drop" if diff < 0 else "under-proportional increase"
    if diff > median:
        return "over-proportional increase" if diff > 0 else "under-proportional drop"
    return "proportional"


@dataclass(frozen=True)
class TurnoverImpact:
    developer: str
    project_key: str
    quarter: int
    comment_rank: int
    strongest_concept: int
    weakest_concept: int
    diff_strongest: float
    diff_weakest: float
    median_diff: float
    quadrant: str  # sign of diff_strongest: negative / positive / zero
    strongest_label: str
    weakest_label: str
    diffs: tuple[float, ...] = ()


def turnover_impact(realm: ConceptRealm, leaver: LeaverEvent) -> TurnoverImpact:
    t = leaver.quarter
    pre, post = Window.quarters(t - 4, t - 1), Window.quarters(t, t + 3)
    own = absolute_frequency(realm, pre, leaver.developer)
    if own.n == 0:
        raise ValueError(f"{leaver.developer} has no comments before {t}")
    diffs = absolute_frequency(realm, post).values - absolute_frequency(realm, pre).values
    strongest = int(np.argmax(own.values))
    weakest = int(np.argmin(own.values))
    median = float(np.median(diffs))
    d_max = float(diffs[strongest])
    quadrant = "negative" if d_max < 0 else "positive" if d_max > 0 else "zero"
    return TurnoverImpact(
        leaver.developer, realm.project_key, t, leaver.comment_rank, strongest, weakest,
        float(diffs[strongest]), float(diffs[weakest]), median, quadrant,
        proportionality(float(diffs[strongest]), median), proportionality(float(diffs[weakest]), median),
        tuple(float(x) for x in diffs),
    )


# --- distribution, split, MRR -------------------------------------------


def entropy_of_shares(values: Sequence[float], k: int = 5, n_active: int | None = None) -> float | None:
    """Normalized Shannon entropy of the top-``k`` values.

    The normalizer is ln(min(k, n_active)); ``n_active`` defaults to len(values).
    """
    vals = sorted((float(v) for v in values), reverse=True)
    n_active = len(vals) if n_active is None else n_active
    top = vals[:k]
    total = math.fsum(top)
    if total <= 0:
        return None
    n_eff = min(k, n_active)
    if n_eff <= 1:
        return 0.0
    h = -math.fsum((v / total) * math.log(v / total) for v in top if v > 0)
    return h / math.log(n_eff)


def distribution_entropy(realm: ConceptRealm, concept: int, window: Window = ALL, k: int = 5) -> float | None:
    devs = realm.developers(window)
    acf = [float(absolute_frequency(realm, window, d).values[concept]) for d in devs]
    return entropy_of_shares(acf, k, len(devs))


def concentration_gap(realm: ConceptRealm, concept: int | None = None, window: Window = ALL) -> float | None:
    """max minus median of developers' normalized acf shares at the concept."""
    if concept is None:
        concept = most_important_concept(realm, window)
        if concept is None:
            return None
    shares = normalized_shares(realm, concept, window)
    if not shares:
        return None
    vals = list(shares.values())
    return float(max(vals) - np.median(vals))


@dataclass(frozen=True)
class DistributionStats:
    project_key: str
    concept_id: int
    top5_entropy: float | None
    gap: float | None
    split: str = NEITHER


def distribution_stats(realm: ConceptRealm, k: int = 5) -> DistributionStats | None:
    concept = most_important_concept(realm)
    if concept is None:
        return None
    return DistributionStats(realm.project_key, concept, distribution_entropy(realm, concept, ALL, k),
                             concentration_gap(realm, concept))


def split_projects(gaps: Sequence[float], margin: float = 0.01) -> list[str]:
    if len(gaps) < 2:
        return [NEITHER] * len(gaps)
    med = float(np.median(gaps))
    out = []
    for g in gaps:
        if g > med + margin:
            out.append(UNEQUAL)
        elif g < med - margin:
            out.append(EQUAL)
        else:
            out.append(NEITHER)
    return out


def reciprocal_ranks(assignments: Sequence[tuple[str, str]], realm: ConceptRealm, window: Window = ALL) -> list[float]:
    freqs = {d: fv.values for d, fv in developer_frequencies(realm, window).items()}
    out = []
    for issue_id, assignee in assignments:
        c = int(np.argmax(realm.issues[issue_id].weights))
        ranking = _ranked(freqs, c)
        out.append(1.0 / (ranking.index(assignee) + 1) if assignee in freqs else 0.0)
    return out


def mean_reciprocal_rank(assignments: Sequence[tuple[str, str]], realm: ConceptRealm, window: Window = ALL) -> float | None:
    rr = reciprocal_ranks(assignments, realm, window)
    if not rr:
        return None
    return math.fsum(rr) / len(rr)


def mrr_from_ranks(ranks: Sequence[int | None]) -> float | None:
    if not ranks:
        return None
    return math.fsum(0.0 if r is None else 1.0 / r for r in ranks) / len(ranks)


def project_assignments(realm: ConceptRealm) -> list[tuple[str, str]]:
    return [(i, e.assignee) for i, e in sorted(realm.issues.items()) if e.assignee is not None]
