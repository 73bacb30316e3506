"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
import os
import subprocess
import sys
import time
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np
import pytest

from conceptrealm.analytics import (
    AlignmentConfig,
    count_keepers,
    entropy_of_shares,
    evaluate_alignment,
    leavers_from_realm,
    mrr_from_ranks,
    turnover_impact,
)
from conceptrealm.experiments import leaver_trial, k_selection_trial, planted_corpus, recovery_trial
from conceptrealm.modelselect import WindowStats, jaccard, npmi
from conceptrealm.realm import (
    ALL,
    Window,
    absolute_frequency,
    build_realm,
    developer_frequency,
    issue_frequency,
    load_realm,
    realm_from_weights,
)
from conceptrealm.stats import paired_t_test
from conceptrealm.topicmodel import LdaConfig, train_lda

from conftest import alignment_fixture

SEEDS = range(10)


def report(capsys, n, ok, detail):
    with capsys.disabled():
        print(f"\nCRITERION {n:2d} {'PASS' if ok else 'FAIL'}: {detail}")
    assert ok, detail


def cli(*args):
    return subprocess.run([sys.executable, "-m", "conceptrealm", *map(str, args)], capture_output=True, text=True)


@pytest.fixture(scope="session")
def mini_runs(tmp_path_factory, mini_config):
    root = tmp_path_factory.mktemp("mini")
    runs = {}
    for name, extra in (("first", []), ("second", []), ("jobs8", ["--jobs", "8"])):
        r = cli("pipeline", "--config", mini_config, "--output", root / name, *extra)
        assert r.returncode == 0, r.stderr
        runs[name] = root / name
    return runs


def windows_of(realm):
    ws = [ALL] + [Window.year(y) for y in realm.years()]
    lo, hi = realm.quarter_range()
    return ws + [Window.quarter(q) for q in range(lo, hi + 1)]


def synthetic_realms():
    out = []
    for seed in (0, 1, 2):
        corpus, _ = planted_corpus(seed)
        model = train_lda(corpus.documents, corpus.vocabulary, LdaConfig(3, iterations=300, burn_in=100), seed)
        out.append(build_realm(corpus, model, seed, 50))
    return out


@pytest.fixture(scope="session")
def all_realms(mini_runs):
    t0 = time.perf_counter()
    realms = [load_realm(p) for p in sorted(mini_runs["first"].glob("*/realm.jsonl"))] + synthetic_realms()
    return realms, time.perf_counter() - t0


def test_01_weight_conservation(capsys, all_realms):
    realms, build_time = all_realms
    t0 = time.perf_counter()
    worst_w = worst_f = 0.0
    n_vectors = 0
    for realm in realms:
        K = realm.n_topics
        for e in [*realm.issues.values(), *realm.comments.values()]:
            worst_w = max(worst_w, abs(e.weights.sum() - 1.0))
        for w in windows_of(realm):
            vecs = [issue_frequency(realm, w)] + [developer_frequency(realm, d, w) for d in realm.developers(w)]
            for fv in vecs:
                if fv is not None:
                    worst_f = max(worst_f, abs(fv.values.sum() - K))
                    n_vectors += 1
    elapsed = time.perf_counter() - t0 + build_time
    ok = worst_w <= 1e-9 and worst_f <= 1e-9 and elapsed < 10
    report(capsys, 1, ok, f"{len(realms)} realms, max |sum w - 1| = {worst_w:.2e}, "
                          f"max |sum f - K| = {worst_f:.2e} over {n_vectors} vectors, {elapsed:.1f}s")


def test_02_acf_additivity(capsys, all_realms):
    realms, _ = all_realms
    worst = 0.0
    for realm in realms:
        for w in windows_of(realm):
            team = absolute_frequency(realm, w).values
            parts = sum((absolute_frequency(realm, w, d).values for d in realm.developers(w)), np.zeros(realm.n_topics))
            worst = max(worst, float(np.abs(parts - team).max()))
    report(capsys, 2, worst <= 1e-6, f"max |sum_d acf(d,c) - acf(c)| = {worst:.2e} over {len(realms)} realms")


def test_03_planted_topic_recovery(capsys):
    t0 = time.perf_counter()
    scores = [recovery_trial(s, 3) for s in SEEDS]
    elapsed = time.perf_counter() - t0
    hits = sum(c >= 0.9 for c in scores)
    report(capsys, 3, hits >= 8 and elapsed < 60,
           f"{hits}/10 seeds with matched cosine >= 0.9 (min {min(scores):.4f}), {elapsed:.1f}s")


def test_04_k_selection(capsys):
    chosen = [k_selection_trial(s, 3, 8).chosen_k for s in SEEDS]
    hits = chosen.count(3)
    report(capsys, 4, hits >= 8, f"K=3 chosen in {hits}/10 seeds (choices {chosen})")


def share_realm(shares):
    t = datetime(2014, 3, 1, tzinfo=timezone.utc)
    issues = [("I1", "x", t, [1.0, 0.0])]
    comments = [(f"C{i}", f"dev{i}", t, [s, 1.0 - s]) for i, s in enumerate(shares)]
    return realm_from_weights("P", 2, issues, comments)


def test_05_keeper_oracle(capsys):
    skewed = share_realm([0.6, 0.2, 0.1, 0.1])
    flat = share_realm([0.25] * 4)
    c_skewed = count_keepers(skewed, 2014).count
    c_flat = count_keepers(flat, 2014).count
    mono = all(
        [count_keepers(r, 2014, th).count for th in (0.3, 0.5, 0.7)]
        == sorted(count_keepers(r, 2014, th).count for th in (0.3, 0.5, 0.7))
        for r in (skewed, flat)
    )
    report(capsys, 5, c_skewed == 1 and c_flat == 2 and mono,
           f"[0.6,0.2,0.1,0.1] -> {c_skewed}, [0.25x4] -> {c_flat}, monotone over 0.3/0.5/0.7: {mono}")


def test_06_leaver_detector(capsys):
    r = leaver_trial(0, 50, 50)
    ok = r.precision == 1.0 and r.recall == 1.0
    report(capsys, 6, ok, f"precision {r.precision}, recall {r.recall} vs brute force "
                          f"({r.n_detected} events; planted recall {r.planted_recall})")


def turnover_fixture():
    """Leaver L writes every concept-0 comment before leaving; the rest of the team is steady."""
    first = 2011 * 4
    plan = {"L": ([1.0, 0.0, 0.0, 0.0], [5] * 6 + [0] * 6),
            "m": ([0.0, 0.6, 0.2, 0.2], [4] * 12),
            "n": ([0.0, 0.1, 0.6, 0.3], [3] * 12),
            "o": ([0.0, 0.3, 0.3, 0.4], [2] * 6 + [4] * 6)}
    comments, k = [], 0
    for dev, (w, counts) in sorted(plan.items()):
        for q, c in enumerate(counts):
            start = datetime((first + q) // 4, (first + q) % 4 * 3 + 1, 3, tzinfo=timezone.utc)
            for j in range(c):
                k += 1
                comments.append((f"C{k:04d}", dev, start + timedelta(days=j), w))
    issues = [("I1", "m", datetime(2011, 1, 2, tzinfo=timezone.utc), [0.25] * 4)]
    return realm_from_weights("P", 4, issues, comments)


def test_07_turnover_direction(capsys):
    results = []
    for _ in range(2):
        realm = turnover_fixture()
        (ev,) = [e for e in leavers_from_realm(realm) if e.developer == "L"]
        results.append(turnover_impact(realm, ev))
    imp = results[0]
    ok = imp.strongest_concept == 0 and imp.diff_strongest < imp.median_diff and results[0] == results[1]
    report(capsys, 7, ok, f"diff_c={imp.diff_strongest:.3f} < median {imp.median_diff:.3f} "
                          f"({imp.strongest_label}), identical on rerun: {results[0] == results[1]}")


def test_08_metric_unit_oracles(capsys):
    scipy_stats = pytest.importorskip("scipy.stats")
    checks = {}
    checks["jaccard"] = jaccard({"a", "b", "c"}, {"b", "c", "d"}) == 0.5
    checks["npmi perfect"] = npmi("a", "b", WindowStats.from_documents([["a", "b"], ["c"]], "abc")) == 1.0
    checks["npmi independent"] = npmi("a", "b", WindowStats.from_documents([["a", "b"], ["a"], ["b"], []], "ab")) == 0.0
    checks["npmi never"] = npmi("a", "b", WindowStats.from_documents([["a"], ["b"]], "ab")) == -1.0
    checks["entropy equal"] = abs(entropy_of_shares([0.2] * 5) - 1.0) <= 1e-12
    checks["entropy ln2/ln5"] = abs(entropy_of_shares([0.5, 0.5, 0, 0, 0]) - math.log(2) / math.log(5)) <= 1e-12
    checks["mrr"] = mrr_from_ranks([1, 2, 4]) == 7 / 12
    ref = scipy_stats.ttest_1samp([1, 2, 3, 4, 5], 0.0).pvalue
    p = paired_t_test([1, 2, 3, 4, 5], [0] * 5).p_value
    checks["t-test"] = abs(p - ref) <= 1e-3
    failed = [k for k, v in checks.items() if not v]
    report(capsys, 8, not failed, f"{len(checks) - len(failed)}/{len(checks)} unit oracles "
                                  f"(t-test p={p:.6f}, reference {ref:.6f}){'; failed: ' + ', '.join(failed) if failed else ''}")


def test_09_determinism(capsys, mini_runs):
    first, second, jobs8 = (mini_runs[k] / "manifest.json" for k in ("first", "second", "jobs8"))
    same_rerun = first.read_bytes() == second.read_bytes()
    same_jobs = first.read_bytes() == jobs8.read_bytes()
    report(capsys, 9, same_rerun and same_jobs,
           f"manifest identical on rerun: {same_rerun}; --jobs 1 vs --jobs 8: {same_jobs}")


def test_10_alignment_sanity(capsys):
    t0 = time.perf_counter()
    cfg = AlignmentConfig(n_topics=3, lda=LdaConfig(1, iterations=300, burn_in=100))
    r = evaluate_alignment(alignment_fixture(), "P", 2015, 0, cfg)
    elapsed = time.perf_counter() - t0
    ok = r.accuracy == 1.0 and r.mean_diff > 0 and r.p_value < 0.05 and elapsed < 30
    report(capsys, 10, ok, f"accuracy {r.accuracy}, mean_diff {r.mean_diff:.3f}, p {r.p_value:.2e}, "
                           f"n={r.n_test_issues}, {elapsed:.1f}s")
