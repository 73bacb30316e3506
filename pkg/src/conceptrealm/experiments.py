"""Synthetic-oracle experiments shared by scripts/ and the acceptance suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analytics import detect_leavers
from .corpus import Corpus, Preprocessor, build_corpus, preprocess_project
from .modelselect import select_k
from .synth import SynthConfig, SynthTruth, activity_traces, generate
from .topicmodel import LdaConfig, train_lda


def planted_corpus(seed: int, topics: int = 3, no_below: int = 15, no_above: float = 0.5, **kw) -> tuple[Corpus, SynthTruth]:
    cfg = SynthConfig(seed=seed, topics=topics, **kw)
    issues, comments, truth = generate(cfg)
    processed = preprocess_project(issues, comments, Preprocessor())
    return build_corpus(cfg.project, processed, no_below, no_above), truth


def greedy_matched_cosine(phi_hat: np.ndarray, phi_true: np.ndarray) -> float:
    """Mean cosine after greedily pairing rows, best pair first."""
    a = phi_hat / np.linalg.norm(phi_hat, axis=1, keepdims=True)
    b = phi_true / np.linalg.norm(phi_true, axis=1, keepdims=True)
    sim = a @ b.T
    free_a, free_b, picked = set(range(len(a))), set(range(len(b))), []
    for _ in range(min(len(a), len(b))):
        i, j = max(((i, j) for i in free_a for j in free_b), key=lambda ij: (sim[ij], -ij[0], -ij[1]))
        picked.append(sim[i, j])
        free_a.discard(i)
        free_b.discard(j)
    return float(np.mean(picked))


def recovery_trial(seed: int, topics: int = 3, config: LdaConfig | None = None) -> float:
    corpus, truth = planted_corpus(seed, topics)
    config = config or LdaConfig(n_topics=topics)
    model = train_lda(corpus.documents, corpus.vocabulary, config, seed)
    return greedy_matched_cosine(model.phi, truth.true_phi(corpus.vocabulary.terms))


def k_selection_trial(seed: int, topics: int = 3, k_max: int = 8, config: LdaConfig | None = None):
    corpus, _ = planted_corpus(seed, topics)
    return select_k(corpus.documents, corpus.vocabulary, 1, k_max, seed, config or LdaConfig(n_topics=1))


def brute_force_leavers(trace, threshold: float = 0.10) -> int | None:
    """Earliest quarter satisfying the leaver rule, checked one quarter at a time."""
    for t in range(4, len(trace) - 3):
        avg = sum(trace[t - 4:t]) / 4
        if avg > 0 and all(trace[q] < threshold * avg for q in range(t, t + 4)):
            return t
    return None


@dataclass(frozen=True)
class LeaverScore:
    precision: float
    recall: float
    planted_recall: float
    n_detected: int


def leaver_trial(seed: int, n_with: int = 50, n_without: int = 50, n_quarters: int = 16) -> LeaverScore:
    traces, planted = activity_traces(seed, n_with, n_without, n_quarters)
    counts = {f"d{i:03d}": tr for i, tr in enumerate(traces)}
    detected = {(e.developer, e.quarter) for e in detect_leavers(counts)}
    oracle = {(d, t) for d, tr in counts.items() if (t := brute_force_leavers(tr)) is not None}
    truth = {(f"d{i:03d}", t) for i, t in enumerate(planted) if t is not None}
    tp = len(detected & oracle)
    return LeaverScore(
        precision=tp / len(detected) if detected else 1.0,
        recall=tp / len(oracle) if oracle else 1.0,
        planted_recall=len(detected & truth) / len(truth) if truth else 1.0,
        n_detected=len(detected),
    )
