"""Choosing the number of concepts: coherence minus concept overlap."""

from __future__ import annotations

import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Hashable, Iterable, Sequence

import numpy as np

from .corpus import Document, Vocabulary
from .topicmodel import LdaConfig, LdaModel, top_term_ids, train_lda

log = logging.getLogger(__name__)

EPSILON = 1e-12
DEFAULT_WINDOW = 110


def jaccard(set_a: Iterable, set_b: Iterable) -> float:
    a, b = set(set_a), set(set_b)
    union = a | b
    if not union:
        return 0.0
    return len(a & b) / len(union)


def concept_term_sets(model: LdaModel, n: int = 10) -> list[frozenset[int]]:
    return [frozenset(top_term_ids(model.phi[k], n)) for k in range(model.n_topics)]


def mean_pairwise_jaccard(term_sets: Sequence[Iterable]) -> float:
    pairs = list(combinations(range(len(term_sets)), 2))
    if not pairs:
        return 0.0
    return sum(jaccard(term_sets[i], term_sets[j]) for i, j in pairs) / len(pairs)


def concept_overlap(model: LdaModel, n: int = 10) -> float:
    return mean_pairwise_jaccard(concept_term_sets(model, n))


@dataclass
class WindowStats:
    """Boolean sliding-window occurrence counts for a fixed set of terms.

    Documents no longer than ``window_size`` count as a single window.
    """

    n_windows: int
    single: Counter
    pair: Counter

    @classmethod
    def from_documents(cls, documents: Iterable[Sequence[Hashable]], terms: Iterable[Hashable],
                       window_size: int = DEFAULT_WINDOW) -> "WindowStats":
        wanted = set(terms)
        single: Counter = Counter()
        pair: Counter = Counter()
        n_windows = 0

        def add(present):
            nonlocal n_windows
            n_windows += 1
            ordered = sorted(present)
            single.update(ordered)
            pair.update(combinations(ordered, 2))

        for doc in documents:
            seq = list(doc)
            if len(seq) <= window_size:
                add({t for t in seq if t in wanted})
                continue
            live: Counter = Counter(t for t in seq[:window_size] if t in wanted)
            add(set(live))
            for pos in range(window_size, len(seq)):
                out_tok, in_tok = seq[pos - window_size], seq[pos]
                if out_tok in wanted:
                    live[out_tok] -= 1
                    if not live[out_tok]:
                        del live[out_tok]
                if in_tok in wanted:
                    live[in_tok] += 1
                add(set(live))
        return cls(n_windows, single, pair)

    def p(self, term) -> float:
        return self.single[term] / self.n_windows if self.n_windows else 0.0

    def p_joint(self, a, b) -> float:
        if a == b:
            return self.p(a)
        key = (a, b) if a < b else (b, a)
        return self.pair[key] / self.n_windows if self.n_windows else 0.0


def npmi(term_i, term_j, stats: WindowStats, epsilon: float = EPSILON) -> float:
    """Normalized PMI in [-1, 1]; -1 when the terms never share a window."""
    p_i, p_j = stats.p(term_i), stats.p(term_j)
    if p_i == 0 or p_j == 0:
        raise ValueError(f"term never observed: {term_i if p_i == 0 else term_j!r}")
    p_ij = stats.p_joint(term_i, term_j)
    if p_ij < epsilon:
        return -1.0
    if p_ij == 1.0:
        return 1.0
    # log differences keep the perfect-association case exactly 1; summing the
    # marginals first keeps the value symmetric to the last bit
    value = (math.log(p_ij) - (math.log(p_i) + math.log(p_j))) / -math.log(p_ij)
    return min(1.0, max(-1.0, value))


def _npmi_smoothed(stats: WindowStats, a, b, epsilon: float) -> float:
    p_ij = stats.p_joint(a, b) + epsilon
    value = math.log(p_ij / (stats.p(a) * stats.p(b))) / -math.log(p_ij)
    return value


def concept_coherence(term_ids: Sequence, stats: WindowStats, measure: str = "npmi") -> float:
    """Coherence of one concept's top terms.

    ``npmi``: mean NPMI over all unordered pairs. ``cv``: one-set segmentation
    with indirect cosine over NPMI context vectors.
    """
    terms = list(term_ids)
    if measure == "npmi":
        pairs = list(combinations(terms, 2))
        if not pairs:
            return 0.0
        return sum(npmi(a, b, stats) for a, b in pairs) / len(pairs)
    if measure == "cv":
        for t in terms:
            if stats.p(t) == 0:
                raise ValueError(f"term never observed: {t!r}")
        m = np.array([[_npmi_smoothed(stats, a, b, EPSILON) for b in terms] for a in terms])
        total = m.sum(axis=0)
        scores = []
        for row in m:
            denom = np.linalg.norm(row) * np.linalg.norm(total)
            scores.append(float(row @ total / denom) if denom > 0 else 0.0)
        return float(np.mean(scores))
    raise ValueError(f"unknown coherence measure {measure!r}")


def coherence(model: LdaModel, documents: Sequence[Document], window_size: int = DEFAULT_WINDOW,
              measure: str = "npmi", n_terms: int = 10) -> float:
    """Mean concept coherence over the model's concepts."""
    term_sets = [top_term_ids(model.phi[k], n_terms) for k in range(model.n_topics)]
    wanted = {t for ids in term_sets for t in ids}
    stats = WindowStats.from_documents((d.tokens for d in documents), wanted, window_size)
    return float(np.mean([concept_coherence(ids, stats, measure) for ids in term_sets]))


@dataclass(frozen=True)
class KRecord:
    k: int
    coherence: float
    overlap: float
    score: float


@dataclass
class KSelectionResult:
    records: list[KRecord]
    chosen_k: int
    failures: dict[int, str] = field(default_factory=dict)
    models: dict[int, LdaModel] = field(default_factory=dict, repr=False)

    @property
    def mean_coherence(self) -> float:
        return float(np.mean([r.coherence for r in self.records]))

    @property
    def mean_overlap(self) -> float:
        return float(np.mean([r.overlap for r in self.records]))


def choose_k(records: Sequence[KRecord]) -> int:
    """Argmax of score; the smaller K wins ties."""
    best = None
    for r in sorted(records, key=lambda r: r.k):
        if best is None or r.score > best.score:
            best = r
    if best is None:
        raise ValueError("no successful K to choose from")
    return best.k


def _sweep_one(args):
    documents, vocabulary, config, seed, window_size, measure = args
    try:
        model = train_lda(documents, vocabulary, config, seed)
    except ValueError as exc:
        return config.n_topics, None, None, str(exc)
    coh = coherence(model, documents, window_size, measure)
    ovl = concept_overlap(model)
    return config.n_topics, model, KRecord(config.n_topics, coh, ovl, coh - ovl), None


def select_k(
    documents: Sequence[Document],
    vocabulary: Vocabulary,
    k_min: int = 1,
    k_max: int = 30,
    base_seed: int = 0,
    config: LdaConfig | None = None,
    window_size: int = DEFAULT_WINDOW,
    measure: str = "npmi",
    jobs: int = 1,
    keep_models: bool = False,
) -> KSelectionResult:
    """Train one model per K (seed ``base_seed ^ K``) and pick max(coherence - overlap)."""
    if k_min < 1 or k_max < k_min:
        raise ValueError("need 1 <= k_min <= k_max")
    template = config or LdaConfig(n_topics=1)
    tasks = [
        (documents, vocabulary, replace(template, n_topics=k), base_seed ^ k, window_size, measure)
        for k in range(k_min, k_max + 1)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_one, tasks))
    else:
        results = [_sweep_one(t) for t in tasks]
    records, failures, models = [], {}, {}
    for k, model, record, err in results:
        if err is not None:
            log.warning("K=%d failed: %s", k, err)
            failures[k] = err
            continue
        records.append(record)
        if keep_models:
            models[k] = model
    if not records:
        raise ValueError("every candidate K failed to train")
    return KSelectionResult(records, choose_k(records), failures, models)
