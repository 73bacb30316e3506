"""The ConceptRealm: per-document concept weights bucketed into calendar windows."""

from __future__ import annotations

import json
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import COMMENT, ISSUE, Corpus, Document, format_timestamp, parse_timestamp
from .topicmodel import LdaModel, infer_document

REALM_FORMAT_VERSION = 1


def year_of(ts: datetime) -> int:
    return ts.year


def quarter_of(ts: datetime) -> int:
    """Linear calendar-quarter index: ``year * 4 + (0..3)``."""
    return ts.year * 4 + (ts.month - 1) // 3


def quarter_label(index: int) -> str:
    return f"{index // 4}Q{index % 4 + 1}"


@dataclass(frozen=True)
class Window:
    """Inclusive range of calendar years or quarters; ``unit="all"`` matches everything."""

    unit: str = "all"
    start: int | None = None
    end: int | None = None

    @classmethod
    def year(cls, y: int) -> "Window":
        return cls("year", y, y)

    @classmethod
    def years(cls, first: int, last: int) -> "Window":
        return cls("year", first, last)

    @classmethod
    def quarter(cls, q: int) -> "Window":
        return cls("quarter", q, q)

    @classmethod
    def quarters(cls, first: int, last: int) -> "Window":
        return cls("quarter", first, last)

    def mask(self, years: np.ndarray, quarters: np.ndarray) -> np.ndarray:
        if self.unit == "all":
            return np.ones(years.shape, dtype=bool)
        key = years if self.unit == "year" else quarters
        return (key >= self.start) & (key <= self.end)

    def __str__(self) -> str:
        if self.unit == "all":
            return "all"
        fmt = str if self.unit == "year" else quarter_label
        if self.start == self.end:
            return fmt(self.start)
        return f"{fmt(self.start)}..{fmt(self.end)}"


ALL = Window()


@dataclass(frozen=True)
class IssueEntry:
    issue_id: str
    assignee: str | None
    timestamp: datetime
    weights: np.ndarray


@dataclass(frozen=True)
class CommentEntry:
    comment_id: str
    developer: str
    timestamp: datetime
    weights: np.ndarray
    issue_id: str | None = None


@dataclass(frozen=True)
class RejectedDoc:
    doc_id: str
    kind: str
    reason: str


@dataclass
class ConceptRealm:
    project_key: str
    n_topics: int
    issues: dict[str, IssueEntry] = field(default_factory=dict)
    comments: dict[str, CommentEntry] = field(default_factory=dict)
    model_digest: str = ""
    rejected: list[RejectedDoc] = field(default_factory=list)

    # column views; the realm is not mutated after construction
    @cached_property
    def _issue_cols(self):
        entries = sorted(self.issues.values(), key=lambda e: e.issue_id)
        W = np.array([e.weights for e in entries]).reshape(len(entries), self.n_topics)
        years = np.array([year_of(e.timestamp) for e in entries], dtype=np.int64)
        quarters = np.array([quarter_of(e.timestamp) for e in entries], dtype=np.int64)
        return entries, W, years, quarters

    @cached_property
    def _comment_cols(self):
        entries = sorted(self.comments.values(), key=lambda e: e.comment_id)
        W = np.array([e.weights for e in entries]).reshape(len(entries), self.n_topics)
        years = np.array([year_of(e.timestamp) for e in entries], dtype=np.int64)
        quarters = np.array([quarter_of(e.timestamp) for e in entries], dtype=np.int64)
        devs = np.array([e.developer for e in entries], dtype=object)
        return entries, W, years, quarters, devs

    def issue_weights(self, window: Window = ALL) -> np.ndarray:
        _, W, years, quarters = self._issue_cols
        return W[window.mask(years, quarters)]

    def comment_weights(self, window: Window = ALL, developer: str | None = None) -> np.ndarray:
        _, W, years, quarters, devs = self._comment_cols
        mask = window.mask(years, quarters)
        if developer is not None:
            mask &= devs == developer
        return W[mask]

    def comment_counts(self, window: Window = ALL) -> Counter:
        _, _, years, quarters, devs = self._comment_cols
        return Counter(devs[window.mask(years, quarters)].tolist())

    def developers(self, window: Window = ALL) -> list[str]:
        return sorted(self.comment_counts(window))

    def years(self) -> list[int]:
        """Calendar years holding at least one issue or comment."""
        ys = set(self._issue_cols[2].tolist()) | set(self._comment_cols[2].tolist())
        return sorted(ys)

    def issue_years(self) -> list[int]:
        return sorted(set(self._issue_cols[2].tolist()))

    def quarter_range(self) -> tuple[int, int] | None:
        qs = np.concatenate([self._issue_cols[3], self._comment_cols[3]])
        if qs.size == 0:
            return None
        return int(qs.min()), int(qs.max())


@dataclass(frozen=True)
class FrequencyVector:
    scope: str  # "team" or a developer id
    window: Window
    values: np.ndarray
    n: int


@dataclass(frozen=True)
class AbsoluteFrequency:
    scope: str
    window: Window
    values: np.ndarray
    n: int


def _scaled_mean(W: np.ndarray, K: int) -> np.ndarray:
    return W.sum(axis=0) / W.shape[0] * K


def issue_frequency(realm: ConceptRealm, window: Window = ALL) -> FrequencyVector | None:
    """Mean issue weight per concept times K; ``None`` for a window without issues."""
    W = realm.issue_weights(window)
    if W.shape[0] == 0:
        return None
    return FrequencyVector("team", window, _scaled_mean(W, realm.n_topics), W.shape[0])


def developer_frequency(realm: ConceptRealm, developer: str, window: Window = ALL) -> FrequencyVector | None:
    W = realm.comment_weights(window, developer)
    if W.shape[0] == 0:
        return None
    return FrequencyVector(developer, window, _scaled_mean(W, realm.n_topics), W.shape[0])


def developer_frequencies(realm: ConceptRealm, window: Window = ALL) -> dict[str, FrequencyVector]:
    return {d: developer_frequency(realm, d, window) for d in realm.developers(window)}


def absolute_frequency(realm: ConceptRealm, window: Window = ALL, developer: str | None = None) -> AbsoluteFrequency:
    """Unscaled sum of comment weights, team-wide or for one developer."""
    W = realm.comment_weights(window, developer)
    values = W.sum(axis=0) if W.shape[0] else np.zeros(realm.n_topics)
    return AbsoluteFrequency(developer or "team", window, values, W.shape[0])


# --- construction --------------------------------------------------------------


def _infer_chunk(args):
    model, docs, iterations, seed = args
    return [infer_document(model, d, iterations, seed) for d in docs]


def infer_all(model: LdaModel, documents: Sequence[Document], fold_in_iterations: int = 50,
              seed: int = 0, jobs: int = 1) -> list[np.ndarray]:
    """Weights for every document; output is independent of ``jobs``."""
    docs = list(documents)
    if jobs <= 1 or len(docs) < 2:
        return _infer_chunk((model, docs, fold_in_iterations, seed))
    size = -(-len(docs) // jobs)
    chunks = [(model, docs[i:i + size], fold_in_iterations, seed) for i in range(0, len(docs), size)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return [w for part in pool.map(_infer_chunk, chunks) for w in part]


def build_realm(
    corpus: Corpus,
    model: LdaModel,
    seed: int = 0,
    fold_in_iterations: int = 50,
    jobs: int = 1,
    aliases: dict[str, str] | None = None,
) -> ConceptRealm:
    """Infer weights for every issue and comment of ``corpus``.

    Undated documents and comments dated before the project's first issue are
    listed in ``realm.rejected`` instead of being placed in a window.
    """
    aliases = aliases or {}
    realm = ConceptRealm(corpus.project_key, model.n_topics, model_digest=model.digest)
    if not corpus.documents:
        return realm
    dated = [d for d in corpus.documents if d.timestamp is not None]
    for d in corpus.documents:
        if d.timestamp is None:
            realm.rejected.append(RejectedDoc(d.doc_id, d.kind, "undated"))
    issue_ts = [d.timestamp for d in dated if d.kind == ISSUE]
    project_start = min(issue_ts) if issue_ts else None
    kept = []
    for d in dated:
        if d.kind == COMMENT and project_start is not None and d.timestamp < project_start:
            realm.rejected.append(RejectedDoc(d.doc_id, d.kind, "dated before project start"))
        else:
            kept.append(d)
    weights = infer_all(model, kept, fold_in_iterations, seed, jobs)
    for d, w in zip(kept, weights):
        who = d.author_or_assignee
        if who is not None:
            who = aliases.get(who, who)
        if d.kind == ISSUE:
            realm.issues[d.doc_id] = IssueEntry(d.doc_id, who, d.timestamp, w)
        else:
            realm.comments[d.doc_id] = CommentEntry(d.doc_id, who, d.timestamp, w, d.issue_id)
    return realm


def realm_from_weights(project_key: str, n_topics: int, issues: Iterable[tuple], comments: Iterable[tuple]) -> ConceptRealm:
    """Assemble a realm from explicit weights.

    ``issues``: ``(issue_id, assignee, timestamp, weights)``;
    ``comments``: ``(comment_id, developer, timestamp, weights)``.
    """
    realm = ConceptRealm(project_key, n_topics)
    for issue_id, assignee, ts, w in issues:
        realm.issues[issue_id] = IssueEntry(issue_id, assignee, ts, np.asarray(w, dtype=float))
    for comment_id, dev, ts, w in comments:
        realm.comments[comment_id] = CommentEntry(comment_id, dev, ts, np.asarray(w, dtype=float))
    return realm


# --- persistence ---------------------------------------------------------------


def realm_lines(realm: ConceptRealm) -> list[str]:
    header = {
        "format": "conceptrealm-realm",
        "version": REALM_FORMAT_VERSION,
        "project": realm.project_key,
        "K": realm.n_topics,
        "model": realm.model_digest,
    }
    lines = [json.dumps(header, separators=(",", ":"))]
    for e in sorted(realm.issues.values(), key=lambda e: e.issue_id):
        lines.append(json.dumps({"doc": e.issue_id, "kind": ISSUE, "dev": e.assignee, "ts": format_timestamp(e.timestamp),
                                 "weights": [float(x) for x in e.weights]}, separators=(",", ":")))
    for e in sorted(realm.comments.values(), key=lambda e: e.comment_id):
        rec = {"doc": e.comment_id, "kind": COMMENT, "dev": e.developer, "ts": format_timestamp(e.timestamp),
               "weights": [float(x) for x in e.weights]}
        if e.issue_id is not None:
            rec["issue"] = e.issue_id
        lines.append(json.dumps(rec, separators=(",", ":")))
    return lines


def save_realm(realm: ConceptRealm, path: str | Path) -> None:
    Path(path).write_text("\n".join(realm_lines(realm)) + "\n", encoding="utf-8")


def load_realm(path: str | Path) -> ConceptRealm:
    with open(path, encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("format") != "conceptrealm-realm":
            raise ValueError(f"{path} is not a realm file")
        realm = ConceptRealm(header["project"], header["K"], model_digest=header.get("model", ""))
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            w = np.asarray(rec["weights"], dtype=float)
            ts = parse_timestamp(rec["ts"])
            if rec["kind"] == ISSUE:
                realm.issues[rec["doc"]] = IssueEntry(rec["doc"], rec["dev"], ts, w)
            else:
                realm.comments[rec["doc"]] = CommentEntry(rec["doc"], rec["dev"], ts, w, rec.get("issue"))
    return realm
