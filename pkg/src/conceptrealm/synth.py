"""Synthetic issue-tracker corpora with planted topics, keepers and leavers."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .corpus import COMMENT, ISSUE, RawComment, RawIssue, format_timestamp, load_stopwords
from .porter import porter_stem
from .rng import stream

# Candidate vocabulary; only words that survive preprocessing unchanged are used.
_WORD_BANK = """
parser socket thread buffer cache schema index cluster replica shard
token lexer plugin widget render layout canvas pixel shader texture
commit branch merge rebase patch diff blame tag stash
queue broker topic consumer producer offset partition stream batch window
login session cookie oauth secret vault cipher hash salt realm
deploy docker helm pod node kernel driver mount volume disk
query join table column row cursor trigger view lock latch
metric gauge counter histogram alert trace span probe scrape export
build maven gradle jar artifact pom wrapper javac
locale charset font glyph emoji kern accent
heap stack frame pointer leak sweep mark arena
jetty servlet filter header proxy gateway router endpoint mux
xml json yaml toml avro proto thrift parquet orc csv
""".split()

_SYLLABLES_C = "bdfgklmnprstvz"
_SYLLABLES_V = "aiou"


def _stable_words() -> tuple[list[str], int]:
    """Usable words plus how many of them come from the readable bank."""
    stop = load_stopwords()
    seen = set()
    words = []
    for w in _WORD_BANK:
        if w in seen or w in stop or len(w) < 3 or porter_stem(w) != w:
            continue
        seen.add(w)
        words.append(w)
    n_bank = len(words)
    # pseudo-words CVCVC as a fallback for large topic counts
    for c1 in _SYLLABLES_C:
        for v1 in _SYLLABLES_V:
            for c2 in _SYLLABLES_C:
                for v2 in _SYLLABLES_V:
                    w = f"{c1}{v1}{c2}{v2}k"
                    if w not in seen and porter_stem(w) == w:
                        seen.add(w)
                        words.append(w)
    return words, n_bank


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 7
    topics: int = 3
    docs: int = 200
    doc_length: int = 50
    terms_per_topic: int = 10
    developers: int = 9
    years: int = 4
    start_year: int = 2010
    issue_fraction: float = 0.4
    project: str = "SYN"
    leaver: bool = True
    keeper_weight: float = 4.0


@dataclass
class SynthTruth:
    config: SynthConfig
    topic_terms: list[list[str]]
    doc_topics: dict[str, int] = field(default_factory=dict)  # "issue:<id>" / "comment:<id>"
    home_topic: dict[str, int] = field(default_factory=dict)
    keepers: list[str] = field(default_factory=list)
    leaver: str | None = None
    departure: str | None = None  # first day of the departure quarter

    def true_phi(self, terms: list[str] | tuple[str, ...]) -> np.ndarray:
        """Uniform planted topic-term rows aligned to ``terms``."""
        index = {t: i for i, t in enumerate(terms)}
        phi = np.zeros((len(self.topic_terms), len(terms)))
        for k, words in enumerate(self.topic_terms):
            for w in words:
                if w in index:
                    phi[k, index[w]] = 1.0
        sums = phi.sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        return phi / sums

    def to_dict(self) -> dict:
        d = asdict(self)
        d["config"] = asdict(self.config)
        return d


def _quarter_start(year: int, q: int) -> datetime:
    return datetime(year, 3 * q + 1, 1, tzinfo=timezone.utc)


def generate(cfg: SynthConfig) -> tuple[list[RawIssue], list[RawComment], SynthTruth]:
    """Draw a project where every document is written from a single planted topic.

    Developer ``devNN`` has home topic ``NN % topics``; the first developer of
    each topic is a keeper (``keeper_weight`` times more likely to comment or
    be assigned). With ``leaver`` set, ``dev00`` stops all activity from the
    middle quarter of the time span on.
    """
    if cfg.topics < 1 or cfg.developers < cfg.topics:
        raise ValueError("need topics >= 1 and developers >= topics")
    words, n_bank = _stable_words()
    needed = cfg.topics * cfg.terms_per_topic
    if needed > len(words):
        raise ValueError("not enough distinct words for the requested topics")
    rng = stream(cfg.seed, "synth")
    pool = list(rng.permutation(max(needed, n_bank))[:needed])
    topic_terms = [
        [words[i] for i in pool[k * cfg.terms_per_topic:(k + 1) * cfg.terms_per_topic]]
        for k in range(cfg.topics)
    ]
    devs = [f"dev{i:02d}" for i in range(cfg.developers)]
    home = {d: i % cfg.topics for i, d in enumerate(devs)}
    keepers = devs[: cfg.topics]
    truth = SynthTruth(cfg, topic_terms, home_topic=home, keepers=list(keepers))

    start = datetime(cfg.start_year, 1, 1, tzinfo=timezone.utc)
    end = datetime(cfg.start_year + cfg.years, 1, 1, tzinfo=timezone.utc)
    span = (end - start).total_seconds()
    departure = None
    if cfg.leaver:
        n_quarters = 4 * cfg.years
        mid = n_quarters // 2
        departure = _quarter_start(cfg.start_year + mid // 4, mid % 4)
        truth.leaver = devs[0]
        truth.departure = format_timestamp(departure)

    def pick_dev(topic: int, when: datetime) -> str:
        cands = [d for d in devs if home[d] == topic and not (d == truth.leaver and when >= departure)]
        if not cands:
            cands = [d for d in devs if not (d == truth.leaver and when >= departure)]
        w = np.array([cfg.keeper_weight if d in keepers else 1.0 for d in cands])
        return cands[int(rng.choice(len(cands), p=w / w.sum()))]

    def text(topic: int) -> list[str]:
        idx = rng.integers(0, cfg.terms_per_topic, size=cfg.doc_length)
        return [topic_terms[topic][i] for i in idx]

    n_issues = max(1, int(round(cfg.docs * cfg.issue_fraction)))
    n_comments = cfg.docs - n_issues
    issues = []
    issue_topic = []
    for i in range(n_issues):
        # planted topics get equal document shares
        topic = i % cfg.topics
        ts = start + timedelta(seconds=int(rng.uniform(0, span * 0.97)))
        words_ = text(topic)
        issues.append(RawIssue(
            project_key=cfg.project,
            issue_id=f"{cfg.project}-{i + 1}",
            title=" ".join(words_[:8]),
            description=" ".join(words_[8:]),
            created_at=ts,
            assignee=pick_dev(topic, ts),
            reporter=devs[int(rng.integers(len(devs)))],
        ))
        issue_topic.append(topic)
        truth.doc_topics[f"{ISSUE}:{cfg.project}-{i + 1}"] = topic
    issues.sort(key=lambda r: r.created_at)

    comments = []
    topic_of = {f"{cfg.project}-{i + 1}": t for i, t in enumerate(issue_topic)}
    by_topic = [[r for r in issues if topic_of[r.issue_id] == k] for k in range(cfg.topics)]
    for j in range(n_comments):
        topic = j % cfg.topics
        parent = by_topic[topic][int(rng.integers(len(by_topic[topic])))]
        delay = timedelta(seconds=int(rng.exponential(10 * 86400)))
        ts = min(parent.created_at + delay, end - timedelta(seconds=1))
        comments.append(RawComment(
            project_key=cfg.project,
            issue_id=parent.issue_id,
            comment_id=f"c{j + 1}",
            author=pick_dev(topic, ts),
            body=" ".join(text(topic)),
            created_at=ts,
        ))
        truth.doc_topics[f"{COMMENT}:c{j + 1}"] = topic
    return issues, comments, truth


def write_export(path: str | Path, issues: list[RawIssue], comments: list[RawComment]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in issues:
            fh.write(json.dumps({
                "kind": ISSUE, "project": r.project_key, "id": r.issue_id, "title": r.title,
                "description": r.description, "created_at": format_timestamp(r.created_at),
                "assignee": r.assignee, "reporter": r.reporter,
            }) + "\n")
        for c in comments:
            fh.write(json.dumps({
                "kind": COMMENT, "project": c.project_key, "issue_id": c.issue_id, "id": c.comment_id,
                "author": c.author, "body": c.body, "created_at": format_timestamp(c.created_at),
            }) + "\n")


def activity_traces(seed: int, n_with: int = 50, n_without: int = 50, n_quarters: int = 16):
    """Quarterly comment-count traces, half with a planted departure.

    Returns ``(traces, planted)`` where ``planted[i]`` is the departure index
    or ``None``. Traces without a departure never fall under 30% of their
    level, so the 10% rule cannot fire on them.
    """
    rng = stream(seed, "traces")
    traces, planted = [], []
    for i in range(n_with + n_without):
        level = int(rng.integers(5, 40))
        counts = [int(level + rng.integers(-level // 3, level // 3 + 1)) for _ in range(n_quarters)]
        if i < n_with:
            t = int(rng.integers(4, n_quarters - 3))
            for q in range(t, n_quarters):
                # a stray comment stays under 10% of any trailing mean >= 2/3 * 20
                counts[q] = 1 if level >= 20 and rng.random() < 0.3 else 0
            planted.append(t)
        else:
            planted.append(None)
        traces.append(counts)
    order = rng.permutation(len(traces))
    return [traces[i] for i in order], [planted[i] for i in order]
