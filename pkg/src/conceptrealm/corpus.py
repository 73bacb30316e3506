"""Issue-tracker import, text preprocessing and vectorization."""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .porter import porter_stem

ISSUE = "issue"
COMMENT = "comment"


class NotAnalyzable(Exception):
    """Raised when a project does not yield a usable vocabulary or split."""


@dataclass(frozen=True)
class RawIssue:
    project_key: str
    issue_id: str
    title: str
    description: str
    created_at: datetime
    assignee: str | None = None
    reporter: str | None = None


@dataclass(frozen=True)
class RawComment:
    project_key: str
    issue_id: str
    comment_id: str
    author: str
    body: str
    created_at: datetime


@dataclass(frozen=True)
class ParseError:
    line: int
    message: str


def parse_timestamp(value) -> datetime:
    """Parse ISO-8601; naive values are taken as UTC."""
    if not isinstance(value, str) or not value:
        raise ValueError(f"bad timestamp {value!r}")
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _req_str(rec: dict, key: str, allow_empty: bool = False) -> str:
    value = rec.get(key)
    if not isinstance(value, str) or (not allow_empty and not value):
        raise ValueError(f"field {key!r} must be a non-empty string")
    return value


def _opt_str(rec: dict, key: str) -> str | None:
    value = rec.get(key)
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise ValueError(f"field {key!r} must be a string or null")
    return value


def parse_export(path: str | Path) -> tuple[list[RawIssue], list[RawComment], list[ParseError]]:
    """Read a JSON Lines export.

    Returns issues and comments sorted by project (input order kept within a
    project) plus every rejected line. An unreadable file raises ``OSError``.
    """
    issues: list[RawIssue] = []
    comments: list[RawComment] = []
    errors: list[ParseError] = []
    comment_lines: list[int] = []
    seen_issues: set[tuple[str, str]] = set()
    seen_comments: set[tuple[str, str]] = set()

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                if not isinstance(rec, dict):
                    raise ValueError("record is not a JSON object")
                kind = rec.get("kind")
                if kind == ISSUE:
                    issue = RawIssue(
                        project_key=_req_str(rec, "project"),
                        issue_id=_req_str(rec, "id"),
                        title=_req_str(rec, "title", allow_empty=True),
                        description=rec.get("description") or "",
                        created_at=parse_timestamp(rec.get("created_at")),
                        assignee=_opt_str(rec, "assignee"),
                        reporter=_opt_str(rec, "reporter"),
                    )
                    if not isinstance(issue.description, str):
                        raise ValueError("field 'description' must be a string")
                    key = (issue.project_key, issue.issue_id)
                    if key in seen_issues:
                        raise ValueError(f"duplicate issue id {issue.issue_id!r}")
                    seen_issues.add(key)
                    issues.append(issue)
                elif kind == COMMENT:
                    comment = RawComment(
                        project_key=_req_str(rec, "project"),
                        issue_id=_req_str(rec, "issue_id"),
                        comment_id=_req_str(rec, "id"),
                        author=_req_str(rec, "author"),
                        body=_req_str(rec, "body", allow_empty=True),
                        created_at=parse_timestamp(rec.get("created_at")),
                    )
                    key = (comment.project_key, comment.comment_id)
                    if key in seen_comments:
                        raise ValueError(f"duplicate comment id {comment.comment_id!r}")
                    seen_comments.add(key)
                    comments.append(comment)
                    comment_lines.append(lineno)
                else:
                    raise ValueError(f"unknown record kind {kind!r}")
            except ValueError as exc:  # JSONDecodeError is a ValueError
                errors.append(ParseError(lineno, str(exc)))

    kept = []
    for comment, lineno in zip(comments, comment_lines):
        if (comment.project_key, comment.issue_id) in seen_issues:
            kept.append(comment)
        else:
            errors.append(ParseError(lineno, f"comment references unknown issue {comment.issue_id!r}"))
    errors.sort(key=lambda e: e.line)

    issues.sort(key=lambda r: r.project_key)
    kept.sort(key=lambda r: r.project_key)
    return issues, kept, errors


# --- text preprocessing -------------------------------------------------------

_CODE_FENCE = re.compile(r"```.*?(```|\Z)|\{code(?::[^}]*)?\}.*?(\{code\}|\Z)|\{noformat\}.*?(\{noformat\}|\Z)", re.S)
_URL = re.compile(r"\b(?:[a-zA-Z][a-zA-Z0-9+.-]*://|www\.)\S+")
# ASCII letters plus Latin-1 letters (excluding the multiplication/division signs)
_WORD = re.compile(r"[A-Za-zÀ-ÖØ-öø-ÿ]+")


def tokenize(text: str) -> list[str]:
    if not text:
        return []
    text = _CODE_FENCE.sub(" ", text)
    text = _URL.sub(" ", text)
    return [tok for tok in (m.group(0).lower() for m in _WORD.finditer(text)) if len(tok) >= 2]


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load a stopword file; ``None`` loads the bundled English list."""
    if path is None:
        text = resources.files("conceptrealm").joinpath("data/stopwords_en.txt").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    words = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            words.add(line)
    return frozenset(words)


def remove_stopwords(tokens: Iterable[str], stopword_set) -> list[str]:
    return [t for t in tokens if t not in stopword_set]


def load_lemma_table(path: str | Path) -> dict[str, str]:
    table = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        surface, _, lemma = line.partition("\t")
        if lemma.strip():
            table[surface.strip().lower()] = lemma.strip().lower()
    return table


def lemmatize(token: str, lemma_table: dict[str, str] | None = None) -> str:
    if not lemma_table:
        return token
    return lemma_table.get(token, token)


@dataclass
class Preprocessor:
    stopwords: frozenset[str] = field(default_factory=load_stopwords)
    lemma_table: dict[str, str] = field(default_factory=dict)
    stem: bool = True

    def __call__(self, text: str) -> list[str]:
        out = []
        for tok in remove_stopwords(tokenize(text), self.stopwords):
            tok = lemmatize(tok, self.lemma_table)
            if self.stem:
                tok = porter_stem(tok)
            if tok:
                out.append(tok)
        return out


# --- vocabulary and vectors ---------------------------------------------------


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    document_frequency: tuple[int, ...]
    n_documents: int
    no_below: int = 15
    no_above: float = 0.5
    n_discarded: int = 0

    def __post_init__(self):
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self._index

    def index(self, term: str) -> int | None:
        return self._index.get(term)

    def to_dict(self) -> dict:
        return {
            "terms": list(self.terms),
            "document_frequency": list(self.document_frequency),
            "n_documents": self.n_documents,
            "no_below": self.no_below,
            "no_above": self.no_above,
            "n_discarded": self.n_discarded,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Vocabulary":
        return cls(
            terms=tuple(d["terms"]),
            document_frequency=tuple(d["document_frequency"]),
            n_documents=d["n_documents"],
            no_below=d["no_below"],
            no_above=d["no_above"],
            n_discarded=d.get("n_discarded", 0),
        )


def build_vocabulary(documents: Iterable[Sequence[str]], no_below: int = 15, no_above: float = 0.5) -> Vocabulary:
    """Keep terms with ``no_below <= df <= no_above * N``; terms are sorted."""
    if no_below < 0 or not 0 < no_above <= 1:
        raise ValueError("need no_below >= 0 and 0 < no_above <= 1")
    df: Counter[str] = Counter()
    n = 0
    for doc in documents:
        n += 1
        df.update(set(doc))
    kept = sorted(t for t, c in df.items() if no_below <= c <= no_above * n)
    if not kept:
        raise NotAnalyzable(f"empty vocabulary after filtering ({len(df)} candidate terms, {n} documents)")
    return Vocabulary(
        terms=tuple(kept),
        document_frequency=tuple(df[t] for t in kept),
        n_documents=n,
        no_below=no_below,
        no_above=no_above,
        n_discarded=len(df) - len(kept),
    )


def to_bow(tokens: Iterable[str], vocabulary: Vocabulary) -> dict[int, int]:
    counts: Counter[int] = Counter()
    for tok in tokens:
        idx = vocabulary.index(tok)
        if idx is not None:
            counts[idx] += 1
    return dict(sorted(counts.items()))


def to_tfidf(counts: dict[int, int], document_frequency: Sequence[int], n_documents: int) -> dict[int, float]:
    return {
        idx: tf * math.log(n_documents / document_frequency[idx])
        for idx, tf in sorted(counts.items())
    }


# --- per-project corpus -------------------------------------------------------


@dataclass(frozen=True)
class ProcessedDoc:
    """A preprocessed issue or comment, before vocabulary filtering."""

    doc_id: str
    kind: str
    issue_id: str
    developer: str | None  # assignee for issues, author for comments
    timestamp: datetime
    terms: tuple[str, ...]
    reporter: str | None = None

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.kind, self.doc_id)


@dataclass(frozen=True)
class Document:
    doc_id: str
    kind: str
    issue_id: str
    author_or_assignee: str | None
    timestamp: datetime
    tokens: tuple[int, ...]
    counts: dict[int, int]

    @property
    def sort_key(self) -> tuple[str, str]:
        return (self.kind, self.doc_id)

    def __len__(self) -> int:
        return len(self.tokens)


def vectorize(doc: ProcessedDoc, vocabulary: Vocabulary) -> Document:
    tokens = []
    for term in doc.terms:
        idx = vocabulary.index(term)
        if idx is not None:
            tokens.append(idx)
    counts = Counter(tokens)
    return Document(
        doc_id=doc.doc_id,
        kind=doc.kind,
        issue_id=doc.issue_id,
        author_or_assignee=doc.developer,
        timestamp=doc.timestamp,
        tokens=tuple(tokens),
        counts=dict(sorted(counts.items())),
    )


def preprocess_project(
    issues: Sequence[RawIssue],
    comments: Sequence[RawComment],
    preprocessor: Preprocessor | None = None,
) -> list[ProcessedDoc]:
    """Issues use title + description as one text; output is in canonical order."""
    pre = preprocessor or Preprocessor()
    docs = []
    for issue in issues:
        docs.append(ProcessedDoc(
            doc_id=issue.issue_id,
            kind=ISSUE,
            issue_id=issue.issue_id,
            developer=issue.assignee,
            timestamp=issue.created_at,
            terms=tuple(pre(f"{issue.title}\n{issue.description}")),
            reporter=issue.reporter,
        ))
    for comment in comments:
        docs.append(ProcessedDoc(
            doc_id=comment.comment_id,
            kind=COMMENT,
            issue_id=comment.issue_id,
            developer=comment.author,
            timestamp=comment.created_at,
            terms=tuple(pre(comment.body)),
        ))
    docs.sort(key=lambda d: d.sort_key)
    return docs


@dataclass
class Corpus:
    project_key: str
    processed: list[ProcessedDoc]
    vocabulary: Vocabulary
    documents: list[Document]

    @property
    def issues(self) -> list[Document]:
        return [d for d in self.documents if d.kind == ISSUE]

    @property
    def comments(self) -> list[Document]:
        return [d for d in self.documents if d.kind == COMMENT]


def build_corpus(
    project_key: str,
    processed: Sequence[ProcessedDoc],
    no_below: int = 15,
    no_above: float = 0.5,
    issues_only_filter: bool = False,
) -> Corpus:
    processed = sorted(processed, key=lambda d: d.sort_key)
    basis = [d.terms for d in processed if d.kind == ISSUE or not issues_only_filter]
    vocab = build_vocabulary(basis, no_below, no_above)
    return Corpus(project_key, list(processed), vocab, [vectorize(d, vocab) for d in processed])


def group_by_project(issues: Sequence[RawIssue], comments: Sequence[RawComment]) -> dict[str, tuple[list[RawIssue], list[RawComment]]]:
    out: dict[str, tuple[list[RawIssue], list[RawComment]]] = {}
    for issue in issues:
        out.setdefault(issue.project_key, ([], []))[0].append(issue)
    for comment in comments:
        out.setdefault(comment.project_key, ([], []))[1].append(comment)
    return dict(sorted(out.items()))


# --- processed-document persistence -------------------------------------------


def processed_to_record(doc: ProcessedDoc) -> dict:
    return {
        "doc": doc.doc_id,
        "kind": doc.kind,
        "issue": doc.issue_id,
        "dev": doc.developer,
        "reporter": doc.reporter,
        "ts": format_timestamp(doc.timestamp),
        "terms": list(doc.terms),
    }


def processed_from_record(rec: dict) -> ProcessedDoc:
    return ProcessedDoc(
        doc_id=rec["doc"],
        kind=rec["kind"],
        issue_id=rec["issue"],
        developer=rec.get("dev"),
        timestamp=parse_timestamp(rec["ts"]),
        terms=tuple(rec["terms"]),
        reporter=rec.get("reporter"),
    )
