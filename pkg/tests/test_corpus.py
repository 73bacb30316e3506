import json
import math
from collections import Counter
from datetime import datetime, timezone

import pytest
from hypothesis import given, strategies as st

from conceptrealm.corpus import (
    NotAnalyzable,
    Preprocessor,
    build_vocabulary,
    load_stopwords,
    parse_export,
    parse_timestamp,
    processed_from_record,
    processed_to_record,
    preprocess_project,
    to_bow,
    to_tfidf,
    tokenize,
)


def write_lines(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(r if isinstance(r, str) else json.dumps(r))
            fh.write("\n")


def issue(pid="P", iid="P-1", **kw):
    rec = {"kind": "issue", "project": pid, "id": iid, "title": "Crash on start", "description": "stack trace",
           "created_at": "2014-03-01T10:00:00Z", "assignee": "ann", "reporter": "bob"}
    rec.update(kw)
    return rec


def comment(cid="c1", iid="P-1", pid="P", **kw):
    rec = {"kind": "comment", "project": pid, "issue_id": iid, "id": cid, "author": "cat",
           "body": "fixed in trunk", "created_at": "2014-03-02T10:00:00Z"}
    rec.update(kw)
    return rec


def test_parse_export_collects_bad_lines(tmp_path):
    path = tmp_path / "x.jsonl"
    write_lines(path, [
        issue(),
        "{not json",
        issue(),  # duplicate id
        {"kind": "attachment"},
        comment(),
        comment(cid="c2", iid="P-404"),
        issue(iid="P-2", created_at="yesterday"),
        issue(pid="A", iid="A-1"),
    ])
    issues, comments, errors = parse_export(path)
    assert [i.issue_id for i in issues] == ["A-1", "P-1"]
    assert [c.comment_id for c in comments] == ["c1"]
    assert [e.line for e in errors] == [2, 3, 4, 6, 7]
    assert "duplicate" in errors[1].message
    assert "unknown issue" in errors[3].message


def test_missing_file_raises(tmp_path):
    with pytest.raises(OSError):
        parse_export(tmp_path / "absent.jsonl")


def test_timestamps_are_utc():
    assert parse_timestamp("2014-03-01T10:00:00") == datetime(2014, 3, 1, 10, tzinfo=timezone.utc)
    assert parse_timestamp("2014-03-01T12:00:00+02:00") == datetime(2014, 3, 1, 10, tzinfo=timezone.utc)


def test_tokenize_drops_code_urls_and_short_tokens():
    text = "See https://x.org/a?b=1 and ```int x = 1;``` then {code:java}foo(){code} Ünïcode a b ok"
    assert tokenize(text) == ["see", "and", "then", "ünïcode", "ok"]


def test_preprocessor_stems_and_removes_stopwords():
    pre = Preprocessor()
    assert pre("The servers were crashing repeatedly") == ["server", "crash", "repeatedli"]
    assert "the" in load_stopwords()


def test_lemma_table_applied_before_stemming():
    pre = Preprocessor(lemma_table={"went": "go"})
    assert pre("went") == ["go"]


def test_issue_text_is_title_plus_description():
    from conceptrealm.corpus import RawIssue

    raw = RawIssue("P", "P-1", "Parser", "tokenizer", datetime(2014, 1, 1, tzinfo=timezone.utc), "ann")
    (doc,) = preprocess_project([raw], [])
    assert doc.terms == ("parser", "token")


def test_vocabulary_filter_by_hand():
    docs = [["a", "b"], ["a", "c"], ["a", "b", "d"], ["e"]]
    v = build_vocabulary(docs, no_below=2, no_above=0.5)
    # df: a=3 (>2 dropped), b=2 kept, c=1, d=1, e=1 dropped
    assert v.terms == ("b",)
    assert v.document_frequency == (2,)
    assert v.n_discarded == 4
    with pytest.raises(NotAnalyzable):
        build_vocabulary(docs, no_below=5)


docs_strategy = st.lists(st.lists(st.sampled_from("abcdefgh"), max_size=6), min_size=1, max_size=25)


@given(docs_strategy, st.integers(0, 5), st.floats(0.05, 1.0))
def test_vocabulary_bounds_hold(docs, no_below, no_above):
    df = Counter(t for d in docs for t in set(d))
    expected = sorted(t for t, c in df.items() if no_below <= c <= no_above * len(docs))
    if not expected:
        with pytest.raises(NotAnalyzable):
            build_vocabulary(docs, no_below, no_above)
        return
    v = build_vocabulary(docs, no_below, no_above)
    assert list(v.terms) == expected
    assert v.n_discarded + len(v) == len(df)


def test_tfidf_by_hand():
    v = build_vocabulary([["x", "y"], ["x"], ["z"], ["w"]], no_below=1, no_above=1.0)
    counts = to_bow(["x", "x", "y", "unknown"], v)
    ix, iy = v.index("x"), v.index("y")
    assert counts == {ix: 2, iy: 1}
    w = to_tfidf(counts, v.document_frequency, v.n_documents)
    assert w[ix] == pytest.approx(2 * math.log(4 / 2))
    assert w[iy] == pytest.approx(math.log(4))


def test_processed_record_roundtrip():
    from conceptrealm.corpus import RawComment

    c = RawComment("P", "P-1", "c9", "dev", "heap dump attached", datetime(2015, 5, 5, 5, 5, 5, tzinfo=timezone.utc))
    (doc,) = preprocess_project([], [c])
    assert processed_from_record(json.loads(json.dumps(processed_to_record(doc)))) == doc
