from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import strategies as st

from conceptrealm.realm import realm_from_weights

T0 = datetime(2010, 1, 1, tzinfo=timezone.utc)


def simplex(k, rng):
    return rng.dirichlet(np.ones(k))


@st.composite
def realms(draw, max_k=5, max_docs=30, max_devs=5):
    """Random realms with Dirichlet weights spread over three years."""
    k = draw(st.integers(1, max_k))
    n_issues = draw(st.integers(1, max_docs))
    n_comments = draw(st.integers(0, max_docs))
    n_devs = draw(st.integers(1, max_devs))
    rng = np.random.default_rng(draw(st.integers(0, 2**32 - 1)))
    days = lambda: T0 + timedelta(days=int(rng.integers(0, 3 * 365)))
    devs = [f"d{i}" for i in range(n_devs)]
    issues = [(f"I{i}", devs[int(rng.integers(n_devs))], days(), simplex(k, rng)) for i in range(n_issues)]
    comments = [(f"C{i}", devs[int(rng.integers(n_devs))], days(), simplex(k, rng)) for i in range(n_comments)]
    return realm_from_weights("P", k, issues, comments)


@pytest.fixture(scope="session")
def mini_config():
    from pathlib import Path

    return Path(__file__).resolve().parents[1] / "data" / "mini" / "config.toml"


def alignment_fixture(seed=0, assign_all_to=None):
    """Three topics, each owned by one developer: B (topic 0, most comments), A (topic 1), C (topic 2).

    Issues of the first half of 2015 train the model, issues of the second
    half are scored. ``assign_all_to`` overrides every test-issue assignee.
    """
    from conceptrealm.corpus import COMMENT, ISSUE, ProcessedDoc

    rng = np.random.default_rng(seed)
    words = [[f"t{k}w{i}" for i in range(10)] for k in range(3)]
    owner = {0: "B", 1: "A", 2: "C"}
    per_issue = {0: 3, 1: 2, 2: 2}
    docs = []

    def text(k):
        return tuple(words[k][i] for i in rng.integers(0, 10, size=30))

    n_comments = 0
    for half, month in ((0, 1), (1, 7)):
        for i in range(30):
            k = i % 3
            iid = f"P-{half * 30 + i + 1}"
            ts = datetime(2015, month + i // 6, 1 + i % 6 * 4, tzinfo=timezone.utc)
            assignee = owner[k] if half == 0 or assign_all_to is None else assign_all_to
            docs.append(ProcessedDoc(iid, ISSUE, iid, assignee, ts, text(k), "R"))
            if half == 1:
                continue
            for _ in range(per_issue[k]):
                n_comments += 1
                docs.append(ProcessedDoc(f"c{n_comments}", COMMENT, iid, owner[k], ts + timedelta(days=1), text(k)))
    return docs
