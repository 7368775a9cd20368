"""Shared fixtures and corpus generators for the test suite."""

import json

import pytest

from stylemetric import build_index

# small closed vocabulary so random corpora collide across styles often
WORDS = ["sun", "moon", "dog", "cat", "red", "blue", "run", "walk", "tree", "sky"]

# 3-document, 2-style corpus used by several frozen-value tests
TINY = {
    "A": [["happy", "dog"], ["happy", "cat"]],
    "B": [["sad", "dog"]],
}

# larger hand corpus with shared and exclusive terms across 3 styles
HAND = {
    "happy": [
        ["a", "happy", "dog", "runs"],
        ["the", "happy", "cat", "sleeps"],
        ["a", "dog", "naps"],
    ],
    "angry": [
        ["an", "angry", "dog", "barks"],
        ["the", "dog", "growls"],
    ],
    "plain": [
        ["a", "dog", "runs"],
        ["the", "cat", "sits"],
    ],
}


def random_corpora(rng, max_docs=10, max_len=8, min_len=1):
    """2 to 5 styles, at most max_docs documents total, short documents."""
    n_styles = rng.randint(2, 5)
    styles = [f"s{i}" for i in range(n_styles)]
    total = rng.randint(n_styles, max_docs)
    corpora = {s: [] for s in styles}
    for i in range(total):
        # first pass guarantees every style gets a document
        style = styles[i] if i < n_styles else rng.choice(styles)
        length = rng.randint(min_len, max_len)
        corpora[style].append([rng.choice(WORDS) for _ in range(length)])
    return corpora


def random_caption(rng, max_len=8, oov_rate=0.1):
    length = rng.randint(1, max_len)
    return [
        "zzz" if rng.random() < oov_rate else rng.choice(WORDS) for _ in range(length)
    ]


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row) + "\n")
    return str(path)


def corpora_rows(corpora, **extra):
    """Dataset rows for a {style: token lists} corpus, styles interleaved."""
    rows = []
    for style, docs in corpora.items():
        for doc in docs:
            rows.append({"style": style, "caption": " ".join(doc), **extra})
    return rows


@pytest.fixture
def tiny_index():
    return build_index(TINY)


@pytest.fixture
def hand_index():
    return build_index(HAND)


@pytest.fixture
def tiny_dataset(tmp_path):
    return write_jsonl(tmp_path / "tiny.jsonl", corpora_rows(TINY))


@pytest.fixture
def hand_dataset(tmp_path):
    return write_jsonl(tmp_path / "hand.jsonl", corpora_rows(HAND))
