"""Caption scoring: style metrics and n-gram overlap baselines."""

import math
from collections import Counter

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import UsageError
from .text import ORDERS, extract_ngrams


def only_style(index, tokens, style):
    """Mean per-order score of the caption's n-gram multiset, averaged over
    orders 1..4. Orders with no n-grams contribute 0."""
    style_ix = index.require_style(style)
    ids = index.token_ids(tokens)
    total = 0.0
    for n in ORDERS:
        keys = index.window_keys(ids, n)
        if len(keys):
            total += float(index.order_scores(n, keys, style_ix).sum()) / len(keys)
    return total / len(ORDERS)


def only_style_batch(index, token_lists, style):
    """Vectorized only_style over many captions sharing one target style."""
    style_ix = index.require_style(style)
    count = len(token_lists)
    out = np.zeros(count, dtype=np.float64)
    if count == 0:
        return out
    lens = np.array([len(t) for t in token_lists], dtype=np.int64)
    flat = index.token_ids([t for ts in token_lists for t in ts])
    owner = np.repeat(np.arange(count, dtype=np.int64), lens)
    for n in ORDERS:
        if len(flat) < n:
            continue
        windows = sliding_window_view(flat, n)
        valid = owner[: len(flat) - n + 1] == owner[n - 1 :]
        keys = np.frombuffer(np.ascontiguousarray(windows[valid]).tobytes(), dtype=f"S{4 * n}")
        wowner = owner[: len(flat) - n + 1][valid]
        scores = index.order_scores(n, keys, style_ix)
        sums = np.bincount(wowner, weights=scores, minlength=count)
        cnts = np.bincount(wowner, minlength=count)
        nz = cnts > 0
        out[nz] += sums[nz] / cnts[nz]
    return out / len(ORDERS)


def style_vector(index, tokens, style, order):
    """Distinct order-n n-grams of the caption mapped to their scores."""
    style_ix = index.require_style(style)
    grams = extract_ngrams(tokens, order)
    ids = index.token_ids(tokens)
    scores = index.order_scores(order, index.window_keys(ids, order), style_ix)
    vec = {}
    for gram, score in zip(grams, scores):
        vec.setdefault(gram, float(score))
    return vec


def cosine_similarity(u, v):
    """Cosine of two sparse term->weight maps; 0.0 when either norm is 0."""
    orders_u = {len(t) for t in u}
    orders_v = {len(t) for t in v}
    if len(orders_u) > 1 or len(orders_v) > 1 or (orders_u and orders_v and orders_u != orders_v):
        raise UsageError("vectors mix n-gram orders")
    nu = math.sqrt(sum(w * w for w in u.values()))
    nv = math.sqrt(sum(w * w for w in v.values()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    dot = sum(w * v[t] for t, w in u.items() if t in v)
    return dot / (nu * nv)


def style_cider(index, candidate, reference, style):
    """Mean over orders 1..4 of the cosine between the two captions'
    score-weighted n-gram vectors. Zero-norm orders contribute 0."""
    style_ix = index.require_style(style)
    cand_ids = index.token_ids(candidate)
    ref_ids = index.token_ids(reference)
    total = 0.0
    for n in ORDERS:
        u_keys = np.unique(index.window_keys(cand_ids, n))
        v_keys = np.unique(index.window_keys(ref_ids, n))
        if len(u_keys) == 0 or len(v_keys) == 0:
            continue
        u = index.order_scores(n, u_keys, style_ix)
        v = index.order_scores(n, v_keys, style_ix)
        nu = math.sqrt(float(u @ u))
        nv = math.sqrt(float(v @ v))
        if nu == 0.0 or nv == 0.0:
            continue
        _, ui, vi = np.intersect1d(u_keys, v_keys, assume_unique=True, return_indices=True)
        total += float(u[ui] @ v[vi]) / (nu * nv)
    return total / len(ORDERS)


class TfidfIndex:
    """Per-order reference document frequencies for plain cosine scoring."""

    def __init__(self, n_docs, df):
        self.n_docs = n_docs
        self.df = df

    def vector(self, tokens, order):
        """count * idf entries; idf(t) = ln(N / df(t)), unseen terms get ln(N)."""
        counts = Counter(extract_ngrams(tokens, order))
        dfn = self.df[order]
        n = self.n_docs
        return {t: c * math.log(n / max(dfn.get(t, 0), 1)) for t, c in counts.items()}


def build_tfidf(references):
    """Document frequencies per order over a list of reference token lists."""
    if not references:
        raise UsageError("empty reference list")
    df = {n: Counter() for n in ORDERS}
    for doc in references:
        for n in ORDERS:
            for t in set(extract_ngrams(doc, n)):
                df[n][t] += 1
    return TfidfIndex(len(references), {n: dict(c) for n, c in df.items()})


def cider(tfidf, candidate, reference):
    """Mean cosine of TF-IDF n-gram vectors over orders 1..4."""
    total = 0.0
    for n in ORDERS:
        total += cosine_similarity(tfidf.vector(candidate, n), tfidf.vector(reference, n))
    return total / len(ORDERS)


def _clipped_counts(candidate, references, order):
    counts = Counter(extract_ngrams(candidate, order))
    if not counts:
        return 0, 0
    best = Counter()
    for ref in references:
        for t, c in Counter(extract_ngrams(ref, order)).items():
            if c > best[t]:
                best[t] = c
    clipped = sum(min(c, best[t]) for t, c in counts.items())
    return clipped, sum(counts.values())


def _closest_ref_len(candidate, references):
    c = len(candidate)
    return min((abs(len(r) - c), len(r)) for r in references)[1]


def bleu(candidate, references, max_order=4):
    """Sentence-level clipped precision with geometric mean and brevity
    penalty; no smoothing, so a zero count at any order gives 0."""
    if not references:
        raise UsageError("bleu needs at least one reference")
    if max_order < 1:
        raise UsageError("max_order must be >= 1")
    if not candidate:
        return 0.0
    log_sum = 0.0
    for n in range(1, max_order + 1):
        clipped, total = _clipped_counts(candidate, references, n)
        if clipped == 0 or total == 0:
            return 0.0
        log_sum += math.log(clipped / total)
    c_len = len(candidate)
    r_len = _closest_ref_len(candidate, references)
    bp = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    return bp * math.exp(log_sum / max_order)


def corpus_bleu(pairs, max_order=4):
    """Corpus-level BLEU: clipped counts and lengths pooled across
    (candidate, references) pairs before the geometric mean."""
    if max_order < 1:
        raise UsageError("max_order must be >= 1")
    clipped = [0] * max_order
    totals = [0] * max_order
    c_len = 0
    r_len = 0
    seen = False
    for candidate, references in pairs:
        if not references:
            raise UsageError("bleu needs at least one reference")
        seen = True
        c_len += len(candidate)
        r_len += _closest_ref_len(candidate, references)
        for i, n in enumerate(range(1, max_order + 1)):
            cl, tot = _clipped_counts(candidate, references, n)
            clipped[i] += cl
            totals[i] += tot
    if not seen:
        raise UsageError("corpus_bleu needs at least one candidate")
    log_sum = 0.0
    for cl, tot in zip(clipped, totals):
        if cl == 0 or tot == 0:
            return 0.0
        log_sum += math.log(cl / tot)
    bp = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    return bp * math.exp(log_sum / max_order)
