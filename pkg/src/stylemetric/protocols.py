"""Evaluation protocols: ground-truth satisfaction, model comparison,
style retrieval, score inspection, and rank correlations."""

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .cng import cng_score
from .errors import UsageError
from .metrics import build_tfidf, cider, corpus_bleu, only_style, style_cider
from .text import ORDERS, tokenize


def _thread_map(fn, items, threads):
    """Order-preserving map, optionally fanned out over a thread pool."""
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _chunks(seq, n_chunks):
    size = max(1, -(-len(seq) // n_chunks))
    return [seq[i : i + size] for i in range(0, len(seq), size)]


def only_style_all(index, tokens):
    """OnlyStyle of one caption under every style at once.

    Returns an array over the registry. Derived per order from the stored
    per-style ECDF entries of the caption's matched n-grams:

        mean_t score_q(t) = (1/m) * sum_t e_q(t)/occ(t)
                          - (1/m) * sum_t sum_s e_s(t) / (S*occ(t))

    where m counts all windows (misses contribute zero).
    """
    s_count = index.num_styles
    acc = np.zeros(s_count, dtype=np.float64)
    ids = index.token_ids(tokens)
    for n in ORDERS:
        keys = index.window_keys(ids, n)
        if len(keys) == 0:
            continue
        t = index._tables[n]
        rows, hit = index.lookup_rows(n, keys)
        if len(rows) == 0:
            continue
        m_all = len(keys)
        occ = (t.indptr[rows + 1] - t.indptr[rows]).astype(np.float64)
        shift = float((t.ecdf_sum[rows] / (s_count * occ)).sum()) / m_all
        starts = t.indptr[rows]
        cnts = t.indptr[rows + 1] - starts
        total = int(cnts.sum())
        offsets = np.cumsum(cnts) - cnts
        eix = np.repeat(starts - offsets, cnts) + np.arange(total, dtype=np.int64)
        cols = t.entry_pos[eix] % s_count
        weights = t.ecdf_vals[eix] / np.repeat(occ, cnts)
        acc += np.bincount(cols, weights=weights, minlength=s_count) / m_all - shift
    return acc / len(ORDERS)


def retrieval_rank(index, tokens, target=None):
    """Rank all styles by OnlyStyle for one caption, ties in registry order."""
    scores = only_style_all(index, tokens)
    order = np.argsort(-scores, kind="stable")
    ranking = [(index.styles[i], float(scores[i])) for i in order]
    result = {"ranking": ranking, "styles": index.num_styles}
    if target is not None:
        target_ix = index.require_style(target)
        result["target"] = target
        result["target_rank"] = int(np.flatnonzero(order == target_ix)[0]) + 1
    return result


def cng_inspect(index, terms, styles=None):
    """Order-1 score matrix for raw single-token terms across styles."""
    if styles is None:
        chosen = list(index.styles)
    else:
        chosen = list(styles)
        for s in chosen:
            index.require_style(s)
    if not terms:
        raise UsageError("no terms given")
    tokens = []
    for raw in terms:
        toks = tokenize(raw)
        if len(toks) != 1:
            raise UsageError(f"term {raw!r} does not tokenize to exactly one token")
        tokens.append(toks[0])
    matrix = [[cng_score(index, (tok,), s) for s in chosen] for tok in tokens]
    return {"terms": tokens, "styles": chosen, "scores": matrix}


def _average_ranks(values):
    n = len(values)
    order = sorted(range(n), key=lambda i: values[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j < n and values[order[j]] == values[order[i]]:
            j += 1
        avg = (i + 1 + j) / 2.0
        for k in range(i, j):
            ranks[order[k]] = avg
        i = j
    return ranks


def _pearson(xs, ys):
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def rank_correlation(scores, ranks):
    """Pearson on raw values and Spearman on average ranks.

    Zero variance in either input leaves the coefficient undefined; that is
    reported as None, never coerced to 0.
    """
    xs = [float(v) for v in scores]
    ys = [float(v) for v in ranks]
    if len(xs) != len(ys):
        raise UsageError(f"length mismatch: {len(xs)} scores vs {len(ys)} ranks")
    if len(xs) < 2:
        raise UsageError("need at least 2 points")
    return {
        "n": len(xs),
        "pearson": _pearson(xs, ys),
        "spearman": _pearson(_average_ranks(xs), _average_ranks(ys)),
    }


def _sampled_contrasts(index, truth_ix, ordinal, k, seed):
    """Deterministic per-caption contrast styles, independent of threading."""
    others = np.array([i for i in range(index.num_styles) if i != truth_ix], dtype=np.int64)
    take = min(k, len(others))
    rng = np.random.default_rng([seed, ordinal])
    return np.sort(rng.choice(others, size=take, replace=False))


def _rate_block(flags, styles_of, registry):
    evaluated = int(sum(1 for f in flags if f is not None))
    satisfied = int(sum(1 for f in flags if f))
    per_style = {}
    for s in registry:
        sf = [f for f, st in zip(flags, styles_of) if st == s and f is not None]
        if sf:
            per_style[s] = {
                "evaluated": len(sf),
                "satisfied": int(sum(sf)),
                "rate": sum(sf) / len(sf),
            }
    block = {
        "evaluated": evaluated,
        "satisfied": satisfied,
        "rate": (satisfied / evaluated) if evaluated else None,
        "skipped": int(sum(1 for f in flags if f is None)),
        "per_style": per_style,
    }
    return block


def eval_ground_truth(index, records, mode="both", comparison="all_styles", k=20, seed=0, threads=1):
    """Satisfaction rates of ground-truth captions against contrast styles.

    A caption with truth style p satisfies the OnlyStyle test iff its score
    under p strictly exceeds its score under every compared style; ties
    fail. The reference-based test compares the mean pairwise score against
    same-style references (the caption itself excluded) with the mean
    against each compared style's reference pool; captions without another
    same-style reference are skipped. comparison="sampled_k" draws k
    contrast styles per caption from a seeded generator keyed by the
    caption's position, so results do not depend on thread count.
    """
    if mode not in ("onlystyle", "stylecider", "both"):
        raise UsageError(f"unknown mode: {mode!r}")
    if comparison not in ("all_styles", "sampled_k"):
        raise UsageError(f"unknown comparison: {comparison!r}")
    if comparison == "sampled_k" and k < 1:
        raise UsageError("k must be >= 1")
    if not records:
        raise UsageError("no captions to evaluate")
    for r in records:
        index.require_style(r.style)

    truth_ix = np.array([index.style_index[r.style] for r in records], dtype=np.int64)
    styles_of = [r.style for r in records]
    contrasts = None
    if comparison == "sampled_k":
        contrasts = [
            _sampled_contrasts(index, truth_ix[i], i, k, seed) for i in range(len(records))
        ]

    report = {
        "protocol": "ground-truth-satisfaction",
        "mode": mode,
        "comparison": comparison,
        "k": k if comparison == "sampled_k" else None,
        "seed": seed,
        "styles_in_index": index.num_styles,
        "captions": len(records),
    }
    if mode in ("onlystyle", "both"):
        flags = _eval_gt_onlystyle(index, records, truth_ix, contrasts, threads)
        report["onlystyle"] = _rate_block(flags, styles_of, index.styles)
    if mode in ("stylecider", "both"):
        flags = _eval_gt_stylecider(index, records, truth_ix, contrasts, threads)
        report["stylecider"] = _rate_block(flags, styles_of, index.styles)
    return report


def _eval_gt_onlystyle(index, records, truth_ix, contrasts, threads):
    def run(chunk):
        out = []
        for i in chunk:
            vec = only_style_all(index, records[i].tokens)
            p = truth_ix[i]
            if contrasts is None:
                rest = vec.copy()
                rest[p] = -np.inf
                out.append(bool(vec[p] > rest.max()))
            else:
                out.append(bool(vec[p] > vec[contrasts[i]].max()))
        return out

    chunks = _chunks(list(range(len(records))), max(threads, 1) * 4)
    results = _thread_map(run, chunks, threads)
    return [f for part in results for f in part]


def _eval_gt_stylecider(index, records, truth_ix, contrasts, threads):
    """Pooled-reference comparison via normalized-vector sums.

    mean_r cos(u, v_r) over a pool equals unit(u) . sum_r unit(v_r) / |pool|,
    so each (truth style, contrast style, order) needs one pooled vector
    instead of a quadratic pairwise pass. Self-exclusion subtracts the
    candidate's own unit vector from its style pool.
    """
    n_rec = len(records)
    s_count = index.num_styles
    pool_count = np.bincount(truth_ix, minlength=s_count).astype(np.float64)

    # distinct window keys per record per order, flattened over records
    per_order = {}
    for n in ORDERS:
        key_arrays = [np.unique(index.window_keys(index.token_ids(r.tokens), n)) for r in records]
        lens = np.array([len(a) for a in key_arrays], dtype=np.int64)
        flat = (
            np.concatenate(key_arrays)
            if any(lens)
            else np.zeros(0, dtype=f"S{4 * n}")
        )
        union = np.unique(flat) if len(flat) else flat
        flat_ix = np.searchsorted(union, flat) if len(flat) else np.zeros(0, dtype=np.int64)
        rec_of = np.repeat(np.arange(n_rec, dtype=np.int64), lens)
        bounds = np.zeros(n_rec + 1, dtype=np.int64)
        np.cumsum(lens, out=bounds[1:])
        per_order[n] = (union, flat_ix, rec_of, bounds)

    truth_styles = sorted(set(truth_ix.tolist()))

    def run(p):
        """Mean pooled similarity rows for candidates whose truth style is p."""
        cand = np.flatnonzero(truth_ix == p)
        means = np.zeros((len(cand), s_count), dtype=np.float64)
        for n in ORDERS:
            union, flat_ix, rec_of, bounds = per_order[n]
            if len(union) == 0:
                continue
            weights = index.order_scores(n, union, p)
            entry_vals = weights[flat_ix]
            norms = np.sqrt(np.bincount(rec_of, weights=entry_vals * entry_vals, minlength=n_rec))
            scale = np.divide(1.0, norms, out=np.zeros_like(norms), where=norms > 0)
            unit_vals = entry_vals * scale[rec_of]
            c_ent = np.concatenate([np.arange(bounds[i], bounds[i + 1]) for i in cand])
            c_of = np.repeat(np.arange(len(cand)), [bounds[i + 1] - bounds[i] for i in cand])
            for q in range(s_count):
                if pool_count[q] == 0:
                    continue
                member = truth_ix[rec_of] == q
                pooled = np.bincount(flat_ix[member], weights=unit_vals[member], minlength=len(union))
                dots = np.bincount(
                    c_of, weights=unit_vals[c_ent] * pooled[flat_ix[c_ent]], minlength=len(cand)
                )
                if q == p:
                    dots = dots - np.bincount(
                        c_of, weights=unit_vals[c_ent] * unit_vals[c_ent], minlength=len(cand)
                    )
                    denom = pool_count[q] - 1.0
                else:
                    denom = pool_count[q]
                if denom > 0:
                    means[:, q] += dots / denom
        means /= len(ORDERS)
        # only styles that actually have references can serve as contrasts
        has_pool = pool_count > 0
        out = {}
        for row, i in enumerate(cand):
            if pool_count[p] <= 1:
                out[int(i)] = None
                continue
            if contrasts is None:
                qs = np.flatnonzero(has_pool)
                qs = qs[qs != p]
            else:
                qs = contrasts[i][has_pool[contrasts[i]]]
            if len(qs) == 0:
                out[int(i)] = True
                continue
            out[int(i)] = bool(means[row, p] > means[row, qs].max())
        return out

    results = _thread_map(run, truth_styles, threads)
    flags = [None] * n_rec
    for part in results:
        for i, f in part.items():
            flags[i] = f
    return flags


def eval_model_outputs(index, generations, references, threads=1):
    """Per-model metric table over generation rows against shared references.

    generations: dicts with model, style, caption, and optional image_id.
    references: dicts with image_id, style, caption. A generation's
    reference pool is every reference row sharing its (image_id, style);
    rows with no pool are excluded from reference-based metrics but still
    counted and scored on the reference-free metric.
    """
    if not generations:
        raise UsageError("no generation rows")
    if not references:
        raise UsageError("no reference rows")

    ref_pool = {}
    ref_docs = []
    for row in references:
        tokens = tokenize(row["caption"])
        ref_docs.append(tokens)
        ref_pool.setdefault((row["image_id"], row["style"]), []).append(tokens)
    tfidf = build_tfidf(ref_docs)

    models = []
    by_model = {}
    for row in generations:
        name = row["model"]
        if name not in by_model:
            models.append(name)
            by_model[name] = []
        by_model[name].append(row)
    for row in generations:
        index.require_style(row["style"])

    def score_row(row):
        tokens = tokenize(row["caption"])
        pool = ref_pool.get((row.get("image_id"), row["style"]))
        onlystyle_val = only_style(index, tokens, row["style"])
        if not pool:
            return (onlystyle_val, None, None, None)
        cider_val = sum(cider(tfidf, tokens, ref) for ref in pool) / len(pool)
        sc_val = sum(style_cider(index, tokens, ref, row["style"]) for ref in pool) / len(pool)
        return (onlystyle_val, cider_val, sc_val, (tokens, pool))

    table = []
    for name in models:
        rows = by_model[name]
        chunks = _chunks(rows, max(threads, 1) * 4)
        parts = _thread_map(lambda ch: [score_row(r) for r in ch], chunks, threads)
        scored = [s for part in parts for s in part]
        matched = [s for s in scored if s[3] is not None]
        entry = {
            "model": name,
            "rows": len(rows),
            "matched": len(matched),
            "unmatched": len(rows) - len(matched),
            "onlystyle": sum(s[0] for s in scored) / len(scored),
        }
        if matched:
            entry["cider"] = sum(s[1] for s in matched) / len(matched)
            entry["stylecider"] = sum(s[2] for s in matched) / len(matched)
            pairs = [s[3] for s in matched]
            entry["bleu1"] = corpus_bleu(pairs, max_order=1)
            entry["bleu4"] = corpus_bleu(pairs, max_order=4)
        else:
            entry["cider"] = None
            entry["stylecider"] = None
            entry["bleu1"] = None
            entry["bleu4"] = None
        table.append(entry)
    return {
        "protocol": "model-comparison",
        "references": len(references),
        "models": table,
    }
