"""File-level operations shared by the HTTP service and the CLI.

Every function returns a JSON-ready report dict whose ``config`` key echoes
the parameters it ran with, so any report can be reproduced from itself.
"""

from .cng import build_index, save_index
from .corpus import dataset_stats, iter_jsonl, load_dataset
from .errors import DatasetError, UsageError
from .metrics import bleu, cider, corpus_bleu, only_style, style_cider, build_tfidf
from .protocols import (
    _thread_map,
    cng_inspect,
    eval_ground_truth,
    eval_model_outputs,
    rank_correlation,
    retrieval_rank,
)
from .text import tokenize

SCORE_METRICS = ("onlystyle", "stylecider", "cider", "bleu1", "bleu4")


def build_index_report(dataset, out, split="train"):
    registry, corpora = load_dataset(dataset, split=split)
    index = build_index({s: [r.tokens for r in corpora[s]] for s in registry}, registry)
    save_index(index, out)
    stats = dataset_stats(registry, corpora)
    return {
        "config": {"dataset": dataset, "out": out, "split": split},
        "stats": stats,
        "ngrams_per_order": {str(n): c for n, c in index.table_sizes().items()},
        "build_log": index.build_log,
    }


def _read_score_rows(path):
    rows = []
    for line_no, obj in iter_jsonl(path):
        caption = obj.get("caption")
        if not isinstance(caption, str) or not caption.strip():
            raise DatasetError(f"{path}:{line_no}: missing or empty 'caption'")
        rows.append({"caption": caption, "style": obj.get("style"), "line": line_no})
    if not rows:
        raise DatasetError(f"{path}: no rows")
    return rows


def score_report(index, metric, input_path, refs_path=None, style=None, threads=1, index_path=None):
    if metric not in SCORE_METRICS:
        raise UsageError(f"unknown metric: {metric!r}")
    rows = _read_score_rows(input_path)
    refs = None
    if metric in ("stylecider", "cider", "bleu1", "bleu4"):
        if refs_path is None:
            raise UsageError(f"metric {metric!r} requires --refs")
        refs = _read_score_rows(refs_path)
        if len(refs) != len(rows):
            raise UsageError(
                f"refs file has {len(refs)} rows but input has {len(rows)} (paired by line)"
            )
    styles = None
    if metric in ("onlystyle", "stylecider"):
        styles = []
        for r in rows:
            chosen = r["style"] if r["style"] is not None else style
            if not chosen:
                raise UsageError(
                    f"metric {metric!r} needs a style per row or a global --style "
                    f"(row at line {r['line']} has none)"
                )
            styles.append(chosen)

    tokens = [tokenize(r["caption"]) for r in rows]
    ref_tokens = [tokenize(r["caption"]) for r in refs] if refs else None

    def mapped(fn, items):
        size = max(1, -(-len(items) // (max(threads, 1) * 4)))
        chunks = [items[i : i + size] for i in range(0, len(items), size)]
        parts = _thread_map(lambda ch: [fn(*args) for args in ch], chunks, threads)
        return [v for part in parts for v in part]

    if metric == "onlystyle":
        scores = mapped(lambda t, s: only_style(index, t, s), list(zip(tokens, styles)))
        aggregate = sum(scores) / len(scores)
    elif metric == "stylecider":
        scores = mapped(
            lambda t, rt, s: style_cider(index, t, rt, s),
            list(zip(tokens, ref_tokens, styles)),
        )
        aggregate = sum(scores) / len(scores)
    elif metric == "cider":
        tfidf = build_tfidf(ref_tokens)
        scores = mapped(lambda t, rt: cider(tfidf, t, rt), list(zip(tokens, ref_tokens)))
        aggregate = sum(scores) / len(scores)
    else:
        order = 1 if metric == "bleu1" else 4
        scores = [bleu(t, [rt], max_order=order) for t, rt in zip(tokens, ref_tokens)]
        aggregate = corpus_bleu([(t, [rt]) for t, rt in zip(tokens, ref_tokens)], max_order=order)

    out_rows = []
    for i, (r, sc) in enumerate(zip(rows, scores)):
        entry = {"row": i + 1, "caption": r["caption"], "score": sc}
        if styles is not None:
            entry["style"] = styles[i]
        out_rows.append(entry)
    return {
        "config": {
            "index": index_path,
            "metric": metric,
            "input": input_path,
            "refs": refs_path,
            "style": style,
            "threads": threads,
        },
        "count": len(rows),
        "rows": out_rows,
        "aggregate": aggregate,
        "aggregation": "pooled" if metric in ("bleu1", "bleu4") else "mean",
    }


def eval_gt_report(index, dataset, split=None, mode="both", comparison="all_styles", k=20, seed=0, threads=1, index_path=None):
    registry, corpora = load_dataset(dataset, split=split)
    records = [r for s in registry for r in corpora[s]]
    report = eval_ground_truth(
        index, records, mode=mode, comparison=comparison, k=k, seed=seed, threads=threads
    )
    report["config"] = {
        "index": index_path,
        "dataset": dataset,
        "split": split,
        "mode": mode,
        "comparison": comparison,
        "k": k,
        "seed": seed,
        "threads": threads,
    }
    return report


def _read_model_rows(path, need_model):
    rows = []
    for line_no, obj in iter_jsonl(path):
        row = {}
        needed = ("model", "style", "caption") if need_model else ("image_id", "style", "caption")
        for key in needed:
            value = obj.get(key)
            if value is None or (isinstance(value, str) and not value.strip()):
                raise DatasetError(f"{path}:{line_no}: missing or empty {key!r}")
            row[key] = str(value) if key == "image_id" else value
        if need_model:
            image_id = obj.get("image_id")
            row["image_id"] = None if image_id is None else str(image_id)
        rows.append(row)
    return rows


def eval_models_report(index, generations, references, threads=1, index_path=None):
    gen_rows = _read_model_rows(generations, need_model=True)
    if not gen_rows:
        raise DatasetError(f"{generations}: no rows")
    ref_rows = _read_model_rows(references, need_model=False)
    if not ref_rows:
        raise DatasetError(f"{references}: no rows")
    report = eval_model_outputs(index, gen_rows, ref_rows, threads=threads)
    report["config"] = {
        "index": index_path,
        "generations": generations,
        "references": references,
        "threads": threads,
    }
    return report


def rank_report(index, caption, target=None, top=None, index_path=None):
    result = retrieval_rank(index, tokenize(caption), target=target)
    ranking = result["ranking"]
    if top is not None:
        if top < 1:
            raise UsageError("top must be >= 1")
        ranking = ranking[:top]
    report = {
        "config": {"index": index_path, "caption": caption, "target": target, "top": top},
        "styles": result["styles"],
        "ranking": ranking,
    }
    if target is not None:
        report["target_rank"] = result["target_rank"]
    return report


def cng_report(index, terms, styles=None, index_path=None):
    result = cng_inspect(index, terms, styles=styles)
    return {
        "config": {"index": index_path, "terms": terms, "styles": styles},
        "terms": result["terms"],
        "styles": result["styles"],
        "scores": result["scores"],
    }


def corr_report(scores, ranks):
    result = rank_correlation(scores, ranks)
    return {
        "config": {"scores": list(scores), "ranks": list(ranks)},
        "n": result["n"],
        "pearson": result["pearson"],
        "spearman": result["spearman"],
    }
