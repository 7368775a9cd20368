"""Report-producing operations shared by the service and the CLI."""

import pytest

import oracle
from stylemetric import DatasetError, UsageError, load_index
from stylemetric import ops
from conftest import HAND, TINY, corpora_rows, write_jsonl

APPROX = 1e-12


@pytest.fixture
def hand_index_file(tmp_path, hand_dataset):
    out = str(tmp_path / "hand.smidx")
    ops.build_index_report(hand_dataset, out, split=None)
    return out


def test_build_index_report(tmp_path, hand_dataset):
    out = str(tmp_path / "i.smidx")
    report = ops.build_index_report(hand_dataset, out, split=None)
    assert report["config"] == {"dataset": hand_dataset, "out": out, "split": None}
    assert report["stats"]["styles"] == 3
    assert report["stats"]["captions"] == 7
    assert int(report["ngrams_per_order"]["1"]) > 0
    assert any("documents" in line for line in report["build_log"])
    index = load_index(out)
    assert index.styles == ["happy", "angry", "plain"]


def test_build_index_report_honors_split(tmp_path):
    rows = corpora_rows(TINY, split="train") + [
        {"style": "A", "caption": "held out", "split": "test"}
    ]
    dataset = write_jsonl(tmp_path / "d.jsonl", rows)
    out = str(tmp_path / "i.smidx")
    report = ops.build_index_report(dataset, out, split="train")
    assert report["stats"]["captions"] == 3
    report = ops.build_index_report(dataset, out, split=None)
    assert report["stats"]["captions"] == 4


def score_fixture(tmp_path, rows, refs=None):
    input_path = write_jsonl(tmp_path / "in.jsonl", rows)
    refs_path = write_jsonl(tmp_path / "refs.jsonl", refs) if refs else None
    return input_path, refs_path


def test_score_report_onlystyle_per_row_styles(tmp_path, hand_index):
    input_path, _ = score_fixture(
        tmp_path,
        [
            {"caption": "a happy dog runs", "style": "happy"},
            {"caption": "the dog growls", "style": "angry"},
        ],
    )
    report = ops.score_report(hand_index, "onlystyle", input_path)
    scores = [r["score"] for r in report["rows"]]
    want = [
        oracle.only_style(HAND, "a happy dog runs".split(), "happy"),
        oracle.only_style(HAND, "the dog growls".split(), "angry"),
    ]
    assert scores == pytest.approx(want, abs=APPROX)
    assert report["aggregate"] == pytest.approx(sum(want) / 2, abs=APPROX)
    assert report["aggregation"] == "mean"
    assert report["rows"][0]["style"] == "happy"
    assert report["count"] == 2


def test_score_report_global_style_fallback(tmp_path, hand_index):
    input_path, _ = score_fixture(
        tmp_path,
        [{"caption": "a happy dog runs"}, {"caption": "a dog", "style": "plain"}],
    )
    report = ops.score_report(hand_index, "onlystyle", input_path, style="happy")
    assert report["rows"][0]["style"] == "happy"
    # a row's own style wins over the global fallback
    assert report["rows"][1]["style"] == "plain"


def test_score_report_missing_style_names_line(tmp_path, hand_index):
    input_path, _ = score_fixture(
        tmp_path, [{"caption": "x", "style": "happy"}, {"caption": "y"}]
    )
    with pytest.raises(UsageError, match="line 2"):
        ops.score_report(hand_index, "onlystyle", input_path)


def test_score_report_stylecider(tmp_path, hand_index):
    input_path, refs_path = score_fixture(
        tmp_path,
        [{"caption": "a happy dog runs", "style": "happy"}],
        refs=[{"caption": "the happy cat sleeps"}],
    )
    report = ops.score_report(hand_index, "stylecider", input_path, refs_path=refs_path)
    want = oracle.style_cider(
        HAND, "a happy dog runs".split(), "the happy cat sleeps".split(), "happy"
    )
    assert report["rows"][0]["score"] == pytest.approx(want, abs=APPROX)


def test_score_report_reference_metrics_require_refs(tmp_path, hand_index):
    input_path, _ = score_fixture(tmp_path, [{"caption": "x", "style": "happy"}])
    for metric in ("stylecider", "cider", "bleu1", "bleu4"):
        with pytest.raises(UsageError, match="requires --refs"):
            ops.score_report(hand_index, metric, input_path)


def test_score_report_refs_must_pair_by_line(tmp_path, hand_index):
    input_path, refs_path = score_fixture(
        tmp_path,
        [{"caption": "a"}, {"caption": "b"}],
        refs=[{"caption": "c"}],
    )
    with pytest.raises(UsageError, match="paired by line"):
        ops.score_report(hand_index, "cider", input_path, refs_path=refs_path)


def test_score_report_bleu_pools_aggregate(tmp_path, hand_index):
    rows = [{"caption": "sun moon"}, {"caption": "dog"}]
    refs = [{"caption": "sun moon"}, {"caption": "cat"}]
    input_path, refs_path = score_fixture(tmp_path, rows, refs=refs)
    report = ops.score_report(hand_index, "bleu1", input_path, refs_path=refs_path)
    assert report["aggregation"] == "pooled"
    # pooled clipped counts: (2 + 0) / (2 + 1), equal pooled lengths
    assert report["aggregate"] == pytest.approx(2 / 3, abs=APPROX)
    assert report["rows"][0]["score"] == pytest.approx(1.0, abs=APPROX)
    assert report["rows"][1]["score"] == 0.0


def test_score_report_unknown_metric(tmp_path, hand_index):
    input_path, _ = score_fixture(tmp_path, [{"caption": "x"}])
    with pytest.raises(UsageError, match="unknown metric"):
        ops.score_report(hand_index, "meteor", input_path)


def test_score_report_empty_input(tmp_path, hand_index):
    path = tmp_path / "in.jsonl"
    path.write_text("")
    with pytest.raises(DatasetError, match="no rows"):
        ops.score_report(hand_index, "onlystyle", str(path), style="happy")


def test_score_report_missing_caption_names_line(tmp_path, hand_index):
    input_path = write_jsonl(
        tmp_path / "in.jsonl", [{"caption": "ok"}, {"style": "happy"}]
    )
    with pytest.raises(DatasetError, match=r"in\.jsonl:2: missing or empty 'caption'"):
        ops.score_report(hand_index, "onlystyle", input_path, style="happy")


def test_score_report_threads_do_not_change_scores(tmp_path, hand_index):
    rows = [
        {"caption": " ".join(doc), "style": style}
        for style, docs in HAND.items()
        for doc in docs
    ]
    input_path, _ = score_fixture(tmp_path, rows)
    one = ops.score_report(hand_index, "onlystyle", input_path, threads=1)
    many = ops.score_report(hand_index, "onlystyle", input_path, threads=8)
    assert one["rows"] == many["rows"]
    assert one["aggregate"] == many["aggregate"]


def test_eval_gt_report_embeds_config(tmp_path, hand_index, hand_dataset):
    report = ops.eval_gt_report(
        hand_index, hand_dataset, split=None, mode="onlystyle", index_path="i.smidx"
    )
    assert report["config"]["dataset"] == hand_dataset
    assert report["config"]["index"] == "i.smidx"
    assert report["onlystyle"]["evaluated"] == 7
    assert "stylecider" not in report


def test_eval_models_report_validation(tmp_path, hand_index):
    gens = write_jsonl(
        tmp_path / "g.jsonl",
        [{"model": "m", "style": "happy", "caption": "a dog"}],
    )
    refs = write_jsonl(
        tmp_path / "r.jsonl",
        [{"image_id": "1", "style": "happy", "caption": "a dog"}],
    )
    report = ops.eval_models_report(hand_index, gens, refs)
    assert report["models"][0]["model"] == "m"

    bad = write_jsonl(tmp_path / "bad.jsonl", [{"style": "happy", "caption": "x"}])
    with pytest.raises(DatasetError, match="missing or empty 'model'"):
        ops.eval_models_report(hand_index, bad, refs)
    with pytest.raises(DatasetError, match="missing or empty 'image_id'"):
        ops.eval_models_report(hand_index, gens, bad)
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    with pytest.raises(DatasetError, match="no rows"):
        ops.eval_models_report(hand_index, str(empty), refs)


def test_rank_report_top_trims_only_the_listing(hand_index):
    report = ops.rank_report(hand_index, "a happy dog runs", target="plain", top=1)
    assert len(report["ranking"]) == 1
    assert report["styles"] == 3
    assert report["target_rank"] >= 1
    with pytest.raises(UsageError, match="top must be"):
        ops.rank_report(hand_index, "x", top=0)


def test_cng_report(hand_index):
    report = ops.cng_report(hand_index, ["happy", "zebra"], styles=["happy", "angry"])
    assert report["terms"] == ["happy", "zebra"]
    assert report["scores"][1] == [0.0, 0.0]


def test_corr_report():
    report = ops.corr_report([1, 2, 3], [3, 2, 1])
    assert report["spearman"] == -1.0
    assert report["config"]["scores"] == [1, 2, 3]
