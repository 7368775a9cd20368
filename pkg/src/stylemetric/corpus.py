"""JSONL caption dataset loading and summary statistics.

Dataset rows are JSON objects with required keys ``style`` and ``caption``
and optional ``image_id`` and ``split``:

    {"style": "Happy", "caption": "a dog ...", "image_id": "42", "split": "train"}
"""

import json
from dataclasses import dataclass, field

from .errors import DatasetError
from .text import tokenize


@dataclass
class CaptionRecord:
    style: str
    caption: str
    tokens: list = field(default_factory=list)
    image_id: str | None = None
    split: str | None = None
    line_no: int = 0


def iter_jsonl(path):
    """Yield (line_no, object) for each non-blank line of a JSONL file."""
    try:
        fh = open(path, encoding="utf-8")
    except OSError as e:
        raise DatasetError(f"cannot read {path}: {e.strerror or e}") from e
    with fh:
        for line_no, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as e:
                raise DatasetError(f"{path}:{line_no}: invalid JSON: {e.msg}") from e
            if not isinstance(obj, dict):
                raise DatasetError(f"{path}:{line_no}: row is not a JSON object")
            yield line_no, obj


def _require_text(row, key, path, line_no):
    value = row.get(key)
    if not isinstance(value, str) or not value.strip():
        raise DatasetError(f"{path}:{line_no}: missing or empty {key!r}")
    return value


def load_dataset(path, split="train"):
    """Read a JSONL caption file and group its rows by style.

    Rows whose ``split`` field differs from the requested one are dropped;
    rows without a ``split`` field always pass, and ``split=None`` disables
    filtering entirely. Returns (registry, corpora): the registry lists
    styles by first appearance, corpora maps each style to its records.
    """
    registry = []
    corpora = {}
    for line_no, row in iter_jsonl(path):
        style = _require_text(row, "style", path, line_no).strip()
        caption = _require_text(row, "caption", path, line_no)
        row_split = row.get("split")
        if split is not None and row_split is not None and row_split != split:
            continue
        image_id = row.get("image_id")
        rec = CaptionRecord(
            style=style,
            caption=caption,
            tokens=tokenize(caption),
            image_id=None if image_id is None else str(image_id),
            split=row_split,
            line_no=line_no,
        )
        if style not in corpora:
            registry.append(style)
            corpora[style] = []
        corpora[style].append(rec)
    if not registry:
        suffix = f" for split {split!r}" if split is not None else ""
        raise DatasetError(f"{path}: no usable rows{suffix}")
    if len(registry) < 2:
        raise DatasetError(f"{path}: fewer than 2 styles")
    return registry, corpora


def dataset_stats(registry, corpora):
    """Deterministic summary of a loaded dataset."""
    per_style = {s: len(corpora[s]) for s in registry}
    images = {r.image_id for docs in corpora.values() for r in docs if r.image_id}
    vocab = set()
    tokens = 0
    for docs in corpora.values():
        for r in docs:
            tokens += len(r.tokens)
            vocab.update(r.tokens)
    return {
        "styles": len(registry),
        "captions": sum(per_style.values()),
        "per_style": per_style,
        "images": len(images),
        "tokens": tokens,
        "vocab": len(vocab),
    }
