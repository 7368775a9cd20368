"""Contrastive n-gram index: build, query, persistence.

For every order n in 1..4 and every n-gram observed in any style corpus the
index stores, per style that contains it, the ECDF of its document frequency
within that style. A score under style p is reconstructed at query time from

    score_p(t) = (S * e_p(t) - sum_s e_s(t)) / (S * occur(t))

where e_s is the stored ECDF value (0 when the style lacks t), S the number
of styles and occur(t) the number of styles containing t. This equals the
averaged pairwise ECDF differences of the definition, divided by occur(t).

n-grams are encoded as fixed-width byte keys: each token maps to a positive
32-bit id (big-endian), a window of n tokens becomes the 4n-byte
concatenation. Key arrays are kept sorted so lookups are binary searches.
Token id 0 is reserved for out-of-vocabulary tokens; no stored key contains
it, so any window with an unknown token misses the table and scores 0,
which is exactly the convention for never-seen n-grams.
"""

import bisect
import hashlib
import json
import struct
from collections import Counter

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import IndexFormatError, IndexVersionError, UsageError
from .text import ORDERS, TOKENIZER_RULE, extract_ngrams

MAGIC = b"SMCNGIDX"
FORMAT_VERSION = 1

_ID_DTYPE = ">u4"


class DocFreqTable:
    """Document frequencies of one style at one order, plus their sorted list."""

    def __init__(self, style, order, df):
        self.style = style
        self.order = order
        self.df = dict(df)
        self.freq_list = sorted(self.df.values())


def doc_frequency(documents, order, style=None):
    """Per-document presence counts over a list of token lists."""
    df = Counter()
    for doc in documents:
        for t in set(extract_ngrams(doc, order)):
            df[t] += 1
    return DocFreqTable(style, order, df)


def ecdf(table, f):
    """Fraction of stored frequencies <= f; 0.0 when none are stored."""
    if not table.freq_list:
        return 0.0
    return bisect.bisect_right(table.freq_list, f) / len(table.freq_list)


class _OrderTable:
    """Sorted n-gram keys with CSR-style rows of per-style ECDF values.

    entry_pos holds row*S+style for each stored (n-gram, style) pair and is
    globally ascending, so one binary search finds a single style's value.
    """

    __slots__ = ("keys", "indptr", "entry_pos", "ecdf_vals", "ecdf_sum")

    def __init__(self, keys, indptr, entry_pos, ecdf_vals, ecdf_sum):
        self.keys = keys
        self.indptr = indptr
        self.entry_pos = entry_pos
        self.ecdf_vals = ecdf_vals
        self.ecdf_sum = ecdf_sum

    @staticmethod
    def empty(order):
        return _OrderTable(
            np.zeros(0, dtype=f"S{4 * order}"),
            np.zeros(1, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.float64),
            np.zeros(0, dtype=np.float64),
        )


class CngIndex:
    """Immutable per-style n-gram statistics over a fixed style registry."""

    def __init__(self, styles, vocab, tables, build_log=None):
        self.styles = list(styles)
        self.style_index = {s: i for i, s in enumerate(self.styles)}
        self.vocab = list(vocab)
        self._tok2id = {t: i + 1 for i, t in enumerate(self.vocab)}
        self._tables = tables
        self.build_log = list(build_log or [])

    @property
    def num_styles(self):
        return len(self.styles)

    @property
    def orders(self):
        return ORDERS

    def table_sizes(self):
        """Distinct n-gram count per order."""
        return {n: len(self._tables[n].keys) for n in ORDERS}

    def require_style(self, style):
        ix = self.style_index.get(style)
        if ix is None:
            raise UsageError(f"unknown style: {style!r}")
        return ix

    def token_ids(self, tokens):
        """Token ids for a caption; 0 marks out-of-vocabulary tokens."""
        get = self._tok2id.get
        return np.array([get(t, 0) for t in tokens], dtype=_ID_DTYPE)

    def window_keys(self, ids, order):
        """Byte keys of the caption's order-n windows, duplicates preserved."""
        if len(ids) < order:
            return np.zeros(0, dtype=f"S{4 * order}")
        w = sliding_window_view(ids, order)
        return np.frombuffer(np.ascontiguousarray(w).tobytes(), dtype=f"S{4 * order}")

    def order_scores(self, order, keys, style_ix):
        """Scores of an array of order-n keys under one style (0 for misses)."""
        t = self._tables[order]
        out = np.zeros(len(keys), dtype=np.float64)
        if len(keys) == 0 or len(t.keys) == 0:
            return out
        s = self.num_styles
        pos = np.searchsorted(t.keys, keys)
        pos = np.minimum(pos, len(t.keys) - 1)
        hit = t.keys[pos] == keys
        if not hit.any():
            return out
        rows = pos[hit].astype(np.int64)
        occ = (t.indptr[rows + 1] - t.indptr[rows]).astype(np.float64)
        want = rows * s + style_ix
        pe = np.searchsorted(t.entry_pos, want)
        pe = np.minimum(pe, len(t.entry_pos) - 1)
        e_p = np.where(t.entry_pos[pe] == want, t.ecdf_vals[pe], 0.0)
        out[hit] = (s * e_p - t.ecdf_sum[rows]) / (s * occ)
        return out

    def lookup_rows(self, order, keys):
        """(row_ids, hit_mask) of order-n keys; row_ids only for hits."""
        t = self._tables[order]
        if len(keys) == 0 or len(t.keys) == 0:
            return np.zeros(0, dtype=np.int64), np.zeros(len(keys), dtype=bool)
        pos = np.searchsorted(t.keys, keys)
        pos = np.minimum(pos, len(t.keys) - 1)
        hit = t.keys[pos] == keys
        return pos[hit].astype(np.int64), hit


def build_index(corpora, registry=None):
    """Build a CngIndex from {style: list of token lists}.

    The registry (style order) defaults to the mapping's insertion order.
    """
    styles = list(registry) if registry is not None else list(corpora)
    if len(styles) < 2:
        raise UsageError("fewer than 2 styles")
    for s in styles:
        if not corpora.get(s):
            raise UsageError(f"style {s!r} has an empty corpus")

    build_log = []
    docs = []
    doc_style = []
    for si, s in enumerate(styles):
        for d in corpora[s]:
            docs.append(d)
            doc_style.append(si)
    doc_style = np.asarray(doc_style, dtype=np.int64)
    lens = np.array([len(d) for d in docs], dtype=np.int64)
    flat_tokens = [t for d in docs for t in d]
    if flat_tokens:
        vocab_arr, inv = np.unique(np.asarray(flat_tokens, dtype=np.str_), return_inverse=True)
        vocab = vocab_arr.tolist()
        flat_ids = (inv.astype(np.int64) + 1).astype(_ID_DTYPE)
    else:
        vocab = []
        flat_ids = np.zeros(0, dtype=_ID_DTYPE)
    # doc index of every token position; windows that cross a document
    # boundary are filtered out below
    pos_doc = np.repeat(np.arange(len(docs), dtype=np.int64), lens)

    tables = {}
    for n in ORDERS:
        tables[n] = _build_order(flat_ids, pos_doc, doc_style, len(styles), styles, n, build_log)
    for s in styles:
        build_log.append(f"style {s!r}: {len(corpora[s])} documents")
    for n in ORDERS:
        build_log.append(f"order {n}: {len(tables[n].keys)} distinct n-grams")
    return CngIndex(styles, vocab, tables, build_log)


def _build_order(flat_ids, pos_doc, doc_style, n_styles, styles, order, build_log):
    total = len(flat_ids)
    if total >= order:
        windows = sliding_window_view(flat_ids, order)
        valid = pos_doc[: total - order + 1] == pos_doc[order - 1 :]
        windows = windows[valid]
        wdoc = pos_doc[: total - order + 1][valid]
    else:
        windows = np.zeros((0, order), dtype=_ID_DTYPE)
        wdoc = np.zeros(0, dtype=np.int64)
    if len(windows) == 0:
        build_log.append(f"order {order}: no n-grams in any style")
        return _OrderTable.empty(order)

    # distinct (n-gram, document) pairs: append the doc id to the window key
    # and dedupe; document frequency is then a run-length count
    pair = np.empty((len(windows), order + 1), dtype=_ID_DTYPE)
    pair[:, :order] = windows
    pair[:, order] = wdoc.astype(_ID_DTYPE)
    pairs = np.unique(np.frombuffer(pair.tobytes(), dtype=f"S{4 * (order + 1)}"))
    buf = np.frombuffer(pairs.tobytes(), dtype=_ID_DTYPE).reshape(-1, order + 1)
    term_keys = np.frombuffer(np.ascontiguousarray(buf[:, :order]).tobytes(), dtype=f"S{4 * order}")
    pstyle = doc_style[buf[:, order].astype(np.int64)]

    # pairs sort by key bytes then doc id, and documents are numbered
    # style-contiguously, so styles form ascending runs inside each key run
    m = len(pairs)
    new_term = np.empty(m, dtype=bool)
    new_term[0] = True
    new_term[1:] = term_keys[1:] != term_keys[:-1]
    new_run = new_term.copy()
    new_run[1:] |= pstyle[1:] != pstyle[:-1]
    run_starts = np.flatnonzero(new_run)
    df = np.diff(np.append(run_starts, m))
    run_is_new_term = new_term[run_starts]
    run_style = pstyle[run_starts]

    # per-style ECDF of each run's df over that style's observed frequencies
    ecdf_vals = np.empty(len(df), dtype=np.float64)
    by_style = np.argsort(run_style, kind="stable")
    sdf = df[by_style]
    bounds = np.searchsorted(run_style[by_style], np.arange(n_styles + 1))
    for s in range(n_styles):
        lo, hi = bounds[s], bounds[s + 1]
        if lo == hi:
            build_log.append(f"order {order}: style {styles[s]!r} has no n-grams")
            continue
        freqs = np.sort(sdf[lo:hi])
        ecdf_vals[by_style[lo:hi]] = np.searchsorted(freqs, sdf[lo:hi], side="right") / len(freqs)

    keys = term_keys[run_starts[run_is_new_term]]
    indptr = np.append(np.flatnonzero(run_is_new_term), len(df)).astype(np.int64)
    row_of_run = np.cumsum(run_is_new_term, dtype=np.int64) - 1
    entry_pos = row_of_run * n_styles + run_style
    ecdf_sum = np.add.reduceat(ecdf_vals, indptr[:-1])
    return _OrderTable(keys, indptr, entry_pos, ecdf_vals, ecdf_sum)


def cng_score(index, term, style):
    """Score of a single n-gram (sequence of 1..4 tokens) under one style."""
    style_ix = index.require_style(style)
    term = tuple(term)
    if len(term) not in ORDERS:
        raise UsageError(f"n-gram order must be 1..4, got {len(term)}")
    ids = index.token_ids(list(term))
    if (ids == 0).any():
        return 0.0
    keys = index.window_keys(ids, len(term))
    return float(index.order_scores(len(term), keys, style_ix)[0])


def save_index(index, path):
    """Write a versioned, checksummed single-file snapshot of the index."""
    arrays = []
    payload = []

    def add(name, arr):
        data = arr.tobytes()
        arrays.append(
            {"name": name, "dtype": arr.dtype.str, "shape": list(arr.shape), "nbytes": len(data)}
        )
        payload.append(data)

    vocab_blob = "\n".join(index.vocab).encode("utf-8")
    for n in ORDERS:
        t = index._tables[n]
        add(f"keys{n}", t.keys)
        add(f"indptr{n}", t.indptr)
        add(f"entry_pos{n}", t.entry_pos)
        add(f"ecdf_vals{n}", t.ecdf_vals)
        add(f"ecdf_sum{n}", t.ecdf_sum)
    manifest = {
        "format_version": FORMAT_VERSION,
        "tokenizer_rule": TOKENIZER_RULE,
        "styles": index.styles,
        "orders": list(ORDERS),
        "vocab_nbytes": len(vocab_blob),
        "arrays": arrays,
    }
    head = json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")
    body = bytearray()
    body += MAGIC
    body += struct.pack("<IQ", FORMAT_VERSION, len(head))
    body += head
    body += vocab_blob
    for data in payload:
        body += data
    digest = hashlib.sha256(bytes(body)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(body))
        fh.write(digest)


def load_index(path):
    """Read an index file, verifying magic, version, and checksum in order."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as e:
        raise IndexFormatError(f"cannot read index file {path}: {e.strerror or e}") from e
    head_off = len(MAGIC) + struct.calcsize("<IQ")
    if len(data) < head_off or not data.startswith(MAGIC):
        raise IndexFormatError(f"{path}: not an index file (bad magic)")
    version, head_len = struct.unpack_from("<IQ", data, len(MAGIC))
    if version != FORMAT_VERSION:
        raise IndexVersionError(
            f"{path}: unsupported index format version {version} (expected {FORMAT_VERSION})"
        )
    if len(data) < head_off + 32:
        raise IndexFormatError(f"{path}: truncated index file")
    body, digest = data[:-32], data[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise IndexFormatError(f"{path}: checksum mismatch (corrupt index file)")
    try:
        manifest = json.loads(body[head_off : head_off + head_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise IndexFormatError(f"{path}: unreadable index manifest") from e
    rule = manifest.get("tokenizer_rule")
    if rule != TOKENIZER_RULE:
        raise IndexFormatError(
            f"{path}: index built with tokenizer rule {rule!r}, this build uses {TOKENIZER_RULE!r}"
        )
    offset = head_off + head_len
    vocab_nbytes = manifest["vocab_nbytes"]
    vocab_blob = body[offset : offset + vocab_nbytes]
    vocab = vocab_blob.decode("utf-8").split("\n") if vocab_nbytes else []
    offset += vocab_nbytes
    raw = {}
    for spec in manifest["arrays"]:
        nbytes = spec["nbytes"]
        arr = np.frombuffer(body, dtype=spec["dtype"], count=int(np.prod(spec["shape"], dtype=np.int64)), offset=offset)
        raw[spec["name"]] = arr.reshape(spec["shape"])
        offset += nbytes
    tables = {}
    for n in ORDERS:
        tables[n] = _OrderTable(
            raw[f"keys{n}"],
            raw[f"indptr{n}"],
            raw[f"entry_pos{n}"],
            raw[f"ecdf_vals{n}"],
            raw[f"ecdf_sum{n}"],
        )
    return CngIndex(manifest["styles"], vocab, tables)
