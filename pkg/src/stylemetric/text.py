"""Tokenization and n-gram extraction."""

import re

# Identifies the tokenization scheme inside index manifests so an index can
# never be queried with a different tokenizer than it was built with. Bump
# when the rule changes.
TOKENIZER_RULE = "lowercase-nonalnum-split-v1"

# n-gram orders used by every metric in the package
ORDERS = (1, 2, 3, 4)

_SPLIT = re.compile(r"[\W_]+", re.UNICODE)


def tokenize(text):
    """Lowercase and split on runs of non-alphanumeric characters.

    Underscores count as separators. Idempotent: tokenizing the joined
    output gives the same token list back.
    """
    return [t for t in _SPLIT.split(text.lower()) if t]


def extract_ngrams(tokens, n):
    """Contiguous length-n windows as tuples, duplicates preserved."""
    return [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]
