"""Server-side cache of loaded indexes, keyed by file identity."""

import os
import threading

from ..cng import load_index
from ..errors import IndexFormatError


class IndexCache:
    """Loads index files on demand and reuses them until the file changes."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries = {}

    def get(self, path):
        try:
            st = os.stat(path)
        except OSError as e:
            raise IndexFormatError(f"cannot read index file {path}: {e.strerror or e}") from e
        key = (os.path.abspath(path), st.st_size, st.st_mtime_ns)
        with self._lock:
            index = self._entries.get(key)
        if index is not None:
            return index
        index = load_index(path)
        with self._lock:
            # drop stale versions of the same file
            for old in [k for k in self._entries if k[0] == key[0] and k != key]:
                del self._entries[old]
            self._entries[key] = index
        return index
