"""Replica-level worker pool with a deterministic reduction order.

Results always come back in input order, so artifacts are identical for any
thread count.  Thread count resolution: explicit argument, then the
KPZLAB_THREADS environment variable, then 1.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count(requested=None) -> int:
    if requested is not None:
        return max(1, int(requested))
    env = os.environ.get("KPZLAB_THREADS")
    return max(1, int(env)) if env else 1


def make_map(threads=None):
    """An ordered map over items; sequential for a single thread."""
    n = thread_count(threads)
    if n == 1:
        return map

    def pooled(fn, items):
        items = list(items)
        with ThreadPoolExecutor(max_workers=n) as pool:
            return list(pool.map(fn, items))

    return pooled
