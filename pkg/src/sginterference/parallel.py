"""Order-preserving fan-out of independent work units."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def parallel_map(fn, items, workers: int = 1) -> list:
    """``[fn(x) for x in items]``, optionally over a process pool.

    Results come back in input order, so the caller's reduction does not
    depend on the worker count.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    chunksize = max(1, len(items) // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunksize))
