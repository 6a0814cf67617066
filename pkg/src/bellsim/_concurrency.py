"""Thread-pool helpers honoring the BELLSIM_THREADS cap."""

import os
from concurrent.futures import ThreadPoolExecutor


def worker_count():
    raw = os.environ.get("BELLSIM_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise ValueError(f"BELLSIM_THREADS is not an integer: {raw!r}")
    return min(4, os.cpu_count() or 1)


def map_ordered(fn, items):
    """Map over items, results in input order; parallel when allowed."""
    items = list(items)
    workers = worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
