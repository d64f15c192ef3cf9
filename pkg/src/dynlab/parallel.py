"""Order-preserving parallel map with deterministic results.

Reports must be byte-identical for any worker count, so results are always
assembled in submission order and the work function must be pure (no shared
state, seeds passed explicitly per item).
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, items, workers: int = 1) -> list:
    """Map fn over items, preserving order.

    workers <= 1 runs in-process; otherwise a process pool is used.  fn and
    the items must be picklable in that case.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
