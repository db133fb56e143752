"""Order-preserving map over worker processes."""

from concurrent.futures import ProcessPoolExecutor


def ordered_map(fn, items, workers=1):
    """``list(map(fn, items))``, optionally spread over processes.

    Results come back in input order, so reductions over them are
    independent of ``workers``.
    """
    items = list(items)
    if workers is None or workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
